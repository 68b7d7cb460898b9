"""Run configuration: YAML files, environment overrides and command-line settings.

Precedence is flags > environment > file > defaults.  Environment variables
use the prefix ``FUSEDFOCUS_`` with ``__`` separating nesting levels, e.g.
``FUSEDFOCUS_PARAMS__EPSILON=-0.04`` or ``FUSEDFOCUS_SCAN__THREADS=4``.
Values are parsed as YAML scalars or flow sequences.
"""
from __future__ import annotations

import copy
import os
import re
from typing import Any, Mapping, Optional

import yaml

from .errors import ConfigError

SCHEMA_VERSION = 1
ENV_PREFIX = "FUSEDFOCUS_"
# environment variables with this prefix that are not configuration keys
ENV_RESERVED = {"FUSEDFOCUS_PURE_PYTHON", "FUSEDFOCUS_NO_EXT"}

SYSTEMS = ("welander-nonsmooth", "welander-smooth", "custom")
FORMATS = ("csv", "json", "svg")

DEFAULTS: dict = {
    "schema": SCHEMA_VERSION,
    "system": "welander-nonsmooth",
    "seed": 0,
    "params": {"alpha": 0.8, "beta": 0.5, "epsilon": 0.0, "a": 0.0},
    "integration": {
        "rtol": 1e-9,
        "atol": 1e-11,
        "t_span": [0.0, 200.0],
        "x0": [0.5, 0.2],
        "chart": "xy",
        "max_events": 5000,
    },
    "blowup": {"a": 0.01, "eps_range": [-0.1, 0.05], "n": 301, "amplitude": False},
    "scan": {
        "mode": "nonsmooth",
        "eps_grid": [-0.04, 0.0, 0.04],
        "a_list": [0.001],
        "threads": 1,
        "budget": {"t_final": 500.0, "seeds": 4, "max_steps": 2000000, "max_events": 4000},
    },
    "output": {"dir": "out", "format": "csv", "stdout": False},
}


class _Loader(yaml.SafeLoader):
    """Safe loader that also reads exponent-only literals such as ``1e-3`` as floats."""


_Loader.add_implicit_resolver(
    "tag:yaml.org,2002:float",
    re.compile(r"""^(?:[-+]?(?:[0-9][0-9_]*)\.[0-9_]*(?:[eE][-+]?[0-9]+)?
                  |[-+]?(?:[0-9][0-9_]*)(?:[eE][-+]?[0-9]+)
                  |\.[0-9_]+(?:[eE][-+]?[0-9]+)?
                  |[-+]?\.(?:inf|Inf|INF)
                  |\.(?:nan|NaN|NAN))$""", re.X),
    list("-+0123456789."))


def _load(text):
    return yaml.load(text, Loader=_Loader)


def _merge(base: dict, override: Mapping, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, val in override.items():
        where = f"{path}{key}"
        if key not in base:
            raise ConfigError(f"unknown configuration key '{where}'")
        if isinstance(base[key], dict):
            if not isinstance(val, Mapping):
                raise ConfigError(f"'{where}' must be a mapping")
            out[key] = _merge(base[key], val, where + ".")
        else:
            out[key] = val
    return out


def load_file(path: Optional[str]) -> dict:
    if path is None:
        return {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = _load(fh)
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    schema = data.get("schema", SCHEMA_VERSION)
    if schema != SCHEMA_VERSION:
        raise ConfigError(f"{path}: unsupported schema version {schema!r}")
    return data


def _set_path(tree: dict, dotted: str, raw: Any) -> None:
    parts = [p for p in dotted.split(".") if p]
    if not parts:
        raise ConfigError("empty configuration key")
    node = tree
    for p in parts[:-1]:
        node = node.setdefault(p, {})
        if not isinstance(node, dict):
            raise ConfigError(f"'{dotted}' does not name a nested key")
    node[parts[-1]] = raw


def _parse_scalar(text: str) -> Any:
    try:
        return _load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse value {text!r}: {exc}") from exc


def env_overrides(environ: Optional[Mapping[str, str]] = None) -> dict:
    environ = os.environ if environ is None else environ
    tree: dict = {}
    for name in sorted(environ):
        if not name.startswith(ENV_PREFIX) or name in ENV_RESERVED:
            continue
        dotted = name[len(ENV_PREFIX):].lower().replace("__", ".")
        _set_path(tree, dotted, _parse_scalar(environ[name]))
    return tree


def flag_overrides(settings: Optional[list] = None, **flags) -> dict:
    """Overrides from ``--set key.path=value`` entries and the dedicated global flags."""
    tree: dict = {}
    for item in settings or ():
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, val = item.split("=", 1)
        _set_path(tree, key.strip(), _parse_scalar(val))
    mapping = {"out": "output.dir", "format": "output.format", "stdout": "output.stdout",
               "seed": "seed", "threads": "scan.threads"}
    for name, dotted in mapping.items():
        if flags.get(name) is not None:
            _set_path(tree, dotted, flags[name])
    return tree


def resolve(path: Optional[str] = None, environ: Optional[Mapping[str, str]] = None,
            settings: Optional[list] = None, **flags) -> dict:
    cfg = _merge(DEFAULTS, load_file(path))
    cfg = _merge(cfg, env_overrides(environ))
    cfg = _merge(cfg, flag_overrides(settings, **flags))
    validate(cfg)
    return cfg


def _num(v, where):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"'{where}' must be a number, got {v!r}")
    return float(v)


def _num_list(v, where, min_len=1):
    if not isinstance(v, (list, tuple)) or len(v) < min_len:
        raise ConfigError(f"'{where}' must be a list of at least {min_len} numbers")
    return [_num(x, where) for x in v]


def validate(cfg: dict) -> None:
    if cfg["schema"] != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema version {cfg['schema']!r}")
    if cfg["system"] not in SYSTEMS:
        raise ConfigError(f"system must be one of {SYSTEMS}")
    if cfg["system"] == "custom":
        raise ConfigError("custom systems are built in Python, not from a config file")
    for k, v in cfg["params"].items():
        _num(v, f"params.{k}")
    integ = cfg["integration"]
    t_span = _num_list(integ["t_span"], "integration.t_span", 2)
    if len(t_span) != 2 or not t_span[1] > t_span[0]:
        raise ConfigError("integration.t_span must be [t0, t1] with t1 > t0")
    if integ["x0"] != "random":
        if len(_num_list(integ["x0"], "integration.x0", 2)) != 2:
            raise ConfigError("integration.x0 must have two components")
    if integ["chart"] not in ("xy", "TS"):
        raise ConfigError("integration.chart must be 'xy' or 'TS'")
    for k in ("rtol", "atol"):
        if not _num(integ[k], f"integration.{k}") > 0.0:
            raise ConfigError(f"integration.{k} must be positive")
    if integ["max_events"] is not None and int(integ["max_events"]) <= 0:
        raise ConfigError("integration.max_events must be positive")
    b = cfg["blowup"]
    _num(b["a"], "blowup.a")
    rng = _num_list(b["eps_range"], "blowup.eps_range", 2)
    if len(rng) != 2 or not rng[1] > rng[0]:
        raise ConfigError("blowup.eps_range must be [lo, hi] with hi > lo")
    if not isinstance(b["n"], int) or b["n"] < 3:
        raise ConfigError("blowup.n must be an integer >= 3")
    s = cfg["scan"]
    if s["mode"] not in ("nonsmooth", "smooth"):
        raise ConfigError("scan.mode must be 'nonsmooth' or 'smooth'")
    _num_list(s["eps_grid"], "scan.eps_grid")
    _num_list(s["a_list"], "scan.a_list")
    if not isinstance(s["threads"], int) or s["threads"] < 1:
        raise ConfigError("scan.threads must be a positive integer")
    for k, v in s["budget"].items():
        _num(v, f"scan.budget.{k}")
    o = cfg["output"]
    if o["format"] not in FORMATS:
        raise ConfigError(f"output.format must be one of {FORMATS}")
    if not isinstance(o["stdout"], bool):
        raise ConfigError("output.stdout must be true or false")
    if not isinstance(cfg["seed"], int):
        raise ConfigError("seed must be an integer")
