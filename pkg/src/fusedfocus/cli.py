"""Command-line front end.

Subcommands: ``simulate``, ``sliding``, ``blowup``, ``scan`` and ``verify``.
Exit codes: 0 success, 1 configuration error, 2 numerical failure (including
failed acceptance criteria), 3 I/O error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from typing import Optional

import numpy as np

from . import blowup, config, scan
from .errors import ConfigError, FusedFocusError, NotFound
from .filippov import BoundaryKind, classify_boundary, find_tangencies
from .integrator import IntegrationOptions, integrate
from .svg import Figure, Marker, Series
from .welander import (WelanderParams, ds_dlambda, from_xy, nonsmooth_system, pseudoequilibrium,
                       sliding_boundaries, to_xy, virtual_equilibria)

log = logging.getLogger("fusedfocus")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICS, EXIT_IO = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="YAML run configuration")
    common.add_argument("--out", metavar="DIR", help="output directory")
    common.add_argument("--format", choices=config.FORMATS, help="primary output format")
    common.add_argument("--seed", type=int, help="seed for randomized initial conditions")
    common.add_argument("--threads", type=int, help="worker threads for scans")
    common.add_argument("--stdout", action="store_const", const=True, default=None,
                        help="write the data product to stdout instead of files")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override a configuration entry, e.g. params.epsilon=-0.04")
    common.add_argument("-v", "--verbose", action="count", default=0)
    p = _Parser(prog="fusedfocus", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("simulate", parents=[common], help="integrate one trajectory")
    sub.add_parser("sliding", parents=[common], help="sliding-region report")
    sub.add_parser("blowup", parents=[common], help="trace/discriminant curves and Hopf point")
    sub.add_parser("scan", parents=[common], help="bifurcation diagram over a parameter grid")
    v = sub.add_parser("verify", parents=[common], help="run the acceptance criteria")
    v.add_argument("--only", type=int, action="append", help="run only the given criterion number")
    return p


# -- output helpers -----------------------------------------------------------

class _Sink:
    def __init__(self, cfg: dict):
        self.dir = cfg["output"]["dir"]
        self.stdout = cfg["output"]["stdout"]
        self.fmt = cfg["output"]["format"]
        self.written: list[str] = []

    def emit(self, name: str, text: str, primary: bool = False) -> None:
        if self.stdout:
            if primary:
                sys.stdout.write(text)
            return
        os.makedirs(self.dir, exist_ok=True)
        path = os.path.join(self.dir, name)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        self.written.append(path)
        log.info("wrote %s", path)


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow(["" if v is None else (repr(float(v)) if isinstance(v, (float, np.floating)) else v)
                    for v in r])
    return buf.getvalue()


def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _params(cfg: dict) -> WelanderParams:
    return WelanderParams.from_dict(cfg["params"])


# -- simulate -----------------------------------------------------------------

def cmd_simulate(cfg: dict, sink: _Sink) -> int:
    p = _params(cfg)
    integ = cfg["integration"]
    chart = integ["chart"]
    if integ["x0"] == "random":
        rng = np.random.default_rng(cfg["seed"])
        x0 = np.array([rng.uniform(0.2, 1.0), rng.uniform(-0.3, 0.3)])
        chart_x0 = "xy"
    else:
        x0 = np.array(integ["x0"], dtype=float)
        chart_x0 = chart
    if chart_x0 == "TS":
        x0 = to_xy(x0, p)
    if cfg["system"] == "welander-smooth":
        if p.a <= 0.0:
            raise ConfigError("welander-smooth needs params.a > 0")
        sysm = blowup.smooth_xy_system(p)
    else:
        if p.a != 0.0:
            log.warning("params.a is ignored by the nonsmooth system")
        sysm = nonsmooth_system(p.replace(a=0.0))
    opts = IntegrationOptions(rtol=float(integ["rtol"]), atol=float(integ["atol"]),
                              max_events=integ["max_events"])
    tr = integrate(sysm, x0, tuple(integ["t_span"]), opts)
    ev_at = {}
    for e in tr.events:
        ev_at.setdefault(float(e.t), []).append(e.kind.value)
    rows = []
    for seg in tr.segments:
        for t, z in zip(seg.ts, seg.xs):
            if rows and rows[-1][0] == float(t):
                continue
            TS = from_xy(z, p)
            rows.append((float(t), float(z[0]), float(z[1]), float(TS[0]), float(TS[1]),
                         seg.mode.value, ";".join(ev_at.get(float(t), []))))
    table = _csv(("t", "x", "y", "T", "S", "mode", "event"), rows)
    summary = {
        "system": cfg["system"], "params": p.to_dict(), "status": tr.status.value,
        "t_final": tr.t_final, "x_final": [float(v) for v in tr.x_final],
        "final_mode": tr.final_mode.value,
        "events": [{"kind": e.kind.value, "t": e.t, "x": [float(v) for v in e.x]} for e in tr.events],
    }
    fmt = sink.fmt
    sink.emit("trajectory.csv", table, primary=fmt == "csv")
    sink.emit("trajectory.json", _json(summary), primary=fmt == "json")
    if fmt == "svg" or not sink.stdout:
        sink.emit("trajectory.svg", _phase_svg(p, rows, chart), primary=fmt == "svg")
    return EXIT_OK


def _phase_svg(p: WelanderParams, rows, chart: str) -> str:
    X = np.array([[r[1], r[2], r[3], r[4]] for r in rows])
    i, j = (0, 1) if chart == "xy" else (2, 3)
    fig = Figure(title=f"phase portrait, eps={p.epsilon:g}, a={p.a:g}",
                 xlabel="x" if chart == "xy" else "T", ylabel="y" if chart == "xy" else "S")
    fig.series.append(Series(X[:, i], X[:, j], "black", "trajectory"))
    xs = np.linspace(0.0, 1.1, 2)
    if chart == "xy":
        fig.series.append(Series(xs, 0 * xs, "gray", "switching line", dashed=True))
    else:
        fig.series.append(Series(xs, p.alpha * xs + p.epsilon, "gray", "switching line", dashed=True))
    try:
        tang = sliding_boundaries(p)
    except FusedFocusError:
        tang = ()
    for n, xt in enumerate(tang):
        pt = np.array([xt, 0.0]) if chart == "xy" else from_xy((xt, 0.0), p)
        fig.markers.append(Marker(float(pt[0]), float(pt[1]), "blue",
                                  "tangency" if n == 0 else "", hollow=True))
    for n, (k, (z, real)) in enumerate(sorted(virtual_equilibria(p).items())):
        pt = z if chart == "xy" else from_xy(z, p)
        fig.markers.append(Marker(float(pt[0]), float(pt[1]), "red" if not real else "green",
                                  ("virtual equilibrium" if not real else "equilibrium") if n == 0 else "",
                                  hollow=False))
    return fig.render()


# -- sliding --------------------------------------------------------------------

def sliding_report(p: WelanderParams) -> dict:
    p = p.replace(a=0.0)
    sysm = nonsmooth_system(p)
    lo, hi = sorted(sliding_boundaries(p))
    rep = {"eps": p.epsilon, "alpha": p.alpha, "beta": p.beta, "lo": lo, "hi": hi,
           "width": hi - lo, "dS_dlambda": ds_dlambda(p) + 0.0}
    if p.epsilon == 0.0:
        rep.update(stability="collapsed", collapsed=True, point=lo)
    else:
        kind = classify_boundary(sysm, np.array([0.5 * (lo + hi), 0.0])).kind
        rep["stability"] = {BoundaryKind.STABLE_SLIDING: "stable",
                            BoundaryKind.UNSTABLE_SLIDING: "unstable"}.get(kind, kind.value)
        rep["collapsed"] = False
    box = ((min(lo, 0.0) - 0.5, -1.0), (max(hi, 1.0) + 0.5, 1.0))
    rep["tangencies"] = [{"x": float(t.location[0]), "side": t.side.value,
                          "visibility": t.visibility.value}
                         for t in find_tangencies(sysm, box)]
    pe = pseudoequilibrium(p)
    rep["pseudoequilibrium"] = None if pe is None else {"x": pe[0], "k": pe[1]}
    return rep


def cmd_sliding(cfg: dict, sink: _Sink) -> int:
    rep = sliding_report(_params(cfg))
    sink.emit("sliding.json", _json(rep), primary=True)
    return EXIT_OK


# -- blowup -----------------------------------------------------------------------

def cmd_blowup(cfg: dict, sink: _Sink) -> int:
    b = cfg["blowup"]
    a = float(b["a"])
    if not a > 0.0:
        raise ConfigError("blowup.a must be positive (a = 0 is the nonsmooth model)")
    lo, hi = map(float, b["eps_range"])
    base = _params(cfg).replace(a=a)
    exp = blowup.local_expansion()
    rows = []
    seed = None
    for e in np.linspace(hi, lo, int(b["n"])):
        e = float(e)
        tr_a, disc_a = exp.trace(a, e), exp.discriminant(a, e)
        try:
            sp = blowup.equilibrium_spectrum(base.replace(epsilon=e), seed=seed)
            seed = (sp.x, sp.k)
            tr_n, disc_n = sp.trace, sp.discriminant
        except FusedFocusError:
            seed, tr_n, disc_n = None, None, None
        rows.append((e, tr_a, disc_a, tr_n, disc_n))
    rows.reverse()
    table = _csv(("eps", "trace", "discriminant", "trace_numeric", "discriminant_numeric"), rows)
    rec = {"a": a, "eps_base_line": exp.hopf_slope() * a,
           "eps_equilibrium_line": exp.equilibrium_hopf_slope() * a,
           "slope_base_line": exp.hopf_slope(), "slope_equilibrium_line": exp.equilibrium_hopf_slope()}
    try:
        h = blowup.verify_hopf_numerically(a, (lo, hi), n=int(b["n"]), base=base,
                                           check_amplitude=bool(b["amplitude"]))
        rec.update(eps_star=h.eps_star, ratio=h.ratio, transversality=h.transversality,
                   crossings=[{"eps": c.eps, "slope": c.slope, "frequency": c.frequency}
                              for c in h.crossings],
                   amplitude_slope=None if np.isnan(h.amplitude_slope) else h.amplitude_slope,
                   supercritical=h.supercritical)
    except NotFound as exc:
        rec.update(eps_star=None, note=str(exc))
    fmt = sink.fmt
    sink.emit("blowup.csv", table, primary=fmt == "csv")
    sink.emit("hopf.json", _json(rec), primary=fmt == "json")
    if fmt == "svg" or not sink.stdout:
        E = np.array([r[0] for r in rows])
        fig = Figure(title=f"trace and discriminant at a={a:g}", xlabel="eps", ylabel="value",
                     hlines=[0.0])
        fig.series.append(Series(E, [r[1] for r in rows], "red", "trace (expansion)"))
        fig.series.append(Series(E, [r[2] for r in rows], "blue", "discriminant (expansion)"))
        fig.series.append(Series(E, [np.nan if r[3] is None else r[3] for r in rows], "red",
                                 "trace (equilibrium)", dashed=True))
        fig.series.append(Series(E, [np.nan if r[4] is None else r[4] for r in rows], "blue",
                                 "discriminant (equilibrium)", dashed=True))
        sink.emit("blowup.svg", fig.render(), primary=fmt == "svg")
    return EXIT_OK


# -- scan ------------------------------------------------------------------------------

def cmd_scan(cfg: dict, sink: _Sink) -> int:
    s = cfg["scan"]
    bd = s["budget"]
    budget = scan.Budget(t_final=float(bd["t_final"]), seeds=int(bd["seeds"]),
                         max_steps=int(bd["max_steps"]), max_events=int(bd["max_events"]))
    base = _params(cfg)
    if s["mode"] == "nonsmooth":
        diag = scan.scan_nonsmooth(s["eps_grid"], budget, threads=s["threads"], base=base)
    else:
        diag = scan.scan_smooth(s["a_list"], s["eps_grid"], budget, threads=s["threads"], base=base)
    fmt = sink.fmt
    sink.emit("scan.csv", diag.to_csv(), primary=fmt == "csv")
    sink.emit("scan.json", diag.to_json(), primary=fmt == "json")
    if fmt == "svg" or not sink.stdout:
        fig = Figure(title=f"{s['mode']} scan: orbit amplitude", xlabel="eps", ylabel="amplitude")
        for a in sorted({p.a for p in diag.points}):
            pts = [p for p in diag.points if p.a == a]
            fig.series.append(Series([p.eps for p in pts],
                                     [p.orbit_amplitude or 0.0 for p in pts],
                                     "black" if a == 0 else "red", f"a={a:g}"))
        sink.emit("scan.svg", fig.render(), primary=fmt == "svg")
    return EXIT_OK


# -- verify ----------------------------------------------------------------------------

def cmd_verify(cfg: dict, sink: _Sink, only=None) -> int:
    from . import acceptance

    results = acceptance.run_all(only)
    for r in results:
        print(r.line(), flush=True)
        if r.number == 10:
            for inv in acceptance.invariant_suites.last_results:
                print(inv.line(), flush=True)
    rows = [(r.number, r.name, "PASS" if r.passed else "FAIL", r.seconds, r.detail) for r in results]
    if not sink.stdout:
        sink.emit("acceptance.csv", _csv(("criterion", "name", "result", "seconds", "detail"), rows))
    return EXIT_OK if all(r.passed for r in results) else EXIT_NUMERICS


COMMANDS = {"simulate": cmd_simulate, "sliding": cmd_sliding, "blowup": cmd_blowup,
            "scan": cmd_scan}


def main(argv: Optional[list] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = config.resolve(args.config, settings=args.set, out=args.out, format=args.format,
                             seed=args.seed, threads=args.threads, stdout=args.stdout)
        sink = _Sink(cfg)
        if args.command == "verify":
            return cmd_verify(cfg, sink, args.only)
        return COMMANDS[args.command](cfg, sink)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FusedFocusError as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICS
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
