"""Backend selection for the Dormand-Prince stepping core.

The compiled extension ``_ckernel`` is used when it imports; otherwise the
pure-Python mirror in ``_pykernel`` takes over.  Set ``FUSEDFOCUS_PURE_PYTHON=1``
to force the fallback (useful for benchmarking and for checking that both
backends agree).
"""
from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from . import _pykernel
from .errors import DomainError

FIXED_K = _pykernel.FIXED_K
ARCTAN_XY = _pykernel.ARCTAN_XY
BLOWUP = _pykernel.BLOWUP
FAST = _pykernel.FAST

STATUS_DONE = _pykernel.STATUS_DONE
STATUS_EVENT = _pykernel.STATUS_EVENT
STATUS_MAX_STEPS = _pykernel.STATUS_MAX_STEPS
STATUS_UNDERFLOW = _pykernel.STATUS_UNDERFLOW
STATUS_DOMAIN = _pykernel.STATUS_DOMAIN


def _load_compiled():
    if os.environ.get("FUSEDFOCUS_PURE_PYTHON", "").strip() not in ("", "0"):
        return None
    try:
        from . import _ckernel
    except ImportError:
        return None
    return _ckernel


_compiled = _load_compiled()
BACKEND = "cython" if _compiled is not None else "python"


def get_backend(name: str | None = None):
    """Return the kernel module for ``name`` ("cython", "python" or None for the default)."""
    if name is None:
        return _compiled if _compiled is not None else _pykernel
    if name == "python":
        return _pykernel
    if name == "cython":
        if _compiled is None:
            raise ImportError("compiled kernel is not available")
        return _compiled
    raise ValueError(f"unknown backend {name!r}")


@dataclass
class RunResult:
    status: int
    t: float
    y: np.ndarray
    h_next: float
    h_event: float
    ts: np.ndarray
    ys: np.ndarray
    nsteps: int


def run(field: int, params, y0, t0: float, t_end: float, *, rtol: float, atol: float,
        h0: float = 0.0, max_step: float = 0.0, event: tuple | None = None,
        max_steps: int = 10**6, store: bool = True, backend: str | None = None) -> RunResult:
    """Integrate a built-in 2-D field.

    ``event`` is ``(index, value, direction, armed)`` or None.
    """
    impl = get_backend(backend)
    if event is None:
        ev_index, ev_value, ev_dir, ev_armed = 0, 0.0, 0, False
    else:
        ev_index, ev_value, ev_dir, ev_armed = event
    p = np.ascontiguousarray(params, dtype=float)
    status, t, a, b, h_next, h_event, ts, ys, nsteps = impl.dopri_run(
        int(field), p, float(y0[0]), float(y0[1]), float(t0), float(t_end),
        float(h0), float(rtol), float(atol), float(max_step),
        int(ev_index), float(ev_value), int(ev_dir), bool(ev_armed),
        int(max_steps), bool(store))
    return RunResult(status, t, np.array([a, b]), h_next, h_event,
                     np.asarray(ts, dtype=float),
                     np.asarray(ys, dtype=float).reshape(-1, 2), nsteps)


def step(field: int, params, y, h: float, backend: str | None = None) -> np.ndarray | None:
    """Single unadapted 5th-order step; None if a stage leaves the field's domain."""
    impl = get_backend(backend)
    if not (isinstance(params, np.ndarray) and params.dtype == np.float64):
        params = np.ascontiguousarray(params, dtype=float)
    a, b, ok = impl.rk_step(int(field), params, float(y[0]), float(y[1]), float(h))
    return np.array([a, b]) if ok else None


def evaluate(field: int, params, y, backend: str | None = None) -> np.ndarray | None:
    impl = get_backend(backend)
    a, b, ok = impl.rhs(int(field), np.ascontiguousarray(params, dtype=float),
                        float(y[0]), float(y[1]))
    return np.array([a, b]) if ok else None


@dataclass(frozen=True)
class NativeField:
    """A built-in 2-D field usable both as a Python callable and by the compiled core."""

    code: int
    params: tuple

    def __call__(self, x) -> np.ndarray:
        a, b, ok = _pykernel.rhs(self.code, self.params, float(x[0]), float(x[1]))
        if not ok:
            raise DomainError(f"state {tuple(map(float, x))} outside the field's domain")
        return np.array([a, b])
