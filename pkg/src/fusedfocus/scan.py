"""Parameter sweeps that assemble bifurcation diagrams.

The nonsmooth sweep (``a = 0``) classifies the long-run behaviour at each
``eps`` from a handful of fixed initial conditions.  The smooth sweep
(``a > 0``) linearizes at the blow-up equilibrium and, where it is unstable,
measures the surrounding limit cycle.  Grid points are independent and may be
evaluated on a thread pool; output is always sorted by ``(a, eps)``.
"""
from __future__ import annotations

import csv
import enum
import io
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import blowup
from .errors import (BracketInvalid, FusedFocusError, NoReturn, NotConverged, NotFound,
                     ZenoSuspected)
from .filippov import BoundaryKind, classify_boundary
from .integrator import (EventKind, IntegrationOptions, Mode, Status, find_limit_cycle,
                         integrate, welander_section)
from .welander import WelanderParams, nonsmooth_system, sliding_boundaries

log = logging.getLogger(__name__)

# fixed initial conditions in the (x, y) chart
SEEDS = ((0.5, 0.2), (0.65, 0.001), (0.9, -0.1), (0.3, -0.2))


class Regime(enum.Enum):
    NONSMOOTH = "NonsmoothFilippov"
    SMOOTH = "Smooth"


class Attractor(enum.Enum):
    SLIDING = "SlidingAttractor"
    FOCUS = "FocusPoint"
    EQUILIBRIUM = "EquilibriumPoint"
    PERIODIC = "PeriodicOrbit"
    NONE = "None"

    @property
    def stationary(self) -> bool:
        return self in (Attractor.SLIDING, Attractor.FOCUS, Attractor.EQUILIBRIUM)


class BifurcationKind(enum.Enum):
    FUSED_FOCUS = "FusedFocus"
    SMOOTH_HOPF = "SmoothHopf"


@dataclass(frozen=True)
class Budget:
    """Deterministic work caps for one scan point.

    The caps count integration time, accepted steps and boundary events, so
    a scan does the same work on every machine.
    """

    t_final: float = 500.0
    seeds: int = 4
    max_steps: int = 2_000_000
    max_events: int = 20_000


@dataclass(frozen=True)
class ScanPoint:
    eps: float
    a: float
    regime: Regime
    attractor: Attractor
    orbit_amplitude: Optional[float] = None
    eigen_real: Optional[float] = None
    eigen_imag: Optional[float] = None
    slide_interval: Optional[tuple] = None
    slide_stability: Optional[str] = None
    error: Optional[str] = None

    def __post_init__(self):
        if (self.regime is Regime.NONSMOOTH) != (self.a == 0.0):
            raise ValueError("regime NonsmoothFilippov holds exactly when a = 0")
        if self.attractor is Attractor.PERIODIC and not (self.orbit_amplitude or 0.0) > 0.0:
            raise ValueError("a periodic attractor needs a positive amplitude")


@dataclass(frozen=True)
class DetectedBifurcation:
    kind: BifurcationKind
    eps: float
    a: float


@dataclass
class BifurcationDiagram:
    points: list = field(default_factory=list)
    detected_bifurcations: list = field(default_factory=list)

    CSV_COLUMNS = ("a", "eps", "regime", "attractor", "orbit_amplitude", "eigen_real",
                   "eigen_imag", "slide_lo", "slide_hi")

    def merge(self, other: "BifurcationDiagram") -> "BifurcationDiagram":
        pts = sorted(self.points + other.points, key=lambda p: (p.a, p.eps))
        bif = sorted(self.detected_bifurcations + other.detected_bifurcations,
                     key=lambda b: (b.a, b.eps, b.kind.value))
        return BifurcationDiagram(pts, bif)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.CSV_COLUMNS)
        for p in self.points:
            lo, hi = p.slide_interval if p.slide_interval is not None else (None, None)
            w.writerow([_fmt(p.a), _fmt(p.eps), p.regime.value, p.attractor.value,
                        _fmt(p.orbit_amplitude), _fmt(p.eigen_real), _fmt(p.eigen_imag),
                        _fmt(lo), _fmt(hi)])
        return buf.getvalue()

    def summary(self) -> dict:
        return {
            "detected_bifurcations": [
                {"kind": b.kind.value, "eps": b.eps, "a": b.a} for b in self.detected_bifurcations
            ],
            "points": len(self.points),
            "failures": [{"a": p.a, "eps": p.eps, "error": p.error}
                         for p in self.points if p.error],
        }

    def to_json(self) -> str:
        return json.dumps(self.summary(), indent=2, sort_keys=True) + "\n"


def _fmt(v) -> str:
    if v is None:
        return ""
    return repr(float(v))


def _dedupe(values: Sequence[float]) -> list[float]:
    return sorted({float(v) for v in values})


# -- nonsmooth --------------------------------------------------------------

def _classify_crossings(xs: list[float]):
    """Label a sequence of upward crossing abscissae as converged or still contracting."""
    if len(xs) < 4:
        return None
    d = np.diff(xs[-4:])
    if np.all(np.abs(d[-2:]) <= 1e-9 * (1.0 + abs(xs[-1]))):
        return Attractor.PERIODIC
    # geometric convergence to a cycle has a small ratio of successive steps;
    # the spiral into the fused focus has ratios approaching one
    with np.errstate(divide="ignore", invalid="ignore"):
        r = d[1:] / d[:-1]
    if np.all(np.isfinite(r)) and np.all(r > 0.75) and np.all(d < 0.0):
        return Attractor.FOCUS
    return None


def _nonsmooth_seed(sys, seed, budget: Budget):
    opts = IntegrationOptions(max_events=budget.max_events, max_steps=budget.max_steps,
                              store=False)
    try:
        tr = integrate(sys, np.array(seed, dtype=float), (0.0, budget.t_final), opts)
    except ZenoSuspected as exc:
        return Attractor.FOCUS, exc.trajectory
    if tr.status is Status.DEGENERATE:
        return Attractor.FOCUS, tr
    if tr.final_mode is Mode.SLIDING and tr.status is Status.COMPLETED:
        return Attractor.SLIDING, tr
    ups = [float(e.x[0]) for e in tr.events_of(EventKind.CROSSING_IN)]
    kind = _classify_crossings(ups)
    if kind is None and tr.status is Status.MAX_EVENTS:
        kind = Attractor.FOCUS
    return (kind or Attractor.NONE), tr


def _nonsmooth_point(eps: float, budget: Budget, base: WelanderParams) -> ScanPoint:
    p = base.replace(epsilon=eps, a=0.0)
    sys = nonsmooth_system(p)
    lo, hi = sorted(sliding_boundaries(p))
    if eps != 0.0:
        kind = classify_boundary(sys, np.array([0.5 * (lo + hi), 0.0])).kind
        stab = {BoundaryKind.STABLE_SLIDING: "stable",
                BoundaryKind.UNSTABLE_SLIDING: "unstable"}.get(kind, kind.value)
    else:
        stab = "collapsed"
    votes = []
    traj_up = []
    for seed in SEEDS[: budget.seeds]:
        try:
            kind, tr = _nonsmooth_seed(sys, seed, budget)
        except FusedFocusError as exc:
            log.warning("eps=%g seed %s failed: %s", eps, seed, exc)
            continue
        votes.append(kind)
        if kind is Attractor.PERIODIC:
            traj_up.append([float(e.x[0]) for e in tr.events_of(EventKind.CROSSING_IN)])
    attractor = _vote(votes)
    amp = None
    err = None
    if attractor is Attractor.PERIODIC:
        s_last = traj_up[0][-1]
        try:
            orb = find_limit_cycle(sys, welander_section(),
                                   (hi + 1e-6 * (1.0 + hi), s_last + 0.05))
            amp = orb.amplitude
        except (BracketInvalid, NotConverged, NoReturn) as exc:
            err = f"limit cycle not refined: {exc}"
            attractor = Attractor.NONE
    return ScanPoint(eps=eps, a=0.0, regime=Regime.NONSMOOTH, attractor=attractor,
                     orbit_amplitude=amp, slide_interval=(lo, hi), slide_stability=stab,
                     error=err)


_PRIORITY = (Attractor.PERIODIC, Attractor.SLIDING, Attractor.FOCUS, Attractor.EQUILIBRIUM,
             Attractor.NONE)


def _vote(votes: list) -> Attractor:
    if not votes:
        return Attractor.NONE
    counts = {k: votes.count(k) for k in set(votes)}
    best = max(counts.values())
    for k in _PRIORITY:
        if counts.get(k, 0) == best:
            return k
    return Attractor.NONE


def _safe(fn, eps, a, regime):
    def run(*args):
        try:
            return fn(*args)
        except FusedFocusError as exc:
            log.warning("scan point a=%g eps=%g failed: %s", a, eps, exc)
            return ScanPoint(eps=eps, a=a, regime=regime, attractor=Attractor.NONE,
                             error=f"{type(exc).__name__}: {exc}")
    return run


def _map(fn, jobs, threads: int):
    if threads <= 1:
        return [fn(*j) for j in jobs]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda j: fn(*j), jobs))


def scan_nonsmooth(eps_grid: Sequence[float], budget: Optional[Budget] = None, threads: int = 1,
                   base: Optional[WelanderParams] = None) -> BifurcationDiagram:
    """Sliding structure and long-run attractor for each ``eps`` of the Heaviside model."""
    budget = budget or Budget()
    base = base or WelanderParams()
    grid = _dedupe(eps_grid)
    pts = _map(lambda e: _safe(_nonsmooth_point, e, 0.0, Regime.NONSMOOTH)(e, budget, base),
               [(e,) for e in grid], threads)
    pts.sort(key=lambda p: (p.a, p.eps))
    bif = []
    for p0, p1 in zip(pts, pts[1:]):
        if p0.slide_stability == "collapsed":
            continue
        if p1.slide_stability == "collapsed":
            nxt = pts.index(p1) + 1
            if nxt < len(pts) and {p0.slide_stability, pts[nxt].slide_stability} == {"stable", "unstable"}:
                bif.append(DetectedBifurcation(BifurcationKind.FUSED_FOCUS, p1.eps, 0.0))
            continue
        if {p0.slide_stability, p1.slide_stability} == {"stable", "unstable"}:
            # signed interval width is linear in eps; interpolate its zero
            w0 = p0.slide_interval[1] - p0.slide_interval[0]
            w1 = p1.slide_interval[1] - p1.slide_interval[0]
            w0 = -w0 if p0.slide_stability == "unstable" else w0
            w1 = -w1 if p1.slide_stability == "unstable" else w1
            e0 = p0.eps - w0 * (p1.eps - p0.eps) / (w1 - w0)
            bif.append(DetectedBifurcation(BifurcationKind.FUSED_FOCUS, float(e0), 0.0))
    return BifurcationDiagram(pts, bif)


# -- smooth -----------------------------------------------------------------

def _smooth_point(a: float, eps: float, budget: Budget, base: WelanderParams,
                  seed=None) -> ScanPoint:
    p = base.replace(epsilon=eps, a=a)
    sp = blowup.equilibrium_spectrum(p, seed=seed)
    lead = max(sp.eigenvalues, key=lambda z: (z.real, abs(z.imag)))
    re, im = float(lead.real), float(abs(lead.imag))
    amp = None
    err = None
    if re < 0.0:
        att = Attractor.EQUILIBRIUM
    else:
        # fast-time period of the linear oscillation bounds the return time
        period = 2.0 * math.pi / im if im > 0.0 else 1.0 / max(re, 1e-12)
        try:
            orb = blowup.cycle_amplitude(p, max_time=min(50.0 * period, budget.t_final / a))
            att, amp = Attractor.PERIODIC, orb.amplitude
        except (BracketInvalid, NotConverged, NoReturn) as exc:
            att, err = Attractor.NONE, f"no cycle: {exc}"
    return ScanPoint(eps=eps, a=a, regime=Regime.SMOOTH, attractor=att, orbit_amplitude=amp,
                     eigen_real=re, eigen_imag=im, error=err)


def scan_smooth(a_list: Sequence[float], eps_grid: Sequence[float], budget: Optional[Budget] = None,
                threads: int = 1, base: Optional[WelanderParams] = None,
                hopf_points: int = 401) -> BifurcationDiagram:
    """Equilibrium spectrum and Hopf crossings of the arctan model for each ``a``.

    ``hopf_points = 0`` skips the Hopf search.
    """
    budget = budget or Budget()
    base = base or WelanderParams()
    a_vals = _dedupe(a_list)
    if any(a <= 0.0 for a in a_vals):
        raise ValueError("scan_smooth needs positive a values")
    grid = _dedupe(eps_grid)
    jobs = [(a, e) for a in a_vals for e in grid]
    pts = _map(lambda a, e: _safe(_smooth_point, e, a, Regime.SMOOTH)(a, e, budget, base),
               jobs, threads)
    pts.sort(key=lambda p: (p.a, p.eps))
    bif = []
    for a in (a_vals if hopf_points > 0 else ()):
        lo, hi = (grid[0], grid[-1]) if len(grid) > 1 else (-0.3, 0.05)
        try:
            rec = blowup.verify_hopf_numerically(a, (lo, hi), n=hopf_points, base=base,
                                                 check_amplitude=False)
            bif.append(DetectedBifurcation(BifurcationKind.SMOOTH_HOPF, rec.eps_star, a))
        except NotFound as exc:
            log.info("%s", exc)
    return BifurcationDiagram(pts, bif)
