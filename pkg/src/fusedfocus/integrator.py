"""Event-driven hybrid integration of piecewise-smooth systems.

Smooth pieces are advanced by the Dormand-Prince 5(4) pair in
:mod:`fusedfocus.kernels` (compiled when available).  Each run stops at the
first accepted step that carries the state across the splitting manifold; the
crossing is then located on a single re-taken step by bisection in time and
one secant polish, and the state is snapped onto ``h = 0``.  The boundary
logic decides between crossing and sliding.  Sliding segments follow the
Filippov field with projection onto the manifold after every step and end
when the multiplier leaves ``[0, 1]``.
"""
from __future__ import annotations

import collections
import enum
import logging
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Union

import numpy as np
from scipy.optimize import brentq

from . import _pykernel, kernels
from .errors import (BracketInvalid, DegenerateContact, EvaluationError, NoReturn,
                     NotConverged, ZenoSuspected)
from .filippov import (TANGENCY_TOL, PiecewiseSystem, Side, second_lie_derivative)
from .kernels import NativeField

log = logging.getLogger(__name__)

ORBIT_TOL = 1e-8
FLOQUET_MARGIN = 0.05


class Mode(enum.Enum):
    SMOOTH_PLUS = "smooth+"
    SMOOTH_MINUS = "smooth-"
    SLIDING = "sliding"
    SMOOTH = "smooth"


class EventKind(enum.Enum):
    CROSSING_IN = "crossing-in"
    CROSSING_OUT = "crossing-out"
    SLIDE_ENTRY = "slide-entry"
    SLIDE_EXIT_LAMBDA0 = "slide-exit-lambda0"
    SLIDE_EXIT_LAMBDA1 = "slide-exit-lambda1"
    TANGENCY_GRAZE = "tangency-graze"
    TIME_LIMIT = "time-limit"
    DOMAIN_EXIT = "domain-exit"
    SECTION = "section"


class Status(enum.Enum):
    COMPLETED = "completed"
    DOMAIN_EXIT = "domain-exit"
    DEGENERATE = "degenerate-contact"
    MAX_EVENTS = "max-events"
    SECTION_HITS = "section-hits"
    MAX_STEPS = "max-steps"
    ZENO = "zeno"


class Stability(enum.Enum):
    STABLE = "stable"
    UNSTABLE = "unstable"
    UNDETERMINED = "undetermined"


@dataclass(frozen=True)
class Event:
    kind: EventKind
    t: float
    x: np.ndarray = field(compare=False)


@dataclass
class TrajectorySegment:
    mode: Mode
    ts: np.ndarray
    xs: np.ndarray
    entry_event: Optional[Event] = None
    exit_event: Optional[Event] = None

    @property
    def samples(self) -> list[tuple[float, np.ndarray]]:
        return list(zip(self.ts.tolist(), list(self.xs)))


@dataclass
class Trajectory:
    segments: list = field(default_factory=list)
    events: list = field(default_factory=list)
    status: Status = Status.COMPLETED
    section_hits: list = field(default_factory=list)
    nsteps: int = 0

    @property
    def t_final(self) -> float:
        return float(self.segments[-1].ts[-1])

    @property
    def x_final(self) -> np.ndarray:
        return self.segments[-1].xs[-1]

    @property
    def final_mode(self) -> Mode:
        return self.segments[-1].mode

    def events_of(self, kind: EventKind) -> list[Event]:
        return [e for e in self.events if e.kind is kind]

    def arrays(self):
        """Concatenate all samples: ``(t, X, mode_labels)``; duplicate joints are kept once."""
        ts, xs, modes = [], [], []
        for seg in self.segments:
            start = 1 if ts and seg.ts.size and ts[-1][-1] == seg.ts[0] else 0
            ts.append(seg.ts[start:])
            xs.append(seg.xs[start:])
            modes.extend([seg.mode.value] * (seg.ts.size - start))
        if not ts:
            return np.empty(0), np.empty((0, 0)), []
        return np.concatenate(ts), np.concatenate(xs), modes


@dataclass(frozen=True)
class IntegrationOptions:
    """Tolerances and guards for :func:`integrate`.

    ``zeno_events`` is the largest number of boundary events tolerated inside
    any window of one time unit.
    """

    rtol: float = 1e-9
    atol: float = 1e-11
    event_time_tol: float = 1e-12
    projection_tol: float = 1e-10
    max_step: float = 0.0
    max_events: Optional[int] = None
    max_section_hits: Optional[int] = None
    zeno_events: int = 10_000
    max_steps: int = 10**7
    store: bool = True
    backend: Optional[str] = None

    def with_(self, **changes) -> "IntegrationOptions":
        return replace(self, **changes)


@dataclass(frozen=True)
class SmoothSystem:
    """A single smooth vector field, optionally backed by a built-in kernel field."""

    dim: int
    field: Callable
    native: Optional[NativeField] = None
    name: str = "smooth"


@dataclass(frozen=True)
class Section:
    """Oriented Poincare section ``{g = 0}`` with a scalar parameterization.

    ``direction=+1`` records crossings where ``g`` increases.  ``linear`` is
    ``(index, value)`` when ``g(x) = x[index] - value``, which lets the
    compiled kernel watch the section directly.
    """

    g: Callable
    direction: int
    param: Callable
    point: Callable
    linear: Optional[tuple] = None


def coordinate_section(index: int, value: float, direction: int, param_index: int,
                       dim: int = 2) -> Section:
    """Section ``{x[index] = value}`` parameterized by ``x[param_index]``."""

    def point(s):
        z = np.zeros(dim)
        z[index] = value
        z[param_index] = s
        return z

    return Section(g=lambda z: float(z[index]) - value, direction=int(direction),
                   param=lambda z: float(z[param_index]), point=point,
                   linear=(int(index), float(value)))


def welander_section() -> Section:
    """``{y = 0}`` crossed from ``y < 0`` to ``y > 0``, parameterized by ``x``."""
    return coordinate_section(1, 0.0, +1, 0)


# -- helpers ----------------------------------------------------------------

class _ZenoGuard:
    def __init__(self, limit: int):
        self.limit = limit
        self.times = collections.deque()

    def add(self, t: float) -> bool:
        self.times.append(t)
        while t - self.times[0] > 1.0:
            self.times.popleft()
        return len(self.times) > self.limit


def _locate(step: Callable, y, h: float, g: Callable, direction: int, tol: float):
    """Time offset in ``(0, h]`` where ``g`` crosses zero in ``direction`` along one step.

    ``step(y, tau)`` re-takes the step with size ``tau``.  Bisection to ``tol``
    then a single secant polish inside the final bracket.
    """
    lo, hi = 0.0, h
    g_lo = g(y)
    y_hi = step(y, hi)
    g_hi = g(y_hi)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        y_mid = step(y, mid)
        g_mid = g(y_mid)
        if g_mid * direction > 0.0:
            hi, g_hi, y_hi = mid, g_mid, y_mid
        else:
            lo, g_lo = mid, g_mid
    tau = hi
    if g_hi != g_lo:
        sec = lo - g_lo * (hi - lo) / (g_hi - g_lo)
        if lo < sec < hi:
            y_sec = step(y, sec)
            # keep the located point on the far side so the event cannot re-fire
            if g(y_sec) * direction >= 0.0:
                tau, y_hi = sec, y_sec
    return tau, y_hi


def _effective_sign(sys: PiecewiseSystem, x, side: Side, s: float, fnorm: float) -> int:
    """Direction a one-sided field carries the state off the manifold.

    At a tangency the first normal speed vanishes and the second Lie derivative
    decides which side the orbit curves into.
    """
    if abs(s) > TANGENCY_TOL * (1.0 + fnorm):
        return 1 if s > 0.0 else -1
    l2 = second_lie_derivative(sys, x, side)
    if abs(l2) <= TANGENCY_TOL * (1.0 + fnorm):
        return 0
    return 1 if l2 > 0.0 else -1


def _section_is_manifold(sys: PiecewiseSystem, section: Section) -> bool:
    """True when ``section`` is the coordinate hyperplane that is also the splitting manifold.

    Crossings of such a section are boundary events and are counted from them.
    """
    if section.linear is None:
        return False
    nat = sys.native
    if nat is not None:
        return section.linear[0] == nat.h_index and section.linear[1] == nat.h_value
    idx = section.linear[0]
    for s in (0.1, 0.5, 0.9):
        try:
            z = np.asarray(section.point(s), dtype=float)
            g = np.asarray(sys.grad_h(z), dtype=float)
            hz = float(sys.h(z))
        except (EvaluationError, ValueError):
            return False
        off = np.delete(g, idx)
        if abs(hz) > 1e-12 or g[idx] == 0.0 or np.any(np.abs(off) > 1e-12 * abs(g[idx])):
            return False
    return True


class _Hybrid:
    def __init__(self, sys: PiecewiseSystem, opts: IntegrationOptions, section: Optional[Section]):
        self.sys = sys
        self.opts = opts
        self.section = section
        self.traj = Trajectory()
        self.zeno = _ZenoGuard(opts.zeno_events)
        self.h_next = 0.0
        self.n_boundary = 0
        self.native = sys.native is not None and sys.domain is None
        self.manifold_section = section is not None and _section_is_manifold(sys, section)

    # events -------------------------------------------------------------
    def record(self, kind: EventKind, t: float, x) -> None:
        ev = Event(kind, float(t), np.array(x, dtype=float))
        self.traj.events.append(ev)
        self.n_boundary += 1
        if kind in (EventKind.CROSSING_IN, EventKind.CROSSING_OUT, EventKind.SLIDE_ENTRY,
                    EventKind.SLIDE_EXIT_LAMBDA0, EventKind.SLIDE_EXIT_LAMBDA1,
                    EventKind.TANGENCY_GRAZE):
            if self.zeno.add(float(t)):
                self.traj.status = Status.ZENO
                raise ZenoSuspected(
                    f"more than {self.opts.zeno_events} boundary events within one time unit "
                    f"near t={t:.6g}", self.traj)
        if self.manifold_section:
            want = EventKind.CROSSING_IN if self.section.direction > 0 else EventKind.CROSSING_OUT
            if kind is want:
                self.traj.section_hits.append((float(t), np.array(x, dtype=float)))

    def limits_reached(self) -> bool:
        o = self.opts
        if o.max_events is not None and self.n_boundary >= o.max_events:
            self.traj.status = Status.MAX_EVENTS
            return True
        if o.max_section_hits is not None and len(self.traj.section_hits) >= o.max_section_hits:
            self.traj.status = Status.SECTION_HITS
            return True
        return False

    # boundary decision ---------------------------------------------------
    def decide(self, x, came_from: Optional[Mode]):
        """Return ``(next_mode, event_kind_or_None)``; ``next_mode`` None means stop."""
        sys = self.sys
        fp, fm = sys.fplus(x), sys.fminus(x)
        g = np.asarray(sys.grad_h(x), dtype=float)
        sp, sm = float(fp @ g), float(fm @ g)
        tp = abs(sp) <= TANGENCY_TOL * (1.0 + float(np.linalg.norm(fp)))
        tm = abs(sm) <= TANGENCY_TOL * (1.0 + float(np.linalg.norm(fm)))
        if tp and tm:
            return None, EventKind.TANGENCY_GRAZE
        sgp = _effective_sign(sys, x, Side.PLUS, sp, float(np.linalg.norm(fp)))
        sgm = _effective_sign(sys, x, Side.MINUS, sm, float(np.linalg.norm(fm)))
        if sgp == 0 or sgm == 0:
            return None, EventKind.TANGENCY_GRAZE
        if sgp > 0 and sgm > 0:
            if came_from is Mode.SMOOTH_MINUS:
                return Mode.SMOOTH_PLUS, EventKind.CROSSING_IN
            if came_from is Mode.SMOOTH_PLUS:
                return Mode.SMOOTH_PLUS, EventKind.TANGENCY_GRAZE
            return Mode.SMOOTH_PLUS, None
        if sgp < 0 and sgm < 0:
            if came_from is Mode.SMOOTH_PLUS:
                return Mode.SMOOTH_MINUS, EventKind.CROSSING_OUT
            if came_from is Mode.SMOOTH_MINUS:
                return Mode.SMOOTH_MINUS, EventKind.TANGENCY_GRAZE
            return Mode.SMOOTH_MINUS, None
        if sgp < 0 < sgm:
            return Mode.SLIDING, (EventKind.SLIDE_ENTRY if came_from is not Mode.SLIDING else None)
        # repelling sliding: stay on the side we came from, plus when starting here
        if came_from in (Mode.SMOOTH_PLUS, Mode.SMOOTH_MINUS):
            return came_from, EventKind.TANGENCY_GRAZE
        return Mode.SMOOTH_PLUS, None

    # smooth pieces ----------------------------------------------------------
    def smooth_piece(self, mode: Mode, x, t: float, t_end: float, armed: bool):
        """Advance one smooth region; returns ``(reason, t, x, ts, xs)``.

        ``reason`` is one of "done", "boundary", "section", "domain", "steps".
        """
        sys, o = self.sys, self.opts
        plus = mode is Mode.SMOOTH_PLUS
        wdir = -1 if plus else 1
        sec = None if self.manifold_section else self.section
        if self.native and sec is None:
            nat = sys.native
            fld = nat.plus if plus else nat.minus
            res = kernels.run(fld.code, fld.params, x, t, t_end, rtol=o.rtol, atol=o.atol,
                              h0=self.h_next, max_step=o.max_step,
                              event=(nat.h_index, nat.h_value, wdir, armed),
                              max_steps=o.max_steps, store=o.store, backend=o.backend)
            self.traj.nsteps += res.nsteps
            self.h_next = res.h_next
            ts, xs = res.ts, res.ys
            if res.status == kernels.STATUS_EVENT:
                fp = np.asarray(fld.params, dtype=float)

                def stp(y, tau):
                    out = kernels.step(fld.code, fp, y, tau, backend=o.backend)
                    if out is None:
                        raise EvaluationError("stage left the field's domain")
                    return out
                tau, xe = _locate(stp, res.y, res.h_event, lambda z: float(z[nat.h_index]) - nat.h_value,
                                  wdir, o.event_time_tol)
                xe = sys.project(xe)
                return "boundary", res.t + tau, xe, ts, xs
            return self._status_reason(res.status), res.t, res.y, ts, xs

        f = sys.fplus if plus else sys.fminus

        def fchk(z):
            sys.check_domain(z)
            return f(z)

        events = [(lambda z: float(sys.h(z)), wdir, armed)]
        if sec is not None:
            events.append((sec.g, sec.direction, False))
        try:
            status, t1, y1, h_next, h_event, which, ts, ys, nsteps = _pykernel.dopri_run_callable(
                fchk, x, t, t_end, self.h_next, o.rtol, o.atol, o.max_step, events=events,
                max_steps=o.max_steps, store=o.store)
        except EvaluationError:
            return "domain", t, np.asarray(x, float), np.array([t]), np.array([x], dtype=float)
        self.traj.nsteps += nsteps
        self.h_next = h_next
        ts = np.asarray(ts, dtype=float)
        xs = np.asarray(ys, dtype=float).reshape(-1, sys.dim)
        if status == kernels.STATUS_EVENT:
            g, d, _ = events[which]
            tau, xe = _locate(lambda y, s: _pykernel.rk_step_callable(fchk, y, s), y1, h_event,
                              g, d, o.event_time_tol)
            if which == 0:
                return "boundary", t1 + tau, sys.project(xe), ts, xs
            return "section", t1 + tau, xe, ts, xs
        return self._status_reason(status), t1, y1, ts, xs

    @staticmethod
    def _status_reason(status: int) -> str:
        if status == kernels.STATUS_DONE:
            return "done"
        if status == kernels.STATUS_DOMAIN:
            return "domain"
        if status == kernels.STATUS_UNDERFLOW:
            return "underflow"
        return "steps"

    # sliding pieces -----------------------------------------------------------
    def sliding_piece(self, x, t: float, t_end: float):
        sys, o = self.sys, self.opts

        def speeds(z):
            g = np.asarray(sys.grad_h(z), dtype=float)
            fp, fm = sys.fplus(z), sys.fminus(z)
            return fp, fm, float(fp @ g), float(fm @ g)

        def f(z):
            sys.check_domain(z)
            fp, fm, sp, sm = speeds(z)
            d = sm - sp
            if d == 0.0:
                raise DegenerateContact(f"both fields tangent at {z}")
            lam = sm / d
            return lam * fp + (1.0 - lam) * fm

        def exit_g(z):
            _, _, sp, sm = speeds(z)
            return min(sm, -sp)

        def project(z):
            return sys.project(z, tol=o.projection_tol)

        try:
            status, t1, y1, h_next, h_event, which, ts, ys, nsteps = _pykernel.dopri_run_callable(
                f, x, t, t_end, self.h_next, o.rtol, o.atol, o.max_step,
                events=[(exit_g, -1, True)], max_steps=o.max_steps, store=o.store,
                project=project)
        except (EvaluationError, DegenerateContact) as exc:
            log.debug("sliding stopped: %s", exc)
            return "domain", None, t, np.asarray(x, float), np.array([t]), np.array([x], dtype=float)
        self.traj.nsteps += nsteps
        self.h_next = h_next
        ts = np.asarray(ts, dtype=float)
        xs = np.asarray(ys, dtype=float).reshape(-1, sys.dim)
        if status == kernels.STATUS_EVENT:
            step = lambda y, s: project(_pykernel.rk_step_callable(f, y, s))  # noqa: E731
            tau, xe = _locate(step, y1, h_event, exit_g, -1, o.event_time_tol)
            xe = project(xe)
            _, _, sp, sm = speeds(xe)
            # the multiplier leaves through whichever speed vanished
            kind = EventKind.SLIDE_EXIT_LAMBDA0 if abs(sm) <= abs(sp) else EventKind.SLIDE_EXIT_LAMBDA1
            return "exit", kind, t1 + tau, xe, ts, xs
        return self._status_reason(status), None, t1, y1, ts, xs

    # driver -------------------------------------------------------------------
    def run(self, x0, t0: float, t1: float) -> Trajectory:
        sys = self.sys
        x = sys.check_domain(x0).copy()
        t = float(t0)
        came: Optional[Mode] = None
        if sys.on_manifold(x):
            x = sys.project(x)
            mode, kind = self.decide(x, None)
            if mode is None:
                self._stop_degenerate(t, x, kind)
                return self.traj
        else:
            mode = Mode.SMOOTH_PLUS if float(sys.h(x)) > 0.0 else Mode.SMOOTH_MINUS
        # The region watch is armed from the start: a whole excursion off the
        # manifold can fit inside one step near the fused focus.
        armed = True
        entry = None
        stalled = 0
        while True:
            if mode is Mode.SLIDING:
                reason, kind, t_new, x_new, ts, xs = self.sliding_piece(x, t, t1)
            else:
                reason, t_new, x_new, ts, xs = self.smooth_piece(mode, x, t, t1, armed)
                kind = None
            seg_ts, seg_xs = ts, xs
            if reason in ("boundary", "exit", "section"):
                seg_ts, seg_xs = _append_sample(ts, xs, t_new, x_new)
            seg = TrajectorySegment(mode, seg_ts, seg_xs, entry_event=entry)
            self.traj.segments.append(seg)
            stalled = stalled + 1 if float(seg_ts[-1]) <= t else 0
            if stalled > 8:
                self.traj.status = Status.ZENO
                raise ZenoSuspected(f"no progress across repeated boundary events at t={t:.6g}",
                                    self.traj)
            t, x = float(seg_ts[-1]), np.array(seg_xs[-1])
            if reason == "section":
                self.traj.section_hits.append((t, x.copy()))
                seg.exit_event = Event(EventKind.SECTION, t, x.copy())
                self.traj.events.append(seg.exit_event)
                if self.limits_reached():
                    return self.traj
                entry = seg.exit_event
                continue
            if reason == "done":
                seg.exit_event = Event(EventKind.TIME_LIMIT, t, x.copy())
                self.traj.events.append(seg.exit_event)
                self.traj.status = Status.COMPLETED
                return self.traj
            if reason == "domain":
                seg.exit_event = Event(EventKind.DOMAIN_EXIT, t, x.copy())
                self.traj.events.append(seg.exit_event)
                self.traj.status = Status.DOMAIN_EXIT
                return self.traj
            if reason == "underflow":
                self.traj.status = Status.ZENO
                raise ZenoSuspected(f"step size underflow at t={t:.6g}", self.traj)
            if reason == "steps":
                self.traj.status = Status.MAX_STEPS
                return self.traj
            if reason == "exit":
                nxt = Mode.SMOOTH_MINUS if kind is EventKind.SLIDE_EXIT_LAMBDA0 else Mode.SMOOTH_PLUS
                ev = Event(kind, t, x.copy())
                seg.exit_event = ev
                self.record(kind, t, x)
                came, mode, entry = Mode.SLIDING, nxt, ev
                if self.limits_reached():
                    return self.traj
                continue
            # reached the manifold from a smooth region
            came = mode
            nxt, kind = self.decide(x, came)
            if nxt is None:
                self._stop_degenerate(t, x, kind, seg)
                return self.traj
            ev = Event(kind, t, x.copy()) if kind is not None else None
            seg.exit_event = ev
            if kind is not None:
                self.record(kind, t, x)
            mode, entry = nxt, ev
            if self.limits_reached():
                return self.traj

    def _stop_degenerate(self, t, x, kind, seg=None):
        ev = Event(kind, float(t), np.array(x, dtype=float))
        if seg is None:
            seg = TrajectorySegment(Mode.SLIDING, np.array([t]), np.array([x], dtype=float))
            self.traj.segments.append(seg)
        seg.exit_event = ev
        self.traj.events.append(ev)
        self.traj.status = Status.DEGENERATE


def _append_sample(ts, xs, t, x):
    """Append ``(t, x)`` keeping sample times strictly increasing."""
    if ts.size and t <= ts[-1]:
        ts = ts.copy()
        xs = xs.copy()
        ts[-1] = max(t, ts[-1])
        xs[-1] = x
        return ts, xs
    return np.append(ts, t), np.vstack([xs, np.asarray(x, dtype=float)[None, :]])


def integrate(sys: Union[PiecewiseSystem, SmoothSystem], x0, t_span, opts: Optional[IntegrationOptions] = None,
              section: Optional[Section] = None) -> Trajectory:
    """Integrate ``sys`` from ``x0`` over ``t_span = (t0, t1)``, forward in time.

    Piecewise systems are followed through crossings and sliding motion;
    smooth systems delegate to :func:`integrate_smooth`.  With ``section`` set,
    oriented section crossings are collected in ``Trajectory.section_hits``.

    Raises
    ------
    ZenoSuspected
        On event accumulation or step-size underflow; the partial trajectory
        is attached to the exception.
    """
    opts = opts or IntegrationOptions()
    t0, t1 = map(float, t_span)
    if isinstance(sys, SmoothSystem):
        return integrate_smooth(sys, x0, (t0, t1), opts, section)
    if not t1 > t0:
        raise ValueError("t_span must be an increasing interval")
    return _Hybrid(sys, opts, section).run(x0, t0, t1)


def integrate_smooth(sys: SmoothSystem, x0, t_span, opts: Optional[IntegrationOptions] = None,
                     section: Optional[Section] = None) -> Trajectory:
    """Integrate a smooth field; backward time spans are allowed."""
    opts = opts or IntegrationOptions()
    t0, t1 = map(float, t_span)
    if t1 == t0:
        raise ValueError("empty time span")
    fwd = 1.0 if t1 > t0 else -1.0
    x = np.asarray(x0, dtype=float).copy()
    traj = Trajectory()
    t = t0
    h_next = 0.0
    armed = False
    ts_all, xs_all = [np.array([t])], [x[None, :].copy()]
    while True:
        use_native = sys.native is not None and (section is None or section.linear is not None)
        if use_native:
            nf = sys.native
            ev = None
            if section is not None:
                d = section.direction * (1 if fwd > 0 else -1)
                ev = (section.linear[0], section.linear[1], d, armed)
            res = kernels.run(nf.code, nf.params, x, t, t1, rtol=opts.rtol, atol=opts.atol,
                              h0=h_next, max_step=opts.max_step, event=ev,
                              max_steps=opts.max_steps, store=opts.store, backend=opts.backend)
            status, t_new, y, h_next, h_event = res.status, res.t, res.y, res.h_next, res.h_event
            ts, xs, nsteps = res.ts, res.ys, res.nsteps

            nfp = np.asarray(nf.params, dtype=float)

            def stp(y_, tau):
                out = kernels.step(nf.code, nfp, y_, tau, backend=opts.backend)
                if out is None:
                    raise EvaluationError("stage left the field's domain")
                return out
        else:
            f = sys.field
            events = [] if section is None else [(section.g, section.direction * int(fwd), armed)]
            try:
                status, t_new, y, h_next, h_event, _, ts, ys, nsteps = _pykernel.dopri_run_callable(
                    f, x, t, t1, h_next, opts.rtol, opts.atol, opts.max_step, events=events,
                    max_steps=opts.max_steps, store=opts.store)
            except EvaluationError:
                status, t_new, y, ts, ys, nsteps = kernels.STATUS_DOMAIN, t, x, [t], [x], 0
            ts = np.asarray(ts, dtype=float)
            xs = np.asarray(ys, dtype=float).reshape(-1, sys.dim)

            def stp(y_, tau, f=f):
                return _pykernel.rk_step_callable(f, y_, tau)
        traj.nsteps += nsteps
        ts_all.append(ts[1:])
        xs_all.append(xs[1:])
        if status == kernels.STATUS_EVENT:
            d = section.direction * int(fwd)
            tau, xe = _locate(stp, y, fwd * h_event, section.g, d, opts.event_time_tol) if fwd > 0 \
                else _locate_backward(stp, y, h_event, section.g, d, opts.event_time_tol)
            t = t_new + fwd * abs(tau)
            x = np.asarray(xe, dtype=float)
            ts_all.append(np.array([t]))
            xs_all.append(x[None, :].copy())
            traj.section_hits.append((t, x.copy()))
            traj.events.append(Event(EventKind.SECTION, t, x.copy()))
            if opts.max_section_hits is not None and len(traj.section_hits) >= opts.max_section_hits:
                traj.status = Status.SECTION_HITS
                break
            armed = False
            continue
        t, x = t_new, np.asarray(y, dtype=float)
        if status == kernels.STATUS_DONE:
            traj.status = Status.COMPLETED
            traj.events.append(Event(EventKind.TIME_LIMIT, t, x.copy()))
        elif status == kernels.STATUS_DOMAIN:
            traj.status = Status.DOMAIN_EXIT
            traj.events.append(Event(EventKind.DOMAIN_EXIT, t, x.copy()))
        elif status == kernels.STATUS_UNDERFLOW:
            traj.status = Status.ZENO
            raise ZenoSuspected(f"step size underflow at t={t:.6g}", traj)
        else:
            traj.status = Status.MAX_STEPS
        break
    ts = np.concatenate(ts_all)
    xs = np.concatenate(xs_all)
    if ts[-1] != t:
        # unstored runs only report their end point
        ts = np.append(ts, t)
        xs = np.vstack([xs, x[None, :]])
    # samples stay in integration order, so x_final is the state at t_span[1]
    traj.segments.append(TrajectorySegment(Mode.SMOOTH, ts, xs))
    return traj


def _locate_backward(step, y, h, g, direction, tol):
    tau, xe = _locate(lambda z, s: step(z, -s), y, h, g, direction, tol)
    return tau, xe


def sample(traj: Trajectory, t_eval) -> np.ndarray:
    """Linear interpolation of the stored samples at ``t_eval`` (for plotting and comparisons)."""
    ts, xs, _ = traj.arrays()
    if ts.size > 1 and ts[0] > ts[-1]:
        ts, xs = ts[::-1], xs[::-1]
    t_eval = np.asarray(t_eval, dtype=float)
    return np.column_stack([np.interp(t_eval, ts, xs[:, j]) for j in range(xs.shape[1])])


def solve_at(sys: Union[PiecewiseSystem, SmoothSystem], x0, t_eval, opts: Optional[IntegrationOptions] = None):
    """States at the increasing times ``t_eval`` computed by restarting at each output time."""
    opts = opts or IntegrationOptions()
    t_eval = np.asarray(t_eval, dtype=float)
    out = np.empty((t_eval.size, len(x0)))
    out[0] = x0
    x = np.asarray(x0, dtype=float)
    for i in range(1, t_eval.size):
        tr = integrate(sys, x, (t_eval[i - 1], t_eval[i]), opts.with_(store=False))
        x = tr.x_final
        out[i] = x
    return out


# -- return maps ------------------------------------------------------------

@dataclass(frozen=True)
class PeriodicOrbit:
    section_point: np.ndarray = field(compare=False)
    period: float
    samples: tuple = field(compare=False, repr=False)
    amplitude: float
    stability: Stability
    floquet_estimate: float
    residual: float
    section_param: float = float("nan")


def _first_return(sys, section: Section, s: float, opts: IntegrationOptions, max_time: float):
    x0 = section.point(s)
    tr = integrate(sys, x0, (0.0, max_time), opts.with_(max_section_hits=1), section=section)
    if not tr.section_hits:
        raise NoReturn(f"no return to the section within t={max_time:g} from s={s:.12g}", tr)
    return tr


def poincare_map(sys, section: Section, s: float, opts: Optional[IntegrationOptions] = None,
                 max_time: float = 200.0) -> float:
    """First-return map of ``section`` in its scalar parameterization.

    Raises
    ------
    NoReturn
        If the orbit from ``s`` does not come back within ``max_time``.
    """
    opts = opts or IntegrationOptions()
    tr = _first_return(sys, section, s, opts.with_(store=False), max_time)
    return float(section.param(tr.section_hits[0][1]))


def find_limit_cycle(sys, section: Section, bracket, opts: Optional[IntegrationOptions] = None,
                     max_time: float = 200.0, amplitude_index: int = 0,
                     orbit_tol: float = ORBIT_TOL, fd_step: float = 1e-5) -> PeriodicOrbit:
    """Locate a fixed point of the return map inside ``bracket`` and characterize the orbit.

    Raises
    ------
    BracketInvalid
        When the displacement ``P(s) - s`` has no sign change on the bracket or
        an endpoint never returns.
    NotConverged
        When the root solve fails or the residual exceeds ``orbit_tol``.
    """
    opts = opts or IntegrationOptions()
    lo, hi = map(float, bracket)

    def disp(s):
        return poincare_map(sys, section, s, opts, max_time) - s

    try:
        d_lo, d_hi = disp(lo), disp(hi)
    except NoReturn as exc:
        raise BracketInvalid(f"bracket endpoint does not return: {exc}") from exc
    if d_lo * d_hi > 0.0:
        raise BracketInvalid(f"P(s)-s does not change sign on [{lo}, {hi}] "
                             f"({d_lo:.3e}, {d_hi:.3e})")
    best = lo if abs(d_lo) < abs(d_hi) else hi
    try:
        s_star = float(brentq(disp, lo, hi, xtol=1e-13, rtol=4 * np.finfo(float).eps, maxiter=200))
    except NoReturn as exc:
        raise NotConverged(f"orbit lost during the root solve: {exc}", best) from exc
    except RuntimeError as exc:
        raise NotConverged(str(exc), best) from exc
    residual = abs(disp(s_star))
    if residual > orbit_tol:
        raise NotConverged(f"return-map residual {residual:.3e} exceeds {orbit_tol:g}", s_star)
    h = fd_step * max(1.0, abs(s_star))
    try:
        mu = abs((poincare_map(sys, section, s_star + h, opts, max_time)
                  - poincare_map(sys, section, s_star - h, opts, max_time)) / (2.0 * h))
    except NoReturn:
        mu = float("nan")
    if mu < 1.0 - FLOQUET_MARGIN:
        stab = Stability.STABLE
    elif mu > 1.0 + FLOQUET_MARGIN:
        stab = Stability.UNSTABLE
    else:
        stab = Stability.UNDETERMINED
    tr = _first_return(sys, section, s_star, opts, max_time)
    t_ret, _ = tr.section_hits[0]
    ts, xs, _ = tr.arrays()
    amp = float(xs[:, amplitude_index].max() - xs[:, amplitude_index].min())
    return PeriodicOrbit(section_point=section.point(s_star), period=float(t_ret),
                         samples=(ts, xs), amplitude=amp, stability=stab,
                         floquet_estimate=float(mu), residual=float(residual),
                         section_param=s_star)
