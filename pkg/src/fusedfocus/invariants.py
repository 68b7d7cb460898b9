"""Seeded randomized battery for the module-level invariants.

Each check draws its cases from a ``numpy.random.Generator`` so the battery
is reproducible and needs no test framework; the pytest suite runs the same
properties again under hypothesis.  A check returns an
:class:`InvariantResult` listing the counterexamples it found.
"""
from __future__ import annotations

import contextlib
import io
import json
import math
import os
import tempfile
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import blowup, scan
from .errors import FusedFocusError
from .filippov import (BoundaryKind, PiecewiseSystem, classify_boundary, eval_field,
                       sliding_flow, sliding_lambda)
from .integrator import (EventKind, IntegrationOptions, Mode, SmoothSystem, integrate,
                         solve_at)
from .welander import (WelanderParams, ds_dlambda, from_xy, k_heaviside, k_smooth,
                       nonsmooth_system, normal_speed, phase_slope, smooth_field_TS, to_xy,
                       vector_field_xy, virtual_equilibria)

MIN_CASES = 200
MAX_REPORTED = 5

EPS = 4.0 * np.finfo(float).eps


@dataclass
class InvariantResult:
    module: str
    name: str
    cases: int = 0
    failures: list = field(default_factory=list)
    seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return self.cases >= MIN_CASES and not self.failures

    def fail(self, msg: str) -> None:
        self.failures.append(msg)

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        s = f"  [{tag}] {self.module}: {self.name} ({self.cases} cases, {len(self.failures)} failing)"
        if self.failures:
            s += "; e.g. " + " | ".join(self.failures[:MAX_REPORTED])
        return s


REGISTRY: list[tuple[str, str, Callable]] = []


def invariant(module: str, name: str):
    def deco(fn):
        REGISTRY.append((module, name, fn))
        return fn
    return deco


def _tol(z) -> float:
    return 1e-9 * (1.0 + float(np.linalg.norm(z)))


# -- filippov-core ----------------------------------------------------------------------

@invariant("filippov-core", "endpoint consistency")
def endpoint_consistency(rng, n, res):
    for _ in range(n):
        p = WelanderParams(epsilon=rng.uniform(-0.1, 0.1))
        z = np.array([rng.uniform(0.0, 1.2), rng.uniform(-0.5, 0.5)])
        sysm = nonsmooth_system(p)
        for lam, k in ((0.0, 0.0), (1.0, 1.0)):
            got, want = eval_field(sysm, z, lam), vector_field_xy(z, p, k)
            if np.max(np.abs(got - want)) > EPS * (1.0 + np.max(np.abs(want))):
                res.fail(f"eps={p.epsilon:.4g} z={z} lam={lam}: {got} != {want}")
        res.cases += 1


@invariant("filippov-core", "sliding tangency")
def sliding_tangency(rng, n, res):
    while res.cases < n:
        eps = rng.choice([-1, 1]) * rng.uniform(1e-3, 0.1)
        p = WelanderParams(epsilon=eps)
        lo, hi = sorted((0.75 + 1.25 * eps, 0.75 + 3.75 * eps))
        x = rng.uniform(lo - 0.2 * (hi - lo), hi + 0.2 * (hi - lo))
        sysm = nonsmooth_system(p)
        z = np.array([x, 0.0])
        if sliding_lambda(sysm, z) is None:
            continue
        f = sliding_flow(sysm, z)
        if abs(f[1]) > 1e-10 * (1.0 + np.linalg.norm(f)):
            res.fail(f"eps={eps:.4g} x={x:.6g}: normal component {f[1]:.3e}")
        res.cases += 1


@invariant("filippov-core", "classification partition")
def classification_partition(rng, n, res):
    for _ in range(n):
        eps = rng.choice([-1, 1]) * rng.uniform(1e-3, 0.1)
        p = WelanderParams(epsilon=eps)
        x = rng.uniform(0.0, 1.5)
        c = classify_boundary(nonsmooth_system(p), np.array([x, 0.0]))
        sp, sm = normal_speed(x, p, 1.0), normal_speed(x, p, 0.0)
        lam = sm / (sm - sp)
        outside = not (0.0 <= lam <= 1.0)
        if not isinstance(c.kind, BoundaryKind):
            res.fail(f"eps={eps:.4g} x={x:.6g}: kind {c.kind!r}")
        elif (c.kind is BoundaryKind.CROSSING) != outside:
            res.fail(f"eps={eps:.4g} x={x:.6g}: {c.kind.value} with lam*={lam:.6g}")
        res.cases += 1


@invariant("filippov-core", "sliding-interval law")
def sliding_interval_law(rng, n, res):
    while res.cases < n:
        eps = rng.choice([-1, 1]) * rng.uniform(1e-3, 0.1)
        a_, b_ = 0.75 + 1.25 * eps, 0.75 + 3.75 * eps
        lo, hi = (a_, b_) if eps > 0 else (b_, a_)
        x = rng.uniform(lo - 0.05, hi + 0.05)
        if min(abs(x - lo), abs(x - hi)) <= 1e-8:
            continue
        kind = classify_boundary(nonsmooth_system(WelanderParams(epsilon=eps)),
                                 np.array([x, 0.0])).kind
        inside = lo < x < hi
        want = ((BoundaryKind.STABLE_SLIDING if eps > 0 else BoundaryKind.UNSTABLE_SLIDING)
                if inside else BoundaryKind.CROSSING)
        if kind is not want:
            res.fail(f"eps={eps:.4g} x={x:.8g}: {kind.value}, expected {want.value}")
        res.cases += 1


@invariant("filippov-core", "dS/dlambda equals -eps")
def filippov_ds_dlambda(rng, n, res):
    for _ in range(n):
        eps = rng.uniform(-0.1, 0.1)
        x = rng.uniform(0.0, 1.5)
        c = classify_boundary(nonsmooth_system(WelanderParams(epsilon=eps)), np.array([x, 0.0]))
        if abs(c.dS_dlambda + eps) > 1e-15:
            res.fail(f"eps={eps:.6g} x={x:.6g}: dS/dlambda={c.dS_dlambda!r}")
        res.cases += 1


@invariant("filippov-core", "tangency visibility (phase-curve extrema)")
def tangency_visibility(rng, n, res):
    al, be = 0.8, 0.5
    for i in range(n):
        eps = 0.0 if i == 0 else rng.uniform(-0.05, 0.05)
        p = WelanderParams(epsilon=eps)
        h = 10.0 ** rng.uniform(-6, -3)
        for k, want in ((1.0, -1.0), (0.0, 1.0)):
            xt = (be - be * eps - k * eps - al) / (al * be - al)

            def quot(x):
                return (be - be * eps - k * eps - al - (al * be - al) * x) / (1.0 - x - k * x)

            slope0 = phase_slope(xt, p, k)
            curv = (phase_slope(xt + h, p, k) - phase_slope(xt - h, p, k)) / (2.0 * h)
            curv_ref = (quot(xt + h) - quot(xt - h)) / (2.0 * h)
            if abs(slope0) > 1e-12 or math.copysign(1.0, curv) != want \
                    or abs(curv - curv_ref) > 1e-6 * (1.0 + abs(curv_ref)):
                res.fail(f"eps={eps:.4g} k={k:g}: slope {slope0:.2e}, d(slope)/dx {curv:.4g}")
        res.cases += 1


# -- integrator ------------------------------------------------------------------------------

_TRAJ_OPTS = IntegrationOptions(max_events=2000)


def _random_trajectory(rng):
    p = WelanderParams(epsilon=rng.uniform(-0.06, 0.06))
    x0 = np.array([rng.uniform(0.3, 1.0), rng.uniform(-0.3, 0.3)])
    sysm = nonsmooth_system(p)
    return p, sysm, x0, integrate(sysm, x0, (0.0, rng.uniform(5.0, 30.0)), _TRAJ_OPTS)


@invariant("integrator", "mode honesty")
def mode_honesty(rng, n, res):
    for _ in range(n):
        p, _, x0, tr = _random_trajectory(rng)
        bad = 0
        for seg in tr.segments:
            for z in seg.xs:
                y, tol = z[1], _tol(z)
                ok = {Mode.SMOOTH_PLUS: y >= -tol, Mode.SMOOTH_MINUS: y <= tol,
                      Mode.SLIDING: abs(y) <= tol}[seg.mode]
                bad += not ok
        if bad:
            res.fail(f"eps={p.epsilon:.4g} x0={x0}: {bad} samples off their region")
        res.cases += 1


_MANIFOLD_EVENTS = (EventKind.CROSSING_IN, EventKind.CROSSING_OUT, EventKind.SLIDE_ENTRY,
                    EventKind.SLIDE_EXIT_LAMBDA0, EventKind.SLIDE_EXIT_LAMBDA1,
                    EventKind.TANGENCY_GRAZE)


@invariant("integrator", "event localization")
def event_localization(rng, n, res):
    while res.cases < n:
        p, _, x0, tr = _random_trajectory(rng)
        evs = [e for e in tr.events if e.kind in _MANIFOLD_EVENTS]
        if not evs:
            continue
        worst = max(abs(e.x[1]) / _tol(e.x) for e in evs)
        if worst > 1.0:
            res.fail(f"eps={p.epsilon:.4g} x0={x0}: |h| = {worst:.2f} x tolerance")
        res.cases += 1


@invariant("integrator", "reversibility on smooth segments")
def reversibility(rng, n, res):
    while res.cases < n:
        p, sysm, x0, tr = _random_trajectory(rng)
        segs = [s for s in tr.segments if s.mode in (Mode.SMOOTH_PLUS, Mode.SMOOTH_MINUS)
                and len(s.ts) >= 2 and s.ts[-1] - s.ts[0] > 0.05]
        if not segs:
            continue
        seg = segs[rng.integers(len(segs))]
        i0 = int(rng.integers(0, len(seg.ts) - 1))
        nf = sysm.native.plus if seg.mode is Mode.SMOOTH_PLUS else sysm.native.minus
        piece = SmoothSystem(2, nf, native=nf, name="piece")
        back = integrate(piece, seg.xs[-1], (seg.ts[-1], seg.ts[i0]),
                         IntegrationOptions(rtol=1e-11, atol=1e-13, store=False))
        err = float(np.max(np.abs(back.x_final - seg.xs[i0])))
        if err > 1e-6:
            res.fail(f"eps={p.epsilon:.4g} x0={x0}: backward error {err:.2e}")
        res.cases += 1


def exit_test_system(c: float, mirrored: bool) -> PiecewiseSystem:
    """Sliding region ``x < c`` on ``y = 0`` that ends in a tangency at ``x = c``.

    Unmirrored: ``f_plus = (1, x - c)``, ``f_minus = (1, 1)``, exit with lambda = 1.
    Mirrored: ``f_plus = (1, -1)``, ``f_minus = (1, c - x)``, exit with lambda = 0.
    """
    if mirrored:
        fp, fm = (lambda z: np.array([1.0, -1.0])), (lambda z: np.array([1.0, c - z[0]]))
    else:
        fp, fm = (lambda z: np.array([1.0, z[0] - c])), (lambda z: np.array([1.0, 1.0]))
    return PiecewiseSystem(dim=2, f_plus=fp, f_minus=fm, h=lambda z: z[1],
                           grad_h=lambda z: np.array([0.0, 1.0]), name="exit-test")


@invariant("integrator", "sliding exit correctness")
def sliding_exit(rng, n, res):
    for i in range(n):
        mirrored = bool(i % 2)
        c = rng.uniform(-1.0, 1.0)
        x0 = np.array([c - rng.uniform(0.3, 1.0), rng.uniform(-0.04, 0.04)])
        sysm = exit_test_system(c, mirrored)
        tr = integrate(sysm, x0, (0.0, (c - x0[0]) + 0.5), IntegrationOptions(max_events=20))
        want_kind = EventKind.SLIDE_EXIT_LAMBDA0 if mirrored else EventKind.SLIDE_EXIT_LAMBDA1
        want_mode = Mode.SMOOTH_MINUS if mirrored else Mode.SMOOTH_PLUS
        exits = [j for j, s in enumerate(tr.segments) if s.exit_event is not None
                 and s.exit_event.kind in (EventKind.SLIDE_EXIT_LAMBDA0, EventKind.SLIDE_EXIT_LAMBDA1)]
        if len(exits) != 1:
            res.fail(f"c={c:.4g} mirrored={mirrored}: {len(exits)} sliding exits")
        else:
            j = exits[0]
            ev = tr.segments[j].exit_event
            nxt = tr.segments[j + 1] if j + 1 < len(tr.segments) else None
            f = sysm.fminus(ev.x) if mirrored else sysm.fplus(ev.x)
            # first field sample after the exit must leave the manifold into its region
            after = nxt.xs[-1][1] if nxt is not None else 0.0
            into = after < 0.0 if mirrored else after > 0.0
            if ev.kind is not want_kind or nxt is None or nxt.mode is not want_mode \
                    or abs(ev.x[0] - c) > 1e-8 or abs(f[1]) > 1e-8 or not into:
                res.fail(f"c={c:.4g} mirrored={mirrored}: exit {ev.kind.value} at x={ev.x[0]:.10g}, "
                         f"next {None if nxt is None else nxt.mode.value}")
        res.cases += 1


@invariant("integrator", "tolerance-error order")
def convergence_order(rng, n, res):
    tols = 1e-4 * 2.0 ** -np.arange(12)
    for _ in range(n):
        p = WelanderParams(epsilon=rng.uniform(-0.05, 0.05), a=10.0 ** rng.uniform(-1.7, -0.3))
        x0 = np.array([rng.uniform(0.3, 1.0), rng.uniform(-0.3, 0.3)])
        sysm = blowup.smooth_xy_system(p)
        ref = integrate(sysm, x0, (0.0, 5.0), IntegrationOptions(rtol=1e-13, atol=1e-15, store=False)).x_final
        errs = [np.linalg.norm(integrate(sysm, x0, (0.0, 5.0),
                                         IntegrationOptions(rtol=t, atol=t, store=False)).x_final - ref)
                for t in tols]
        slope = float(np.polyfit(np.log(tols), np.log(errs), 1)[0])
        # a 5(4) pair with per-step control gives global error ~ tol**(4/5 .. 1)
        if not 0.6 <= slope <= 1.4:
            res.fail(f"eps={p.epsilon:.4g} a={p.a:.3g}: error ~ tol**{slope:.2f}")
        res.cases += 1


# -- welander-model -------------------------------------------------------------------------

@invariant("welander-model", "pointwise Heaviside limit")
def pointwise_limit(rng, n, res):
    for _ in range(n):
        eps = rng.uniform(-0.1, 0.1)
        rho = eps + rng.choice([-1, 1]) * 10.0 ** rng.uniform(-3, 0)
        errs = []
        for a in (1e-2, 1e-4, 1e-6):
            p = WelanderParams(epsilon=eps, a=a)
            err = abs(float(k_smooth(rho, p)) - k_heaviside(rho, p))
            errs.append(err)
            if not err < 2.0 * a / (math.pi * abs(rho - eps)):
                res.fail(f"rho-eps={rho - eps:.3e} a={a:g}: error {err:.3e} above tail bound")
        if not errs[0] >= errs[1] >= errs[2]:
            res.fail(f"rho-eps={rho - eps:.3e}: errors not decreasing {errs}")
        res.cases += 1


@invariant("welander-model", "coordinate-change commutation")
def coordinate_commutation(rng, n, res):
    t_eval = np.linspace(0.0, 10.0, 21)
    opts = IntegrationOptions(rtol=1e-12, atol=1e-14)
    for _ in range(n):
        p = WelanderParams(epsilon=rng.uniform(-0.05, 0.05), a=10.0 ** rng.uniform(-2, -0.5))
        TS0 = np.array([rng.uniform(0.3, 1.0), rng.uniform(0.3, 1.0)])
        ts_sys = SmoothSystem(2, smooth_field_TS(p), name="TS")
        A = solve_at(ts_sys, TS0, t_eval, opts)
        B = solve_at(blowup.smooth_xy_system(p), to_xy(TS0, p), t_eval, opts)
        err = max(float(np.max(np.abs(from_xy(zb, p) - za))) for za, zb in zip(A, B))
        if err > 1e-8:
            res.fail(f"eps={p.epsilon:.4g} a={p.a:.3g}: sup error {err:.2e}")
        res.cases += 1


@invariant("welander-model", "dS/dlambda equals -eps (any alpha, beta)")
def welander_ds_dlambda(rng, n, res):
    for _ in range(n):
        p = WelanderParams(alpha=rng.uniform(0.1, 2.0), beta=rng.uniform(0.1, 2.0),
                           epsilon=rng.uniform(-0.1, 0.1))
        x = rng.uniform(0.0, 1.5)
        gen = normal_speed(x, p, 1.0) - normal_speed(x, p, 0.0)
        if ds_dlambda(p) != -p.epsilon or abs(gen + p.epsilon) > 1e-14:
            res.fail(f"alpha={p.alpha:.3g} beta={p.beta:.3g} eps={p.epsilon:.4g}: {gen!r}")
        res.cases += 1


@invariant("welander-model", "virtual equilibria in Welander's regime")
def virtual_equilibria_regime(rng, n, res):
    # Welander's oscillatory setting is eps = -0.1; cases sample its neighbourhood
    for i in range(n):
        eps = -0.1 if i == 0 else rng.uniform(-0.11, -0.09)
        p = WelanderParams(epsilon=eps)
        for k, (z, real) in virtual_equilibria(p).items():
            # k = 1 applies where y > 0, k = 0 where y < 0
            wrong_side = z[1] < 0.0 if k == 1 else z[1] > 0.0
            if not wrong_side or real:
                res.fail(f"eps={eps:.4g}: k={k} equilibrium at (x, y) = ({z[0]:.4g}, {z[1]:.4g}) "
                         f"lies in its own region")
        res.cases += 1


# -- blowup-analysis -----------------------------------------------------------------------

@invariant("blowup-analysis", "chart conjugacy")
def chart_conjugacy(rng, n, res):
    t_eval = np.linspace(0.0, 10.0, 21)
    opts = IntegrationOptions(rtol=1e-12, atol=1e-14)
    for _ in range(n):
        p = WelanderParams(epsilon=rng.uniform(-0.05, 0.05), a=10.0 ** rng.uniform(-3, -1))
        z0 = np.array([rng.uniform(0.4, 1.0), rng.uniform(-0.1, 0.1)])
        A = solve_at(blowup.smooth_xy_system(p), z0, t_eval, opts)
        b0 = blowup.to_blowup(z0, p.a)
        B = solve_at(blowup.BlowUpSystem(p).smooth_system(), b0, t_eval, opts)
        err = max(float(np.max(np.abs(blowup.from_blowup(zb, p.a) - za))) for za, zb in zip(A, B))
        if err > 1e-6:
            res.fail(f"eps={p.epsilon:.4g} a={p.a:.3g} z0={z0}: sup error {err:.2e}")
        res.cases += 1


_REFERENCE = {("f1", "a*xi"): -4.0 / 3.0, ("f1", "a*psi"): -3.0 / 4.0,
            ("f2", "eps"): -5.0 / (8.0 * math.pi), ("f2", "a"): 5.0 / (8.0 * math.pi * math.sqrt(3.0)),
            ("f2", "xi"): 3.0 / (10.0 * math.pi),
            ("f2", "a*psi"): math.sqrt(3.0) / (4.0 * math.pi) - 5.0 / 12.0,
            ("f2", "eps*psi"): -(5.0 / (4.0 * math.sqrt(3.0)) + 3.0 / (4.0 * math.pi)),
            ("f2", "xi*psi"): math.sqrt(3.0) / 5.0}


@invariant("blowup-analysis", "expansion vs finite-difference oracle")
def expansion_vs_oracle(rng, n, res):
    for _ in range(n):
        h = 10.0 ** rng.uniform(-5.0, -4.3)
        fd = blowup.fd_oracle(h)
        for (comp, key), want in _REFERENCE.items():
            got = fd[comp][key]
            if abs(got - want) > 1e-6 * abs(want):
                res.fail(f"h={h:.2e} {comp}[{key}]: {got:.10g} vs {want:.10g}")
        res.cases += 1


def _numeric_jacobian(x, k, p, h=1e-7):
    J = np.empty((2, 2))
    for j, (dx, dk) in enumerate(((h, 0.0), (0.0, h))):
        J[:, j] = (blowup.fast_field(x + dx, k + dk, p) - blowup.fast_field(x - dx, k - dk, p)) / (2 * h)
    return J


@invariant("blowup-analysis", "Jacobian consistency (squared remainder)")
def jacobian_consistency(rng, n, res):
    for _ in range(n):
        u = rng.uniform(0.05, 0.95)
        a0, e0 = u * 1e-2, rng.choice([-1, 1]) * (1.0 - u) * 1e-2
        ratios = []
        for t in (1.0, 0.1, 0.01):
            a, e = a0 * t, e0 * t
            p = WelanderParams(epsilon=e, a=a)
            x, k = blowup.smooth_equilibrium(p)
            err = float(np.max(np.abs(blowup.jacobian(a, e) - _numeric_jacobian(x, k, p))))
            ratios.append(err / (a + abs(e)) ** 2)
        if ratios[-1] > 10.0 * ratios[0]:
            res.fail(f"a={a0:.2e} eps={e0:.2e}: err/(a+|eps|)^2 = "
                     + ", ".join(f"{r:.3g}" for r in ratios))
        res.cases += 1


@invariant("blowup-analysis", "eigenvalue symmetry")
def eigenvalue_symmetry(rng, n, res):
    while res.cases < n:
        a, e = 10.0 ** rng.uniform(-4, -1), rng.uniform(-0.1, 0.1)
        if blowup.discriminant(a, e) >= 0.0:
            continue
        J = blowup.jacobian(a, e)
        l1, l2 = np.linalg.eigvals(J)
        tr = blowup.trace(a, e)
        if abs(l1 - np.conj(l2)) > 1e-10 or max(abs(l1.real - tr / 2), abs(l2.real - tr / 2)) > 1e-10:
            res.fail(f"a={a:.3g} eps={e:.4g}: eigenvalues {l1}, {l2}, trace/2 {tr / 2}")
        res.cases += 1


@invariant("blowup-analysis", "equilibrium limit along the Hopf line")
def equilibrium_limit(rng, n, res):
    for _ in range(n):
        t = rng.uniform(0.0, 1.0)
        d = []
        for a in (1e-2, 1e-3, 1e-4):
            x, k = blowup.smooth_equilibrium(WelanderParams(epsilon=blowup.hopf_line(a) * t, a=a))
            d.append(math.hypot(x - 0.75, k - 1.0 / 3.0))
        if not (d[0] > d[1] > d[2] and d[2] < 1e-3):
            res.fail(f"t={t:.4f}: distances {', '.join(f'{v:.3e}' for v in d)}")
        res.cases += 1


# -- bifurcation-scan ------------------------------------------------------------------------

# nonsmooth attractor by sliding stability: stable sliding (eps > 0) ends on the
# pseudoequilibrium, unstable sliding (eps < 0) sheds the periodic orbit
def _nonsmooth_attractor(eps: float):
    return scan.Attractor.SLIDING if eps > 0.0 else scan.Attractor.PERIODIC


REGIME_EXAMPLES = ((1e-3, -0.0075),)


@invariant("bifurcation-scan", "regime consistency away from the Hopf line")
def regime_consistency(rng, n, res):
    budget = scan.Budget()
    cases = list(REGIME_EXAMPLES)
    while len(cases) < n:
        a = 10.0 ** rng.uniform(-4, -3)
        eps = rng.uniform(-0.05, 0.05)
        if abs(eps - blowup.hopf_line(a)) > 5.0 * a:
            cases.append((a, eps))
    for a, eps in cases:
        pt = scan.scan_smooth([a], [eps], budget, hopf_points=0).points[0]
        ns = _nonsmooth_attractor(eps)
        if pt.attractor.stationary != ns.stationary:
            res.fail(f"a={a:.3g} eps={eps:.5g}: smooth {pt.attractor.value}, nonsmooth {ns.value}")
        res.cases += 1


@invariant("bifurcation-scan", "diagram determinism")
def diagram_determinism(rng, n, res):
    for i in range(n):
        grid = [float(np.round(v, 4)) for v in rng.uniform(-0.05, 0.05, size=rng.integers(1, 3))]
        if i % 4 == 0:
            budget = scan.Budget(t_final=10.0, seeds=1, max_events=50)
            runs = [scan.scan_nonsmooth(grid, budget).to_csv() for _ in range(2)]
        else:
            a_list = [float(10.0 ** rng.uniform(-3.5, -2))]
            runs = [scan.scan_smooth(a_list, grid, scan.Budget(), hopf_points=0).to_csv()
                    for _ in range(2)]
        if runs[0] != runs[1]:
            res.fail(f"grid={grid}: CSV differs between identical runs")
        res.cases += 1


# -- cli ------------------------------------------------------------------------------------

def _run_cli(argv):
    from .cli import main

    out, err = io.StringIO(), io.StringIO()
    with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
        code = main(argv)
    return code, out.getvalue(), err.getvalue()


def _random_command(rng):
    eps = float(np.round(rng.uniform(-0.05, 0.05), 4))
    cmd = ["sliding", "simulate", "blowup", "scan"][int(rng.integers(4))]
    argv = [cmd, "--set", f"params.epsilon={eps}"]
    if cmd == "simulate":
        argv += ["--set", f"integration.t_span=[0,{rng.uniform(1, 10):.3f}]",
                 "--format", ["csv", "json", "svg"][int(rng.integers(3))]]
        if rng.random() < 0.3:
            argv += ["--set", "integration.x0=random", "--seed", str(int(rng.integers(1000)))]
    elif cmd == "blowup":
        argv += ["--set", f"blowup.a={10.0 ** rng.uniform(-3, -2):.5g}", "--set", "blowup.n=21"]
    elif cmd == "scan":
        argv += ["--set", "scan.mode=smooth", "--set", f"scan.eps_grid=[{eps}]",
                 "--set", f"scan.a_list=[{10.0 ** rng.uniform(-3, -2):.5g}]"]
    return argv


def _tree_bytes(root):
    out = {}
    for name in sorted(os.listdir(root)):
        with open(os.path.join(root, name), "rb") as fh:
            out[name] = fh.read()
    return out


@invariant("cli", "round-trip determinism")
def cli_round_trip(rng, n, res):
    with tempfile.TemporaryDirectory() as tmp:
        for i in range(n):
            argv = _random_command(rng)
            trees = []
            for r in range(2):
                d = os.path.join(tmp, f"{i}-{r}")
                code, _, err = _run_cli(argv + ["--out", d])
                trees.append((code, _tree_bytes(d) if os.path.isdir(d) else {}))
            if trees[0][0] != 0 or trees[0] != trees[1]:
                res.fail(f"{' '.join(argv)}: exit {trees[0][0]}/{trees[1][0]}, outputs differ")
            res.cases += 1


_BAD_SETTINGS = (["--set", "nonexistent=1"], ["--set", "integration.t_span=[5,1]"],
                 ["--set", "output.format=png"], ["--set", "params.alpha=-1"],
                 ["--set", "blowup.n=2"], ["--set", "scan.threads=0"], ["--set", "novalue"])


@invariant("cli", "exit codes and stdout discipline")
def cli_exit_codes(rng, n, res):
    with tempfile.TemporaryDirectory() as tmp:
        for i in range(n):
            kind = i % 3
            argv = _random_command(rng)
            if kind == 0:
                bad = _BAD_SETTINGS[int(rng.integers(len(_BAD_SETTINGS)))]
                if "--format" in argv:
                    # the dedicated flag outranks --set, so drop it
                    j = argv.index("--format")
                    argv = argv[:j] + argv[j + 2:]
                code, out, _ = _run_cli(argv + bad + ["--out", os.path.join(tmp, str(i))])
                if code != 1 or out:
                    res.fail(f"{' '.join(argv + bad)}: exit {code}, stdout {len(out)} bytes")
            elif kind == 1:
                code, out, _ = _run_cli(["blowup", "--set", f"blowup.a={-rng.uniform(0, 0.1):.4g}",
                                         "--out", os.path.join(tmp, str(i))])
                if code != 1 or out:
                    res.fail(f"blowup with a<=0: exit {code}")
            else:
                d = os.path.join(tmp, str(i))
                code, out, _ = _run_cli(argv + ["--stdout", "--out", d])
                ok = code == 0 and out and not os.path.exists(d)
                if ok and argv[0] == "sliding":
                    json.loads(out)
                if not ok:
                    res.fail(f"{' '.join(argv)} --stdout: exit {code}, "
                             f"{'files written' if os.path.exists(d) else 'no files'}")
            res.cases += 1


def run_battery(seed: int = 20240501, n: int = MIN_CASES, only=None) -> list[InvariantResult]:
    """Run every registered invariant on ``n`` cases drawn from one seeded stream each."""
    out = []
    for idx, (module, name, fn) in enumerate(REGISTRY):
        if only is not None and module not in only:
            continue
        res = InvariantResult(module, name)
        rng = np.random.default_rng([seed, idx])
        t0 = time.perf_counter()
        try:
            fn(rng, n, res)
        except FusedFocusError as exc:
            res.fail(f"raised {type(exc).__name__}: {exc}")
        res.seconds = time.perf_counter() - t0
        out.append(res)
    return out
