"""Acceptance criteria with their tolerances and runtime limits.

Shared by ``fusedfocus verify`` and ``tests/test_acceptance.py``.  Each
criterion returns ``(passed, detail)``; a criterion also fails when it
overruns its runtime limit.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.optimize import brentq

from . import blowup
from .errors import FusedFocusError, NotFound
from .filippov import BoundaryKind, Side, classify_boundary, find_tangencies, sliding_flow
from .integrator import (EventKind, IntegrationOptions, Mode, find_limit_cycle, integrate,
                         solve_at, welander_section)
from .invariants import run_battery
from .scan import SEEDS
from .welander import WelanderParams, ds_dlambda, nonsmooth_system, pseudoequilibrium

EPS_SET = (-0.05, -0.04, -0.03, -0.02, -0.01, 0.01, 0.02, 0.03, 0.04, 0.05)


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    seconds: float
    limit: float
    detail: str = ""

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return (f"[{tag}] criterion {self.number:2d} {self.name} "
                f"({self.seconds:.2f} s, limit {self.limit:g} s): {self.detail}")


CRITERIA: list[tuple[int, str, float, Callable]] = []


def criterion(number: int, name: str, limit: float):
    def deco(fn):
        CRITERIA.append((number, name, limit, fn))
        return fn
    return deco


@criterion(1, "sliding boundaries", 1.0)
def sliding_boundaries_closed_form():
    worst = 0.0
    for eps in EPS_SET:
        sysm = nonsmooth_system(WelanderParams(epsilon=eps))
        tang = {t.side: float(t.location[0]) for t in find_tangencies(sysm, ((0.0, -0.5), (1.5, 0.5)))}
        if set(tang) != {Side.PLUS, Side.MINUS}:
            return False, f"eps={eps}: tangencies found on {sorted(s.value for s in tang)}"
        worst = max(worst, abs(tang[Side.PLUS] - (0.75 + 15 * eps / 4)),
                    abs(tang[Side.MINUS] - (0.75 + 5 * eps / 4)))
    return worst <= 1e-8, f"max deviation from closed forms {worst:.2e} (tol 1e-08)"


@criterion(2, "sliding stability", 1.0)
def sliding_stability():
    worst = 0.0
    for eps in EPS_SET:
        p = WelanderParams(epsilon=eps)
        if ds_dlambda(p) != -eps:
            return False, f"eps={eps}: analytic dS/dlambda {ds_dlambda(p)!r} != {-eps!r}"
        sysm = nonsmooth_system(p)
        lo, hi = sorted((0.75 + 1.25 * eps, 0.75 + 3.75 * eps))
        for x in np.linspace(lo, hi, 7)[1:-1]:
            c = classify_boundary(sysm, np.array([x, 0.0]))
            worst = max(worst, abs(c.dS_dlambda + eps))
            want = BoundaryKind.STABLE_SLIDING if eps > 0 else BoundaryKind.UNSTABLE_SLIDING
            if c.kind is not want:
                return False, f"eps={eps} x={x:.5f}: {c.kind.value}, expected {want.value}"
    return worst <= 1e-15, (f"analytic dS/dlambda = -eps exactly; generic deviation {worst:.1e}; "
                            "stable for eps>0, unstable for eps<0")


@criterion(3, "fused-focus regimes", 30.0)
def fused_focus_regimes():
    opts = IntegrationOptions()
    notes = []
    # eps > 0: every seed ends sliding on the stable segment
    sysp = nonsmooth_system(WelanderParams(epsilon=0.04))
    for s in SEEDS:
        tr = integrate(sysp, s, (0.0, 500.0), opts)
        kind = classify_boundary(sysp, tr.x_final).kind if tr.final_mode is Mode.SLIDING else None
        if kind is not BoundaryKind.STABLE_SLIDING:
            return False, f"eps=+0.04 seed {s}: ends in {tr.final_mode.value} ({tr.status.value})"
    notes.append(f"eps=+0.04: {len(SEEDS)} seeds end in stable sliding")
    # eps = 0: upward crossings contract toward (3/4, 0)
    sys0 = nonsmooth_system(WelanderParams(epsilon=0.0))
    tr = integrate(sys0, SEEDS[0], (0.0, 400.0), opts.with_(max_events=400))
    xs = [e.x[0] for e in tr.events if e.kind is EventKind.CROSSING_IN]
    d = np.abs(np.array(xs) - 0.75)
    if len(d) < 11:
        return False, f"eps=0: only {len(d)} upward crossings"
    ratios = d[1:] / d[:-1]
    if not np.all(ratios < 1.0):
        return False, f"eps=0: crossing distance ratio {ratios.max():.6f} >= 1"
    notes.append(f"eps=0: {len(d)} crossings, distance {d[0]:.4g} -> {d[-1]:.4g}, max ratio {ratios.max():.6f}")
    # eps < 0: stable limit cycle
    sysm = nonsmooth_system(WelanderParams(epsilon=-0.04))
    orb = find_limit_cycle(sysm, welander_section(), (0.72, 0.9), opts)
    ok = orb.residual <= 1e-8 and orb.floquet_estimate < 1.0
    notes.append(f"eps=-0.04: cycle at x={orb.section_param:.7f}, |P(s)-s|={orb.residual:.1e}, "
                 f"floquet {orb.floquet_estimate:.4f}")
    return ok, "; ".join(notes)


@criterion(4, "pseudoequilibrium at the fused focus", 1.0)
def pseudoequilibrium_at_zero():
    x, k = pseudoequilibrium(WelanderParams(epsilon=0.0))
    err = max(abs(x - 0.75), abs(k - 1.0 / 3.0))
    # cross-check against a zero of the generic sliding flow close to eps = 0
    eps = 1e-4
    sysm = nonsmooth_system(WelanderParams(epsilon=eps))
    lo, hi = 0.75 + 1.25 * eps, 0.75 + 3.75 * eps
    xz = brentq(lambda u: sliding_flow(sysm, np.array([u, 0.0]))[0], lo + 1e-12, hi - 1e-12, xtol=1e-15)
    xp, _ = pseudoequilibrium(WelanderParams(epsilon=eps))
    ok = err <= 1e-10 and abs(xz - xp) <= 1e-10
    return ok, (f"(x, k) = ({x:.15f}, {k:.15f}), deviation {err:.1e}; sliding-flow zero at eps=1e-4 "
                f"agrees to {abs(xz - xp):.1e}")


REFERENCE_COEFFS = {
    ("f1", "a*xi"): -4.0 / 3.0,
    ("f1", "a*psi"): -3.0 / 4.0,
    ("f2", "eps"): -5.0 / (8.0 * math.pi),
    ("f2", "a"): 5.0 / (8.0 * math.pi * math.sqrt(3.0)),
    ("f2", "xi"): 3.0 / (10.0 * math.pi),
    ("f2", "a*psi"): math.sqrt(3.0) / (4.0 * math.pi) - 5.0 / 12.0,
    ("f2", "eps*psi"): -(5.0 / (4.0 * math.sqrt(3.0)) + 3.0 / (4.0 * math.pi)),
    ("f2", "xi*psi"): math.sqrt(3.0) / 5.0,
}


@criterion(5, "Taylor-coefficient oracle", 5.0)
def taylor_oracle():
    fd = blowup.fd_oracle()
    worst, where = 0.0, ""
    for (comp, key), want in REFERENCE_COEFFS.items():
        rel = abs(fd[comp][key] - want) / abs(want)
        if rel > worst:
            worst, where = rel, f"{comp}[{key}]"
    return worst <= 1e-6, f"{len(REFERENCE_COEFFS)} coefficients, max relative error {worst:.1e} at {where}"


@criterion(6, "chart conjugacy", 30.0)
def chart_conjugacy():
    t_eval = np.linspace(0.0, 10.0, 101)
    opts = IntegrationOptions(rtol=1e-12, atol=1e-14)
    worst = 0.0
    for a in (1e-2, 1e-3):
        for eps in (-0.02, 0.02):
            p = WelanderParams(epsilon=eps, a=a)
            for z0 in ((0.5, 0.2), (0.8, 0.01), (0.7, -0.05)):
                A = solve_at(blowup.smooth_xy_system(p), z0, t_eval, opts)
                B = solve_at(blowup.BlowUpSystem(p).smooth_system(), blowup.to_blowup(z0, a), t_eval, opts)
                err = max(float(np.max(np.abs(blowup.from_blowup(zb, a) - za))) for za, zb in zip(A, B))
                worst = max(worst, err)
    return worst <= 1e-6, f"sup-norm difference {worst:.1e} over 12 runs (tol 1e-06)"


@criterion(7, "Hopf line limit", 120.0)
def hopf_line_limit():
    rho = blowup.local_expansion().hopf_slope()
    found, rows = [], []
    ok = True
    for a in (0.02, 0.01, 0.005):
        try:
            eps_star = blowup.verify_hopf_numerically(a, check_amplitude=False).eps_star
        except NotFound as exc:
            rows.append(f"a={a:g}: {exc}")
            ok = False
            continue
        r = eps_star / a
        good = abs(r - rho) <= 0.1 * abs(rho)
        ok &= good
        found.append(abs(eps_star))
        rows.append(f"a={a:g}: eps*={eps_star:.6g}, eps*/a={r:.4f}")
    mono = len(found) == 3 and found[0] > found[1] > found[2]
    ok &= mono
    return ok, f"rho_H={rho:.6f}; " + "; ".join(rows) + ("" if mono else "; |eps*| not monotone over all three a")


@criterion(8, "supercriticality", 120.0)
def supercriticality():
    try:
        rec = blowup.verify_hopf_numerically(0.01)
    except NotFound as exc:
        return False, f"a=0.01: {exc}"
    ok = bool(rec.supercritical)
    return ok, (f"a=0.01: eps*={rec.eps_star:.6g}, log-log amplitude slope {rec.amplitude_slope:.4f} "
                f"from {len(rec.amplitudes)} cycles (target 0.5 +- 0.1)")


@criterion(9, "equilibrium perturbation", 10.0)
def equilibrium_perturbation():
    rows, ok = [], True
    for eps in (-0.02, 0.02):
        xp, kp = pseudoequilibrium(WelanderParams(epsilon=eps))
        d = []
        for a in (1e-2, 1e-3, 1e-4):
            x, k = blowup.smooth_equilibrium(WelanderParams(epsilon=eps, a=a))
            d.append(math.hypot(x - xp, k - kp))
        ratios = [d[0] / d[1], d[1] / d[2]]
        ok &= all(5.0 <= r <= 20.0 for r in ratios)
        rows.append(f"eps={eps:+g}: distances " + ", ".join(f"{v:.3e}" for v in d)
                    + " ratios " + ", ".join(f"{r:.2f}" for r in ratios))
    return ok, "; ".join(rows)


@criterion(10, "invariant suites", 120.0)
def invariant_suites():
    results = run_battery()
    failing = [r for r in results if not r.passed]
    detail = f"{len(results) - len(failing)}/{len(results)} invariants pass"
    if failing:
        detail += "; failing: " + ", ".join(f"{r.module}/{r.name}" for r in failing)
    invariant_suites.last_results = results
    return not failing, detail


invariant_suites.last_results = []


def run_criterion(number: int) -> CriterionResult:
    for num, name, limit, fn in CRITERIA:
        if num == number:
            t0 = time.perf_counter()
            try:
                ok, detail = fn()
            except FusedFocusError as exc:
                ok, detail = False, f"raised {type(exc).__name__}: {exc}"
            dt = time.perf_counter() - t0
            if dt > limit:
                ok, detail = False, detail + f"; over the {limit:g} s limit"
            return CriterionResult(num, name, bool(ok), dt, limit, detail)
    raise KeyError(f"no criterion {number}")


def run_all(only: Optional[list] = None) -> list[CriterionResult]:
    nums = [c[0] for c in CRITERIA] if not only else sorted(set(only))
    return [run_criterion(n) for n in nums]
