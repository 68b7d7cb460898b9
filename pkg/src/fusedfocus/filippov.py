"""Piecewise-smooth systems and the Filippov sliding calculus.

A :class:`PiecewiseSystem` carries two smooth fields ``f_plus`` (valid where
``h > 0``) and ``f_minus`` (valid where ``h < 0``).  On ``h = 0`` the fields are
closed by the convex combination ``lam * f_plus + (1 - lam) * f_minus``; a
sliding solution exists where some ``lam`` in ``[0, 1]`` makes that
combination tangent to the manifold.
"""
from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import brentq

from .errors import DegenerateContact, EvaluationError, NotInSlidingRegion, NotOnManifold

log = logging.getLogger(__name__)

MANIFOLD_TOL = 1e-9
TANGENCY_TOL = 1e-8
DUPLICATE_TOL = 1e-6


class BoundaryKind(enum.Enum):
    CROSSING = "crossing"
    STABLE_SLIDING = "stable-sliding"
    UNSTABLE_SLIDING = "unstable-sliding"
    TANGENCY = "tangency"


class Side(enum.Enum):
    PLUS = "plus"
    MINUS = "minus"


class Visibility(enum.Enum):
    VISIBLE = "visible"
    INVISIBLE = "invisible"


@dataclass(frozen=True)
class NativeSpec:
    """Kernel description of a system whose pieces are built-in fields.

    ``h`` must be the coordinate function ``x[h_index] - h_value``.
    """

    plus: object
    minus: object
    h_index: int
    h_value: float = 0.0


@dataclass(frozen=True)
class PiecewiseSystem:
    """Two smooth vector fields glued along the zero set of ``h``.

    ``jac_plus``/``jac_minus``/``hess_h`` are optional analytic derivatives used
    for tangency visibility; ``lambda_field(x, lam)`` replaces the convex
    combination when the dependence on the multiplier is not linear.
    """

    dim: int
    f_plus: Callable
    f_minus: Callable
    h: Callable
    grad_h: Callable
    jac_plus: Optional[Callable] = None
    jac_minus: Optional[Callable] = None
    hess_h: Optional[Callable] = None
    domain: Optional[tuple] = None
    lambda_field: Optional[Callable] = None
    native: Optional[NativeSpec] = None
    name: str = "custom"

    def check_domain(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise EvaluationError(f"expected a state of dimension {self.dim}, got shape {x.shape}")
        if not np.all(np.isfinite(x)):
            raise EvaluationError("non-finite state")
        if self.domain is not None:
            lo, hi = self.domain
            if np.any(x < np.asarray(lo)) or np.any(x > np.asarray(hi)):
                raise EvaluationError(f"state {x} outside domain box")
        return x

    def fplus(self, x) -> np.ndarray:
        return np.asarray(self.f_plus(x), dtype=float)

    def fminus(self, x) -> np.ndarray:
        return np.asarray(self.f_minus(x), dtype=float)

    def normal_speeds(self, x) -> tuple[float, float]:
        """``(f_plus . grad h, f_minus . grad h)`` at ``x``."""
        g = np.asarray(self.grad_h(x), dtype=float)
        return float(self.fplus(x) @ g), float(self.fminus(x) @ g)

    def on_manifold(self, x, tol: float = MANIFOLD_TOL) -> bool:
        x = np.asarray(x, dtype=float)
        return abs(float(self.h(x))) <= tol * (1.0 + float(np.linalg.norm(x)))

    def project(self, x, iters: int = 8, tol: float = 0.0) -> np.ndarray:
        """Newton projection of ``x`` onto ``h = 0`` along the gradient, until ``|h| <= tol``."""
        x = np.array(x, dtype=float)
        if self.native is not None:
            x[self.native.h_index] = self.native.h_value
            return x
        for _ in range(iters):
            g = np.asarray(self.grad_h(x), dtype=float)
            hv = float(self.h(x))
            if abs(hv) <= tol:
                break
            x = x - hv * g / float(g @ g)
        return x


@dataclass(frozen=True)
class BoundaryClassification:
    kind: BoundaryKind
    lambda_star: Optional[float]
    s_plus: float
    s_minus: float
    dS_dlambda: float
    tangent_sides: tuple = ()


@dataclass(frozen=True)
class TangencyPoint:
    location: np.ndarray = field(compare=False)
    side: Side
    visibility: Visibility
    lie2: float = field(default=float("nan"), compare=False)


def eval_field(sys: PiecewiseSystem, x, lam: float) -> np.ndarray:
    """Filippov field ``lam * f_plus + (1 - lam) * f_minus`` at ``x``."""
    x = sys.check_domain(x)
    if sys.lambda_field is not None:
        return np.asarray(sys.lambda_field(x, lam), dtype=float)
    if lam == 1.0:
        return sys.fplus(x)
    if lam == 0.0:
        return sys.fminus(x)
    return lam * sys.fplus(x) + (1.0 - lam) * sys.fminus(x)


def _require_manifold(sys, x):
    x = sys.check_domain(x)
    if not sys.on_manifold(x):
        raise NotOnManifold(f"|h(x)| = {abs(float(sys.h(x))):.3e} exceeds manifold tolerance")
    return x


def _sliding_S(sys, x):
    g = np.asarray(sys.grad_h(x), dtype=float)
    return lambda lam: float(eval_field(sys, x, lam) @ g)


def sliding_lambda(sys: PiecewiseSystem, x) -> Optional[float]:
    """Multiplier ``lam*`` in [0, 1] making the combined field tangent, or None.

    Raises :class:`DegenerateContact` when both one-sided fields are tangent.
    """
    x = _require_manifold(sys, x)
    if sys.lambda_field is not None:
        S = _sliding_S(sys, x)
        s0, s1 = S(0.0), S(1.0)
        if s0 == 0.0:
            return 0.0
        if s1 == 0.0:
            return 1.0
        if s0 * s1 > 0.0:
            return None
        return float(brentq(S, 0.0, 1.0, xtol=1e-15, rtol=4 * np.finfo(float).eps))
    s_plus, s_minus = sys.normal_speeds(x)
    denom = s_minus - s_plus
    if denom == 0.0:
        if s_minus == 0.0:
            raise DegenerateContact(f"both fields tangent at {x}")
        return None
    lam = s_minus / denom
    if 0.0 <= lam <= 1.0:
        return float(lam)
    return None


def sliding_flow(sys: PiecewiseSystem, x) -> np.ndarray:
    """Filippov sliding vector field at a manifold point inside a sliding region."""
    lam = sliding_lambda(sys, x)
    if lam is None:
        raise NotInSlidingRegion(f"no sliding multiplier at {np.asarray(x)}")
    return eval_field(sys, x, lam)


def _dS_dlambda(sys, x, lam):
    if sys.lambda_field is None:
        s_plus, s_minus = sys.normal_speeds(x)
        return s_plus - s_minus
    S = _sliding_S(sys, x)
    h = 1e-6
    lo, hi = max(0.0, lam - h), min(1.0, lam + h)
    return (S(hi) - S(lo)) / (hi - lo)


def classify_boundary(sys: PiecewiseSystem, x) -> BoundaryClassification:
    """Crossing / stable sliding / unstable sliding / tangency at a manifold point."""
    x = _require_manifold(sys, x)
    fp, fm = sys.fplus(x), sys.fminus(x)
    g = np.asarray(sys.grad_h(x), dtype=float)
    s_plus, s_minus = float(fp @ g), float(fm @ g)
    tangent = []
    if abs(s_plus) <= TANGENCY_TOL * (1.0 + float(np.linalg.norm(fp))):
        tangent.append(Side.PLUS)
    if abs(s_minus) <= TANGENCY_TOL * (1.0 + float(np.linalg.norm(fm))):
        tangent.append(Side.MINUS)
    if tangent:
        lam = None
        if len(tangent) == 1:
            try:
                lam = sliding_lambda(sys, x)
            except DegenerateContact:
                lam = None
        slope = _dS_dlambda(sys, x, lam if lam is not None else 0.5)
        return BoundaryClassification(BoundaryKind.TANGENCY, lam, s_plus, s_minus, slope,
                                      tuple(tangent))
    if s_plus * s_minus > 0.0:
        return BoundaryClassification(BoundaryKind.CROSSING, None, s_plus, s_minus,
                                      _dS_dlambda(sys, x, 0.5))
    lam = sliding_lambda(sys, x)
    slope = _dS_dlambda(sys, x, lam)
    kind = BoundaryKind.STABLE_SLIDING if slope < 0.0 else BoundaryKind.UNSTABLE_SLIDING
    return BoundaryClassification(kind, lam, s_plus, s_minus, slope)


def second_lie_derivative(sys: PiecewiseSystem, x, side: Side) -> float:
    """``L_f^2 h`` for the field on ``side``; analytic when derivatives are supplied."""
    x = np.asarray(x, dtype=float)
    f = sys.fplus if side is Side.PLUS else sys.fminus
    jac = sys.jac_plus if side is Side.PLUS else sys.jac_minus
    fx = f(x)
    if jac is not None and sys.hess_h is not None:
        g = np.asarray(sys.grad_h(x), dtype=float)
        J = np.asarray(jac(x), dtype=float)
        H = np.asarray(sys.hess_h(x), dtype=float)
        return float(g @ J @ fx + fx @ H @ fx)
    # normal speed differentiated along the flow by central differences
    nf = float(np.linalg.norm(fx))
    if nf == 0.0:
        return 0.0
    d = 1e-6 / nf

    def s(z):
        return float(f(z) @ np.asarray(sys.grad_h(z), dtype=float))

    return (s(x + d * fx) - s(x - d * fx)) / (2.0 * d)


def visibility(sys: PiecewiseSystem, x, side: Side) -> Visibility:
    """A tangency is visible when the tangent orbit stays in its own region."""
    l2 = second_lie_derivative(sys, x, side)
    inside = l2 > 0.0 if side is Side.PLUS else l2 < 0.0
    return Visibility.VISIBLE if inside else Visibility.INVISIBLE


def find_tangencies(sys: PiecewiseSystem, box: Sequence, n_seeds: int = 64) -> list[TangencyPoint]:
    """All isolated tangency points of a planar system inside ``box = (lo, hi)``.

    The manifold is traced as a graph over the coordinate along which ``h``
    varies least; the normal speed of each field is sampled on ``n_seeds``
    manifold points and every sign change is refined by a 1-D root find.
    Seeds where the manifold cannot be located are logged and skipped.
    """
    if sys.dim != 2:
        raise NotImplementedError("tangency search is implemented for planar systems")
    lo, hi = (np.asarray(b, dtype=float) for b in box)
    centre = 0.5 * (lo + hi)
    g = np.abs(np.asarray(sys.grad_h(centre), dtype=float))
    u_idx = int(np.argmin(g))
    v_idx = 1 - u_idx

    def manifold_point(u):
        def hv(v):
            z = np.empty(2)
            z[u_idx], z[v_idx] = u, v
            return float(sys.h(z))

        a, b = hv(lo[v_idx]), hv(hi[v_idx])
        z = np.empty(2)
        z[u_idx] = u
        if a == 0.0:
            z[v_idx] = lo[v_idx]
        elif b == 0.0:
            z[v_idx] = hi[v_idx]
        elif a * b > 0.0:
            return None
        else:
            z[v_idx] = brentq(hv, lo[v_idx], hi[v_idx], xtol=1e-15, rtol=4 * np.finfo(float).eps)
        return z

    us = np.linspace(lo[u_idx], hi[u_idx], n_seeds)
    pts = [manifold_point(u) for u in us]
    for u, p in zip(us, pts):
        if p is None:
            log.debug("tangency seed u=%g: manifold not bracketed in box", u)

    found: list[TangencyPoint] = []
    for side in (Side.PLUS, Side.MINUS):
        f = sys.fplus if side is Side.PLUS else sys.fminus

        def speed(u):
            z = manifold_point(u)
            if z is None:
                raise ValueError("manifold lost")
            return float(f(z) @ np.asarray(sys.grad_h(z), dtype=float))

        roots = []
        vals = [None if p is None else float(f(p) @ np.asarray(sys.grad_h(p), dtype=float))
                for p in pts]
        for i, v in enumerate(vals):
            if v == 0.0:
                roots.append(us[i])
        for i in range(n_seeds - 1):
            v0, v1 = vals[i], vals[i + 1]
            if v0 is None or v1 is None or v0 == 0.0 or v1 == 0.0 or v0 * v1 > 0.0:
                continue
            try:
                roots.append(brentq(speed, us[i], us[i + 1], xtol=1e-15,
                                    rtol=4 * np.finfo(float).eps))
            except (ValueError, RuntimeError) as exc:
                log.warning("tangency refinement failed on [%g, %g]: %s", us[i], us[i + 1], exc)
        roots.sort()
        merged = []
        for r in roots:
            if merged and abs(r - merged[-1]) <= DUPLICATE_TOL:
                continue
            merged.append(r)
        for r in merged:
            z = manifold_point(r)
            l2 = second_lie_derivative(sys, z, side)
            vis = (Visibility.VISIBLE if (l2 > 0.0 if side is Side.PLUS else l2 < 0.0)
                   else Visibility.INVISIBLE)
            found.append(TangencyPoint(z, side, vis, l2))
    found.sort(key=lambda tp: (float(tp.location[u_idx]), tp.side.value))
    return found
