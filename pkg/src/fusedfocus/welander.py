"""Welander's nondimensional two-variable convection model.

Surface temperature ``T`` and salinity ``S`` relax towards atmospheric values
and are mixed with a deep box at rate ``k(rho)``, ``rho = -alpha T + S``.  The
convection rate is either the arctan ramp (``a > 0``) or its Heaviside limit
(``a = 0``).  The analysis runs in the chart

    x = T,    y = S - alpha T - epsilon,

in which the switching line is ``y = 0``.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, replace
from typing import Optional

import numpy as np

from .errors import ConfigError, DomainError
from .filippov import NativeSpec, PiecewiseSystem
from .kernels import ARCTAN_XY, FIXED_K, NativeField

ALPHA = 4.0 / 5.0
BETA = 1.0 / 2.0
K_GUARD = 1e-6


@dataclass(frozen=True)
class WelanderParams:
    alpha: float = ALPHA
    beta: float = BETA
    epsilon: float = 0.0
    a: float = 0.0

    def __post_init__(self):
        for name in ("alpha", "beta", "epsilon", "a"):
            v = getattr(self, name)
            if not isinstance(v, (int, float)) or isinstance(v, bool) or not math.isfinite(v):
                raise ConfigError(f"{name} must be a finite real, got {v!r}")
        if self.alpha <= 0.0 or self.beta <= 0.0:
            raise ConfigError("alpha and beta must be positive")
        if self.a < 0.0:
            raise ConfigError("the smoothness parameter a must be nonnegative")

    @property
    def smooth(self) -> bool:
        return self.a > 0.0

    def replace(self, **changes) -> "WelanderParams":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Optional[dict]) -> "WelanderParams":
        data = dict(data or {})
        unknown = set(data) - {"alpha", "beta", "epsilon", "a"}
        if unknown:
            raise ConfigError(f"unknown parameter keys: {sorted(unknown)}")
        return cls(**{k: float(v) for k, v in data.items()})

    def kernel_params(self, k: float = 0.0, delta: float = K_GUARD) -> tuple:
        return (self.alpha, self.beta, self.epsilon, self.a, float(k), float(delta))


# -- convection rate --------------------------------------------------------

def k_smooth(rho, params: WelanderParams):
    """Arctan convection rate, ``atan((rho - eps) / a) / pi + 1/2``."""
    if params.a <= 0.0:
        raise DomainError("k_smooth needs a > 0; use k_heaviside for the a = 0 limit")
    return np.arctan((np.asarray(rho) - params.epsilon) / params.a) / np.pi + 0.5


def k_heaviside(rho: float, params: WelanderParams) -> Optional[float]:
    """1 above the threshold, 0 below, None (undefined) exactly on it.

    The value on the threshold is deliberately left open; it is set by the
    Filippov closure, not by the model.
    """
    d = float(rho) - params.epsilon
    if d > 0.0:
        return 1.0
    if d < 0.0:
        return 0.0
    return None


def density(state_TS, params: WelanderParams) -> float:
    T, S = state_TS
    return -params.alpha * T + S


# -- charts -----------------------------------------------------------------

def vector_field_TS(state, params: WelanderParams, k: float) -> np.ndarray:
    T, S = float(state[0]), float(state[1])
    return np.array([1.0 - T - k * T, params.beta * (1.0 - S) - k * S])


def to_xy(state_TS, params: WelanderParams) -> np.ndarray:
    T, S = float(state_TS[0]), float(state_TS[1])
    return np.array([T, S - params.alpha * T - params.epsilon])


def from_xy(state_xy, params: WelanderParams) -> np.ndarray:
    x, y = float(state_xy[0]), float(state_xy[1])
    return np.array([x, y + params.alpha * x + params.epsilon])


def vector_field_xy(state, params: WelanderParams, k: float) -> np.ndarray:
    x, y = float(state[0]), float(state[1])
    al, be, ep = params.alpha, params.beta, params.epsilon
    return np.array([
        1.0 - x - k * x,
        be - be * ep - k * ep - al - (be + k) * y - (al * be - al) * x,
    ])


def jacobian_xy(params: WelanderParams, k: float) -> np.ndarray:
    """Jacobian of :func:`vector_field_xy` at fixed ``k``."""
    al, be = params.alpha, params.beta
    return np.array([[-(1.0 + k), 0.0], [-(al * be - al), -(be + k)]])


def smooth_field_xy(params: WelanderParams):
    """The arctan model in the ``(x, y)`` chart as a callable field."""
    if params.a <= 0.0:
        raise DomainError("smooth field requires a > 0")
    return NativeField(ARCTAN_XY, params.kernel_params())


def smooth_field_TS(params: WelanderParams):
    if params.a <= 0.0:
        raise DomainError("smooth field requires a > 0")

    def f(state):
        k = float(k_smooth(density(state, params), params))
        return vector_field_TS(state, params, k)

    return f


# -- Filippov structure -----------------------------------------------------

def normal_speed(x: float, params: WelanderParams, k: float) -> float:
    """``ydot`` on ``y = 0`` for convection rate ``k``."""
    al, be, ep = params.alpha, params.beta, params.epsilon
    return be - be * ep - k * ep - al - (al * be - al) * x


def ds_dlambda(params: WelanderParams) -> float:
    """Derivative of the sliding condition in the multiplier; equals ``-epsilon``."""
    return -params.epsilon


def sliding_boundaries(params: WelanderParams) -> tuple[float, float]:
    """Tangency abscissae on ``y = 0``: ``(x where f_minus is tangent, x where f_plus is)``.

    Solves ``beta - beta eps - k eps - alpha - (alpha beta - alpha) x = 0`` for
    ``k = 0`` and ``k = 1``.
    """
    al, be, ep = params.alpha, params.beta, params.epsilon
    c = al * be - al
    if c == 0.0:
        raise DomainError("alpha*beta - alpha = 0: tangency line is degenerate")
    return (be - be * ep - al) / c, (be - be * ep - ep - al) / c


def sliding_boundaries_default(eps: float) -> tuple[float, float]:
    """Closed forms for alpha = 4/5, beta = 1/2."""
    return 0.75 + 1.25 * eps, 0.75 + 3.75 * eps


def sliding_interval(params: WelanderParams) -> tuple[float, float]:
    lo, hi = sliding_boundaries(params)
    return (lo, hi) if lo <= hi else (hi, lo)


def pseudoequilibrium(params: WelanderParams) -> Optional[tuple[float, float]]:
    """Equilibrium ``(x, k)`` of the sliding flow, or None when it has left ``[0, 1]``.

    Eliminating ``x = 1/(1+k)`` leaves the quadratic
    ``-eps k^2 + (beta - beta eps - alpha - eps) k + (beta - beta eps - alpha beta) = 0``.
    When two roots lie in ``[0, 1]`` the one nearer the double-tangency value
    ``k = 1/3`` is returned.
    """
    al, be, ep = params.alpha, params.beta, params.epsilon
    A = -ep
    B = be - be * ep - al - ep
    C = be - be * ep - al * be
    if A == 0.0:
        roots = [] if B == 0.0 else [-C / B]
    else:
        disc = B * B - 4.0 * A * C
        if disc < 0.0:
            return None
        sq = math.sqrt(disc)
        # stable quadratic formula
        q = -0.5 * (B + math.copysign(sq, B))
        roots = [q / A]
        if q != 0.0:
            roots.append(C / q)
    ks = [k for k in roots if 0.0 <= k <= 1.0]
    if not ks:
        return None
    k = min(ks, key=lambda r: abs(r - 1.0 / 3.0))
    return 1.0 / (1.0 + k), k


def virtual_equilibria(params: WelanderParams) -> dict:
    """Equilibria of the two smooth pieces, with a flag saying whether each is real.

    Returns ``{0: (state_xy, is_real), 1: (state_xy, is_real)}`` keyed by k.
    """
    out = {}
    for k in (0.0, 1.0):
        T = 1.0 / (1.0 + k)
        S = params.beta / (params.beta + k)
        xy = to_xy((T, S), params)
        real = xy[1] > 0.0 if k == 1.0 else xy[1] < 0.0
        out[int(k)] = (xy, bool(real))
    return out


def nonsmooth_system(params: WelanderParams) -> PiecewiseSystem:
    """The Heaviside model in the ``(x, y)`` chart as a Filippov system with ``h = y``."""
    plus = NativeField(FIXED_K, params.kernel_params(k=1.0))
    minus = NativeField(FIXED_K, params.kernel_params(k=0.0))
    jp = jacobian_xy(params, 1.0)
    jm = jacobian_xy(params, 0.0)
    zero = np.zeros((2, 2))
    grad = np.array([0.0, 1.0])
    return PiecewiseSystem(
        dim=2,
        f_plus=plus,
        f_minus=minus,
        h=lambda z: float(z[1]),
        grad_h=lambda z: grad,
        jac_plus=lambda z: jp,
        jac_minus=lambda z: jm,
        hess_h=lambda z: zero,
        native=NativeSpec(plus=plus, minus=minus, h_index=1, h_value=0.0),
        name=f"welander-nonsmooth(eps={params.epsilon:g})",
    )


def phase_slope(x: float, params: WelanderParams, k: float) -> float:
    """``dy/dx`` of a smooth-piece orbit as it passes through ``y = 0``."""
    return normal_speed(x, params, k) / (1.0 - x - k * x)
