"""Blow-up of the switching layer and the smooth Hopf bifurcation.

With ``z = y / a`` and ``k = Phi(z) = atan(z)/pi + 1/2`` the arctan model
becomes a system in ``(x, k)``:

    x' = 1 - x - k x
    k' = (1/(a pi)) [sin^2(pi k) (core) + a (beta + k) sin(pi k) cos(pi k)]

with ``core = beta - beta eps - k eps - alpha - (alpha beta - alpha) x``.
Multiplying by ``a`` gives the fast system, which stays smooth at ``a = 0``
and then has the critical manifold ``core = 0``.

Near the double tangency ``(x, k, eps, a) = (3/4, 1/3, 0, 0)`` the fast field
has a known second-order Taylor expansion.  Its coefficients are baked in
below and checked against Richardson-extrapolated central differences the
first time :func:`local_expansion` is called.
"""
from __future__ import annotations

import functools
import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import brentq

from .errors import (BracketInvalid, DomainError, NoReturn, NonHyperbolic, NoRootInDomain,
                     NotConverged, NotFound, OracleMismatch)
from .integrator import (IntegrationOptions, Section, SmoothSystem, find_limit_cycle,
                         poincare_map)
from .kernels import ARCTAN_XY, BLOWUP, FAST, NativeField
from .welander import K_GUARD, WelanderParams, pseudoequilibrium

log = logging.getLogger(__name__)

PI = math.pi
SQRT3 = math.sqrt(3.0)
BASE_POINT = (0.75, 1.0 / 3.0, 0.0, 0.0)

# Reference Taylor coefficients of the fast field at BASE_POINT (alpha=4/5, beta=1/2),
# in xi = x - 3/4, psi = k - 1/3.
F1_COEFFS = {
    "a*xi": -4.0 / 3.0,
    "a*psi": -3.0 / 4.0,
}
F2_COEFFS = {
    "eps": -5.0 / (8.0 * PI),
    "a": 5.0 / (8.0 * PI * SQRT3),
    "xi": 3.0 / (10.0 * PI),
    "a*psi": SQRT3 / (4.0 * PI) - 5.0 / 12.0,
    "eps*psi": -(5.0 / (4.0 * SQRT3) + 3.0 / (4.0 * PI)),
    "xi*psi": SQRT3 / 5.0,
}


# -- charts -----------------------------------------------------------------

def phi(z):
    """``k = atan(z)/pi + 1/2``, mapping the real line onto (0, 1)."""
    return np.arctan(z) / PI + 0.5


def phi_inv(k):
    """``z = -cot(pi k)``; defined on the open interval (0, 1)."""
    karr = np.asarray(k, dtype=float)
    if np.any(karr <= 0.0) or np.any(karr >= 1.0):
        raise DomainError("phi_inv is defined for k in (0, 1) only")
    out = np.tan(PI * (karr - 0.5))
    return float(out) if out.ndim == 0 else out


def to_blowup(state_xy, a: float) -> np.ndarray:
    x, y = float(state_xy[0]), float(state_xy[1])
    return np.array([x, float(phi(y / a))])


def from_blowup(state_xk, a: float) -> np.ndarray:
    x, k = float(state_xk[0]), float(state_xk[1])
    return np.array([x, a * phi_inv(k)])


# -- fields -----------------------------------------------------------------

def _check_k(k: float, delta: float) -> None:
    if not (delta < k < 1.0 - delta):
        raise DomainError(f"k={k!r} outside the guarded domain ({delta}, {1 - delta})")


def _core(x, k, p: WelanderParams):
    al, be, ep = p.alpha, p.beta, p.epsilon
    return be - be * ep - k * ep - al - (al * be - al) * x


def blowup_field(x: float, k: float, params: WelanderParams, delta: float = K_GUARD) -> np.ndarray:
    """Arctan model in the ``(x, k)`` chart; requires ``a > 0``."""
    if params.a <= 0.0:
        raise DomainError("the blow-up field needs a > 0")
    _check_k(k, delta)
    s, c = math.sin(PI * k), math.cos(PI * k)
    g = s * s * _core(x, k, params) + params.a * (params.beta + k) * s * c
    return np.array([1.0 - x - k * x, g / (params.a * PI)])


def fast_field(x: float, k: float, params: WelanderParams, delta: float = K_GUARD) -> np.ndarray:
    """``a`` times :func:`blowup_field`; smooth down to ``a = 0``."""
    _check_k(k, delta)
    s, c = math.sin(PI * k), math.cos(PI * k)
    g = s * s * _core(x, k, params) + params.a * (params.beta + k) * s * c
    return np.array([params.a * (1.0 - x - k * x), g / PI])


def fast_jacobian(x: float, k: float, params: WelanderParams, delta: float = K_GUARD) -> np.ndarray:
    """Analytic Jacobian of :func:`fast_field` in ``(x, k)``."""
    _check_k(k, delta)
    al, be, ep, a = params.alpha, params.beta, params.epsilon, params.a
    s, c = math.sin(PI * k), math.cos(PI * k)
    core = _core(x, k, params)
    d_core_dx = -(al * be - al)
    d_core_dk = -ep
    # g = s^2 core + a (beta + k) s c
    dg_dx = s * s * d_core_dx
    dg_dk = (2.0 * PI * s * c * core + s * s * d_core_dk
             + a * (s * c + (be + k) * PI * (c * c - s * s)))
    return np.array([[-a * (1.0 + k), -a * x], [dg_dx / PI, dg_dk / PI]])


def _fast_raw(x, k, alpha, beta, eps, a):
    """Unguarded fast field with ``a`` and ``eps`` as plain arguments (oracle use)."""
    s, c = math.sin(PI * k), math.cos(PI * k)
    core = beta - beta * eps - k * eps - alpha - (alpha * beta - alpha) * x
    return a * (1.0 - x - k * x), (s * s * core + a * (beta + k) * s * c) / PI


@dataclass(frozen=True)
class BlowUpSystem:
    """The ``(x, k)`` chart for fixed parameters with guard ``delta`` on ``k``."""

    params: WelanderParams
    delta: float = K_GUARD

    def __post_init__(self):
        if self.params.a <= 0.0:
            raise DomainError("the blow-up chart needs a > 0")

    @property
    def k_domain(self) -> tuple[float, float]:
        return self.delta, 1.0 - self.delta

    def field(self, state) -> np.ndarray:
        return blowup_field(float(state[0]), float(state[1]), self.params, self.delta)

    def fast(self, state) -> np.ndarray:
        return fast_field(float(state[0]), float(state[1]), self.params, self.delta)

    def smooth_system(self) -> SmoothSystem:
        nf = NativeField(BLOWUP, self.params.kernel_params(delta=self.delta))
        return SmoothSystem(2, nf, native=nf, name="blowup")

    def fast_system(self) -> SmoothSystem:
        nf = NativeField(FAST, self.params.kernel_params(delta=self.delta))
        return SmoothSystem(2, nf, native=nf, name="blowup-fast")


def smooth_xy_system(params: WelanderParams) -> SmoothSystem:
    """The arctan model in the ``(x, y)`` chart."""
    if params.a <= 0.0:
        raise DomainError("the smooth model needs a > 0")
    nf = NativeField(ARCTAN_XY, params.kernel_params())
    return SmoothSystem(2, nf, native=nf, name="welander-smooth")


# -- critical manifold and equilibria ------------------------------------------

@dataclass(frozen=True)
class CriticalPoint:
    k: float
    dk_dk: float
    normally_hyperbolic: bool


def critical_manifold(x: float, params: WelanderParams, delta: float = K_GUARD) -> Optional[CriticalPoint]:
    """Point ``k`` of the critical manifold over ``x`` for the layer problem (``a = 0``).

    Returns None when the solution leaves the guarded ``k`` domain.

    Raises
    ------
    NonHyperbolic
        For ``eps = 0``, where the manifold degenerates to the vertical line
        ``x = 3/4`` (for default ``alpha``, ``beta``).
    """
    ep = params.epsilon
    if ep == 0.0:
        raise NonHyperbolic("critical manifold is not a graph over x when eps = 0")
    al, be = params.alpha, params.beta
    k = (be - be * ep - al - (al * be - al) * x) / ep
    if not (delta < k < 1.0 - delta):
        return None
    slope = math.sin(PI * k) ** 2 * (-ep) / PI
    return CriticalPoint(float(k), float(slope), slope != 0.0)


def _reduced_residual(x, k, p: WelanderParams):
    """Equilibrium conditions with the ``sin(pi k)`` factor removed from the k-equation."""
    s, c = math.sin(PI * k), math.cos(PI * k)
    return np.array([1.0 - x - k * x, s * _core(x, k, p) + p.a * (p.beta + k) * c])


def _reduced_jacobian(x, k, p: WelanderParams):
    al, be, ep, a = p.alpha, p.beta, p.epsilon, p.a
    s, c = math.sin(PI * k), math.cos(PI * k)
    core = _core(x, k, p)
    return np.array([
        [-(1.0 + k), -x],
        [-s * (al * be - al), PI * c * core - s * ep + a * (c - PI * (be + k) * s)],
    ])


def smooth_equilibrium(params: WelanderParams, seed: Optional[tuple] = None,
                       delta: float = K_GUARD, tol: float = 1e-14,
                       max_iter: int = 60) -> tuple[float, float]:
    """Equilibrium ``(x, k)`` of the blow-up system near the Filippov pseudoequilibrium.

    Damped Newton on the equilibrium conditions (the ``k`` equation divided by
    ``sin(pi k)``, which has the same zeros inside the domain), started from
    ``seed`` or the pseudoequilibrium.  If Newton fails, the reduced scalar
    equation along ``x = 1/(1+k)`` is bracketed on a grid and the root nearest
    the seed is returned.

    Raises
    ------
    NoRootInDomain
        If no root lies inside the guarded domain.
    NotConverged
        If neither Newton nor the bracketed fallback converges.
    """
    if params.a <= 0.0:
        raise DomainError("smooth_equilibrium needs a > 0")
    if seed is None:
        pe = pseudoequilibrium(params)
        seed = pe if pe is not None else (0.75, 1.0 / 3.0)
    x, k = float(seed[0]), float(seed[1])
    k = min(max(k, 2 * delta), 1.0 - 2 * delta)
    lo, hi = delta, 1.0 - delta
    for _ in range(max_iter):
        F = _reduced_residual(x, k, params)
        nF = float(np.max(np.abs(F)))
        if nF <= tol:
            return x, k
        try:
            step = np.linalg.solve(_reduced_jacobian(x, k, params), -F)
        except np.linalg.LinAlgError:
            break
        t = 1.0
        while t > 1e-6:
            xn, kn = x + t * step[0], k + t * step[1]
            if lo < kn < hi and float(np.max(np.abs(_reduced_residual(xn, kn, params)))) < (1 - 1e-4 * t) * nF:
                break
            t *= 0.5
        else:
            break
        x, k = xn, kn
    else:
        if float(np.max(np.abs(_reduced_residual(x, k, params)))) <= 1e3 * tol:
            return x, k
    log.debug("Newton failed from seed %s; falling back to bracketing", seed)
    return _bracketed_equilibrium(params, float(seed[1]), delta)


def _bracketed_equilibrium(params: WelanderParams, k_seed: float, delta: float):
    def G(k):
        return float(_reduced_residual(1.0 / (1.0 + k), k, params)[1])

    ks = np.linspace(delta, 1.0 - delta, 4001)
    vals = np.array([G(k) for k in ks])
    roots = []
    for i in range(ks.size - 1):
        if vals[i] == 0.0:
            roots.append(ks[i])
        elif vals[i] * vals[i + 1] < 0.0:
            roots.append(brentq(G, ks[i], ks[i + 1], xtol=1e-15, rtol=4 * np.finfo(float).eps))
    if not roots:
        raise NoRootInDomain("no equilibrium with k inside the guarded domain")
    k = min(roots, key=lambda r: abs(r - k_seed))
    return 1.0 / (1.0 + k), float(k)


# -- local expansion at the double tangency -----------------------------------

def _richardson(d, h):
    return (4.0 * d(h / 2.0) - d(h)) / 3.0


def fd_oracle(h: float = 1e-5) -> dict:
    """Richardson-extrapolated central differences of the fast field at the base point.

    Returns the same keys as the reference coefficients, plus the remaining
    second-order coefficients (which the expansion asserts are zero).
    """
    x0, k0, e0, a0 = BASE_POINT
    al, be = 4.0 / 5.0, 1.0 / 2.0
    names = ("xi", "psi", "a", "eps")

    def f(i, v):
        xi, psi, a, ep = v
        return _fast_raw(x0 + xi, k0 + psi, al, be, e0 + ep, a0 + a)[i]

    def d1(i, j):
        def D(s):
            vp = [0.0] * 4
            vm = [0.0] * 4
            vp[j], vm[j] = s, -s
            return (f(i, vp) - f(i, vm)) / (2 * s)
        return _richardson(D, h)

    def d2(i, j, l):
        def D(s):
            tot = 0.0
            for sj, sl, w in ((1, 1, 1), (1, -1, -1), (-1, 1, -1), (-1, -1, 1)):
                v = [0.0] * 4
                v[j] += sj * s
                v[l] += sl * s
                tot += w * f(i, v)
            return tot / (4 * s * s)
        return _richardson(D, h)

    def d2sq(i, j):
        def D(s):
            vp, vm = [0.0] * 4, [0.0] * 4
            vp[j], vm[j] = s, -s
            return (f(i, vp) - 2 * f(i, [0.0] * 4) + f(i, vm)) / (s * s)
        return _richardson(D, h)

    out = {"f1": {}, "f2": {}}
    for i, key in ((0, "f1"), (1, "f2")):
        for j, nj in enumerate(names):
            out[key][nj] = d1(i, j)
        for j in range(4):
            out[key][f"{names[j]}^2/2"] = 0.5 * d2sq(i, j)
            for l in range(j + 1, 4):
                out[key][_PAIR_NAMES[j, l]] = d2(i, j, l)
    return out


_PAIR_NAMES = {(0, 1): "xi*psi", (0, 2): "a*xi", (0, 3): "eps*xi",
               (1, 2): "a*psi", (1, 3): "eps*psi", (2, 3): "a*eps"}


@dataclass(frozen=True)
class LocalExpansion:
    """Second-order expansion of the fast field at the double tangency."""

    base_point: tuple = BASE_POINT
    f1_coeffs: dict = field(default_factory=lambda: dict(F1_COEFFS))
    f2_coeffs: dict = field(default_factory=lambda: dict(F2_COEFFS))
    oracle: dict = field(default_factory=dict, repr=False)

    def jacobian(self, a: float, eps: float) -> np.ndarray:
        """Linearization at the base point, truncated at first order in ``(a, eps)``."""
        c1, c2 = self.f1_coeffs, self.f2_coeffs
        return np.array([
            [c1["a*xi"] * a, c1["a*psi"] * a],
            [c2["xi"], c2["eps*psi"] * eps + c2["a*psi"] * a],
        ])

    def trace(self, a: float, eps: float) -> float:
        return float(np.trace(self.jacobian(a, eps)))

    def determinant(self, a: float, eps: float) -> float:
        return float(np.linalg.det(self.jacobian(a, eps)))

    def discriminant(self, a: float, eps: float) -> float:
        tr = self.trace(a, eps)
        return tr * tr - 4.0 * self.determinant(a, eps)

    def trace_coefficients(self) -> tuple[float, float]:
        """``(c_a, c_eps)`` with ``trace = c_a a + c_eps eps``."""
        c1, c2 = self.f1_coeffs, self.f2_coeffs
        return c1["a*xi"] + c2["a*psi"], c2["eps*psi"]

    def hopf_slope(self) -> float:
        """Slope ``eps/a`` of the zero-trace line through the origin."""
        c_a, c_eps = self.trace_coefficients()
        return -c_a / c_eps

    # Evaluating the linearization at the equilibrium instead of the base point
    # adds the shift xi_eq times the xi*psi coefficient to the (2,2) entry.
    def equilibrium_shift(self, a: float, eps: float) -> tuple[float, float]:
        """First-order displacement ``(xi, psi)`` of the equilibrium from the base point."""
        c1, c2 = self.f1_coeffs, self.f2_coeffs
        xi = -(c2["eps"] * eps + c2["a"] * a) / c2["xi"]
        psi = -c1["a*xi"] * xi / c1["a*psi"]
        return xi, psi

    def equilibrium_trace_coefficients(self) -> tuple[float, float]:
        """``(c_a, c_eps)`` of the trace evaluated at the shifted equilibrium."""
        c2 = self.f2_coeffs
        c_a, c_eps = self.trace_coefficients()
        # xi_eq is linear: xi_eq = u a + v eps
        u = -c2["a"] / c2["xi"]
        v = -c2["eps"] / c2["xi"]
        return c_a + c2["xi*psi"] * u, c_eps + c2["xi*psi"] * v

    def equilibrium_hopf_slope(self) -> float:
        c_a, c_eps = self.equilibrium_trace_coefficients()
        return -c_a / c_eps


ORACLE_RTOL = 1e-6

@functools.lru_cache(maxsize=1)
def local_expansion() -> LocalExpansion:
    """The expansion with every reference coefficient checked against :func:`fd_oracle`.

    Raises
    ------
    OracleMismatch
        If any coefficient disagrees with the finite-difference oracle by more
        than ``1e-6`` relative.
    """
    orc = fd_oracle()
    # f1 = a(1 - x - k x): its coefficients are mixed derivatives in a
    checks = [("f1", "a*xi", F1_COEFFS["a*xi"]), ("f1", "a*psi", F1_COEFFS["a*psi"])]
    checks += [("f2", name, val) for name, val in F2_COEFFS.items()]
    bad = []
    for fk, name, val in checks:
        got = orc[fk][name]
        if abs(got - val) > ORACLE_RTOL * abs(val):
            bad.append(f"{fk}[{name}]: reference {val:.12g}, oracle {got:.12g}")
    if bad:
        raise OracleMismatch("; ".join(bad))
    return LocalExpansion(oracle=orc)


def jacobian(a: float, eps: float) -> np.ndarray:
    return local_expansion().jacobian(a, eps)


def trace(a: float, eps: float) -> float:
    return local_expansion().trace(a, eps)


def discriminant(a: float, eps: float) -> float:
    return local_expansion().discriminant(a, eps)


def hopf_slope() -> float:
    """Slope of the zero-trace line of the base-point linearization."""
    return local_expansion().hopf_slope()


def equilibrium_hopf_slope() -> float:
    """Slope of the zero-trace line once the equilibrium shift is included."""
    return local_expansion().equilibrium_hopf_slope()


def hopf_line(a: float) -> float:
    """``eps_H(a)`` on the zero-trace line of the base-point linearization."""
    if not a > 0.0:
        raise DomainError("hopf_line needs a > 0")
    return hopf_slope() * a


# -- numerical Hopf detection ---------------------------------------------

@dataclass(frozen=True)
class EquilibriumSpectrum:
    eps: float
    x: float
    k: float
    eigenvalues: tuple
    trace: float
    discriminant: float


def equilibrium_spectrum(params: WelanderParams, seed=None) -> EquilibriumSpectrum:
    """Equilibrium of the fast system with the eigenvalues of its Jacobian there."""
    x, k = smooth_equilibrium(params, seed=seed)
    J = fast_jacobian(x, k, params)
    tr = float(np.trace(J))
    disc = tr * tr - 4.0 * float(np.linalg.det(J))
    ev = np.linalg.eigvals(J)
    ev = tuple(sorted((complex(z) for z in ev), key=lambda z: (z.real, z.imag)))
    return EquilibriumSpectrum(params.epsilon, x, k, ev, tr, disc)


@dataclass(frozen=True)
class HopfCrossing:
    eps: float
    slope: float           # d(Re lambda)/d eps
    frequency: float       # Im lambda at the crossing (fast time)


@dataclass(frozen=True)
class HopfRecord:
    a: float
    eps_star: float
    eps_base_line: float
    eps_equilibrium_line: float
    transversality: float
    crossings: tuple
    amplitudes: tuple = ()
    amplitude_slope: float = float("nan")
    supercritical: Optional[bool] = None

    @property
    def ratio(self) -> float:
        return self.eps_star / self.a


def _trace_along(a: float, base: WelanderParams):
    cache = {}

    def tr(eps, seed=None):
        p = base.replace(a=a, epsilon=float(eps))
        sp = equilibrium_spectrum(p, seed=seed)
        cache[float(eps)] = sp
        return sp

    return tr, cache


def hopf_crossings(a: float, eps_range=None, n: int = 401,
                   base: Optional[WelanderParams] = None) -> list[HopfCrossing]:
    """All zero crossings of the trace with complex eigenvalues along an ``eps`` scan.

    The equilibrium is continued along the scan, each solve seeded with the
    previous one, so the same branch is followed.
    """
    base = base or WelanderParams()
    if not a > 0.0:
        raise DomainError("a must be positive")
    lo, hi = eps_range if eps_range is not None else (-0.3, 0.05)
    grid = np.linspace(hi, lo, n)
    spectrum, _ = _trace_along(a, base)
    seed = None
    rows = []
    for e in grid:
        try:
            sp = spectrum(e, seed)
        except (NoRootInDomain, NotConverged) as exc:
            log.debug("no equilibrium at eps=%g: %s", e, exc)
            seed = None
            rows.append(None)
            continue
        seed = (sp.x, sp.k)
        rows.append(sp)
    out = []
    for i in range(n - 1):
        r0, r1 = rows[i], rows[i + 1]
        if r0 is None or r1 is None or r0.trace * r1.trace > 0.0:
            continue
        seed_i = (r0.x, r0.k)

        def f(e):
            return spectrum(e, seed_i).trace

        e_star = brentq(f, grid[i + 1], grid[i], xtol=1e-14, rtol=1e-13)
        sp = spectrum(e_star, seed_i)
        if sp.discriminant >= 0.0:
            continue
        d = 1e-6 * max(abs(e_star), 1e-3)
        slope = 0.5 * (spectrum(e_star + d, seed_i).trace - spectrum(e_star - d, seed_i).trace) / (2 * d)
        out.append(HopfCrossing(float(e_star), float(slope),
                                float(math.sqrt(-sp.discriminant) / 2.0)))
    out.sort(key=lambda c: c.eps)
    return out


def _blowup_section(x_eq: float, k_eq: float) -> Section:
    """``{k = k_eq}`` crossed with ``k`` increasing, parameterized by ``x`` (``x > x_eq``)."""
    return Section(g=lambda z: float(z[1]) - k_eq, direction=+1,
                   param=lambda z: float(z[0]),
                   point=lambda s: np.array([s, k_eq]), linear=(1, k_eq))


def cycle_amplitude(params: WelanderParams, opts: Optional[IntegrationOptions] = None,
                    max_time: Optional[float] = None):
    """Limit cycle around the smooth equilibrium in the blow-up chart.

    The outer bracket end is grown geometrically until the return map
    contracts.  Returns the :class:`PeriodicOrbit`.
    """
    x_eq, k_eq = smooth_equilibrium(params)
    sysb = BlowUpSystem(params).fast_system()
    sec = _blowup_section(x_eq, k_eq)
    opts = opts or IntegrationOptions(rtol=1e-10, atol=1e-12)
    if max_time is None:
        max_time = 400.0
    lo = x_eq + 1e-7
    d_lo = poincare_map(sysb, sec, lo, opts, max_time) - lo
    if d_lo <= 0.0:
        raise BracketInvalid("equilibrium is not repelling on the section")
    width = 1e-4
    while width < 0.5:
        hi = x_eq + width
        try:
            d_hi = poincare_map(sysb, sec, hi, opts, max_time) - hi
        except NoReturn:
            d_hi = None
        if d_hi is not None and d_hi < 0.0:
            return find_limit_cycle(sysb, sec, (lo, hi), opts, max_time=max_time)
        lo = hi
        width *= 2.0
    raise BracketInvalid("no contracting outer section point found")


def verify_hopf_numerically(a: float, eps_range=None, n: int = 401,
                            base: Optional[WelanderParams] = None,
                            amplitude_points: int = 5, decade_start: Optional[float] = None,
                            check_amplitude: bool = True) -> HopfRecord:
    """Eigenvalue-crossing Hopf point of the smooth system and its criticality.

    ``eps*`` is the right-most crossing at which the equilibrium loses
    stability as ``eps`` decreases.  Supercriticality is tested by fitting
    log amplitude against ``log(eps* - eps)`` over one decade below ``eps*``.

    Raises
    ------
    NotFound
        If no such crossing lies in the scanned range.
    """
    base = base or WelanderParams()
    crossings = hopf_crossings(a, eps_range, n, base)
    losing = [c for c in crossings if c.slope < 0.0]
    if not losing:
        raise NotFound(f"no eigenvalue crossing for a={a:g} in eps range {eps_range or (-0.3, 0.05)}")
    star = max(losing, key=lambda c: c.eps)
    amps = []
    slope = float("nan")
    superc = None
    if check_amplitude:
        d0 = decade_start if decade_start is not None else 0.02 * abs(star.eps)
        for d in np.geomspace(d0, 10.0 * d0, amplitude_points):
            p = base.replace(a=a, epsilon=star.eps - float(d))
            try:
                orb = cycle_amplitude(p, max_time=20.0 * math.pi / star.frequency)
                amps.append((float(d), float(orb.amplitude)))
            except (BracketInvalid, NotConverged, NoReturn) as exc:
                log.info("no cycle at eps=%g: %s", p.epsilon, exc)
        if len(amps) >= 3:
            ld = np.log([d for d, _ in amps])
            la = np.log([m for _, m in amps])
            slope = float(np.polyfit(ld, la, 1)[0])
            superc = abs(slope - 0.5) <= 0.1
        else:
            superc = False
    return HopfRecord(a=a, eps_star=star.eps, eps_base_line=hopf_slope() * a,
                      eps_equilibrium_line=equilibrium_hopf_slope() * a,
                      transversality=star.slope, crossings=tuple(crossings),
                      amplitudes=tuple(amps), amplitude_slope=slope, supercritical=superc)
