import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fusedfocus import blowup
from fusedfocus.errors import ConfigError, DomainError
from fusedfocus.integrator import IntegrationOptions, SmoothSystem, solve_at
from fusedfocus.welander import (WelanderParams, density, ds_dlambda, from_xy, k_heaviside, k_smooth,
                                 normal_speed, phase_slope, pseudoequilibrium, sliding_boundaries,
                                 sliding_boundaries_default, sliding_interval, smooth_field_TS, to_xy,
                                 vector_field_TS, vector_field_xy, virtual_equilibria)

eps_st = st.floats(-0.1, 0.1)
# below this the pseudoequilibrium reaches k = 1 and meets the then-real k = 1 equilibrium
EDGE = -1.0 / 15.0


class TestParams:
    def test_defaults(self):
        p = WelanderParams()
        assert (p.alpha, p.beta, p.epsilon, p.a) == (0.8, 0.5, 0.0, 0.0)
        assert not p.smooth and p.replace(a=0.01).smooth

    @pytest.mark.parametrize("kw", [dict(alpha=0.0), dict(beta=-1.0), dict(a=-1e-3),
                                    dict(epsilon=float("nan")), dict(epsilon=True)])
    def test_rejects_bad_values(self, kw):
        with pytest.raises(ConfigError):
            WelanderParams(**kw)

    def test_dict_round_trip(self):
        p = WelanderParams(epsilon=-0.03, a=0.002)
        assert WelanderParams.from_dict(p.to_dict()) == p

    def test_unknown_key(self):
        with pytest.raises(ConfigError, match="gamma"):
            WelanderParams.from_dict({"gamma": 1.0})


class TestConvectionRate:
    def test_smooth_needs_positive_a(self):
        with pytest.raises(DomainError):
            k_smooth(0.1, WelanderParams())

    def test_heaviside_threshold_is_open(self):
        p = WelanderParams(epsilon=0.02)
        assert k_heaviside(0.02, p) is None
        assert k_heaviside(0.03, p) == 1.0 and k_heaviside(0.01, p) == 0.0

    def test_half_on_threshold(self):
        assert k_smooth(0.02, WelanderParams(epsilon=0.02, a=0.01)) == pytest.approx(0.5, abs=1e-16)

    @given(eps=eps_st, d=st.floats(1e-3, 1.0), sign=st.sampled_from([-1.0, 1.0]))
    def test_pointwise_limit_and_tail_bound(self, eps, d, sign):
        rho = eps + sign * d
        errs = []
        for a in (1e-2, 1e-4, 1e-6):
            p = WelanderParams(epsilon=eps, a=a)
            err = abs(float(k_smooth(rho, p)) - k_heaviside(rho, p))
            # 1/2 - atan(u)/pi <= 1/(pi u)
            assert err <= a / (math.pi * d) * (1 + 1e-9) + 1e-16
            errs.append(err)
        assert errs[0] >= errs[1] >= errs[2]


class TestCharts:
    @given(T=st.floats(0, 2), S=st.floats(0, 2), eps=eps_st)
    def test_round_trip(self, T, S, eps):
        p = WelanderParams(epsilon=eps)
        np.testing.assert_allclose(from_xy(to_xy((T, S), p), p), [T, S], atol=1e-15)

    @given(T=st.floats(0, 2), S=st.floats(0, 2), eps=eps_st, k=st.floats(0, 1))
    def test_field_transforms_linearly(self, T, S, eps, k):
        # x = T, y = S - alpha T - eps is affine, so ydot = Sdot - alpha Tdot
        p = WelanderParams(epsilon=eps)
        fT = vector_field_TS((T, S), p, k)
        fx = vector_field_xy(to_xy((T, S), p), p, k)
        np.testing.assert_allclose(fx, [fT[0], fT[1] - p.alpha * fT[0]], atol=1e-14)

    def test_switching_line_is_threshold(self):
        p = WelanderParams(epsilon=0.03)
        T = 0.7
        S = p.epsilon + p.alpha * T
        assert density((T, S), p) == pytest.approx(p.epsilon, abs=1e-16)
        assert to_xy((T, S), p)[1] == pytest.approx(0.0, abs=1e-16)

    def test_smooth_TS_needs_a(self):
        with pytest.raises(DomainError):
            smooth_field_TS(WelanderParams())

    def test_coordinate_commutation(self):
        p = WelanderParams(epsilon=-0.02, a=0.01)
        t_eval = np.linspace(0.0, 10.0, 21)
        opts = IntegrationOptions(rtol=1e-12, atol=1e-14)
        TS0 = np.array([0.6, 0.7])
        A = solve_at(SmoothSystem(2, smooth_field_TS(p)), TS0, t_eval, opts)
        B = solve_at(blowup.smooth_xy_system(p), to_xy(TS0, p), t_eval, opts)
        err = max(float(np.max(np.abs(from_xy(zb, p) - za))) for za, zb in zip(A, B))
        assert err <= 1e-8


class TestSlidingStructure:
    @given(eps=eps_st)
    def test_default_closed_forms(self, eps):
        got = sliding_boundaries(WelanderParams(epsilon=eps))
        want = sliding_boundaries_default(eps)
        np.testing.assert_allclose(got, want, atol=1e-14)

    @given(eps=eps_st)
    def test_boundaries_are_tangencies(self, eps):
        p = WelanderParams(epsilon=eps)
        xm, xp = sliding_boundaries(p)
        assert abs(normal_speed(xm, p, 0.0)) <= 1e-14
        assert abs(normal_speed(xp, p, 1.0)) <= 1e-14

    def test_interval_ordered(self):
        assert sliding_interval(WelanderParams(epsilon=-0.04)) == pytest.approx((0.6, 0.7))
        assert sliding_interval(WelanderParams(epsilon=0.04)) == pytest.approx((0.8, 0.9))

    @given(eps=eps_st, alpha=st.floats(0.1, 2.0), beta=st.floats(0.1, 2.0), x=st.floats(0, 1.5))
    def test_ds_dlambda(self, eps, alpha, beta, x):
        p = WelanderParams(alpha=alpha, beta=beta, epsilon=eps)
        assert ds_dlambda(p) == -eps
        assert normal_speed(x, p, 1.0) - normal_speed(x, p, 0.0) == pytest.approx(-eps, abs=1e-14)

    def test_phase_slope_zero_at_tangency(self):
        p = WelanderParams(epsilon=0.05)
        xm, xp = sliding_boundaries(p)
        assert phase_slope(xm, p, 0.0) == pytest.approx(0.0, abs=1e-14)
        assert phase_slope(xp, p, 1.0) == pytest.approx(0.0, abs=1e-14)


class TestPseudoequilibrium:
    def test_fused_focus(self):
        assert pseudoequilibrium(WelanderParams()) == pytest.approx((0.75, 1.0 / 3.0), abs=1e-15)

    def test_positive_eps(self):
        x, k = pseudoequilibrium(WelanderParams(epsilon=0.04))
        assert x == pytest.approx(0.8217, abs=1e-4)
        assert k == pytest.approx(0.217, abs=1e-3)

    @given(eps=st.floats(EDGE + 1e-9, 0.1).filter(lambda e: e != 0.0))
    def test_lies_in_sliding_interval_and_zeroes_flow(self, eps):
        p = WelanderParams(epsilon=eps)
        x, k = pseudoequilibrium(p)
        lo, hi = sliding_interval(p)
        assert lo - 1e-12 <= x <= hi + 1e-12
        # sliding condition and x-equilibrium at the same k
        assert abs(normal_speed(x, p, k)) <= 1e-12
        assert abs(1.0 - x - k * x) <= 1e-12

    def test_boundary_collision(self):
        x, k = pseudoequilibrium(WelanderParams(epsilon=EDGE + 1e-9))
        assert k == pytest.approx(1.0, abs=1e-6) and x == pytest.approx(0.5, abs=1e-6)
        assert pseudoequilibrium(WelanderParams(epsilon=EDGE - 1e-6)) is None
        assert pseudoequilibrium(WelanderParams(epsilon=-0.1)) is None


class TestVirtualEquilibria:
    def test_closed_forms(self):
        eqs = virtual_equilibria(WelanderParams(epsilon=0.03))
        np.testing.assert_allclose(eqs[0][0], [1.0, 0.2 - 0.03], atol=1e-15)
        np.testing.assert_allclose(eqs[1][0], [0.5, -1.0 / 15.0 - 0.03], atol=1e-15)

    @given(eps=st.floats(-1.0 / 15.0 + 1e-9, 0.2 - 1e-9))
    def test_both_virtual_between_thresholds(self, eps):
        eqs = virtual_equilibria(WelanderParams(epsilon=eps))
        assert not eqs[0][1] and not eqs[1][1]

    def test_k1_equilibrium_real_at_minus_tenth(self):
        # y = -1/15 - eps is positive once eps < -1/15
        eqs = virtual_equilibria(WelanderParams(epsilon=-0.1))
        assert eqs[1][1]
        assert eqs[1][0][1] == pytest.approx(0.1 - 1.0 / 15.0, abs=1e-15)
        assert not eqs[0][1]

    def test_k0_equilibrium_real_above_fifth(self):
        assert virtual_equilibria(WelanderParams(epsilon=0.25))[0][1]
