import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fusedfocus import blowup
from fusedfocus.errors import DomainError, NotFound
from fusedfocus.integrator import IntegrationOptions, solve_at
from fusedfocus.welander import WelanderParams, pseudoequilibrium

SQRT3 = math.sqrt(3.0)


@pytest.fixture(scope="module")
def expansion():
    return blowup.local_expansion()


class TestCharts:
    @given(z=st.floats(-1e6, 1e6))
    def test_phi_round_trip(self, z):
        k = blowup.phi(z)
        if 0.0 < k < 1.0:
            assert blowup.phi_inv(k) == pytest.approx(z, rel=1e-9, abs=1e-9)

    @pytest.mark.parametrize("k", [0.0, 1.0, -0.2, 1.5])
    def test_phi_inv_domain(self, k):
        with pytest.raises(DomainError):
            blowup.phi_inv(k)

    def test_state_maps(self):
        z = np.array([0.7, 0.003])
        b = blowup.to_blowup(z, 0.01)
        assert b[1] == pytest.approx(math.atan(0.3) / math.pi + 0.5, rel=1e-15)
        np.testing.assert_allclose(blowup.from_blowup(b, 0.01), z, rtol=1e-13)


class TestFields:
    @given(x=st.floats(0.2, 1.2), k=st.floats(0.01, 0.99), eps=st.floats(-0.1, 0.1), a=st.floats(1e-4, 0.5))
    def test_fast_is_a_times_blowup(self, x, k, eps, a):
        p = WelanderParams(epsilon=eps, a=a)
        np.testing.assert_allclose(blowup.fast_field(x, k, p), a * blowup.blowup_field(x, k, p),
                                   rtol=1e-12, atol=1e-15)

    def test_blowup_needs_a(self):
        with pytest.raises(DomainError):
            blowup.blowup_field(0.7, 0.5, WelanderParams())

    def test_fast_field_defined_at_zero_a(self):
        f = blowup.fast_field(0.75, 1.0 / 3.0, WelanderParams())
        np.testing.assert_allclose(f, [0.0, 0.0], atol=1e-15)

    @pytest.mark.parametrize("k", [0.0, 5e-7, 1.0 - 5e-7, 1.0])
    def test_guard(self, k):
        with pytest.raises(DomainError):
            blowup.fast_field(0.7, k, WelanderParams(a=0.01))

    @given(x=st.floats(0.2, 1.2), k=st.floats(0.01, 0.99), eps=st.floats(-0.1, 0.1), a=st.floats(0.0, 0.1))
    def test_jacobian_matches_differences(self, x, k, eps, a):
        p = WelanderParams(epsilon=eps, a=a)
        h = 1e-6
        fd = np.column_stack([
            (blowup.fast_field(x + h, k, p) - blowup.fast_field(x - h, k, p)) / (2 * h),
            (blowup.fast_field(x, k + h, p) - blowup.fast_field(x, k - h, p)) / (2 * h),
        ])
        np.testing.assert_allclose(blowup.fast_jacobian(x, k, p), fd, rtol=1e-6, atol=1e-8)

    def test_chart_conjugacy(self):
        p = WelanderParams(epsilon=0.02, a=1e-3)
        t_eval = np.linspace(0.0, 10.0, 21)
        opts = IntegrationOptions(rtol=1e-12, atol=1e-14)
        A = solve_at(blowup.smooth_xy_system(p), (0.5, 0.2), t_eval, opts)
        B = solve_at(blowup.BlowUpSystem(p).smooth_system(), blowup.to_blowup((0.5, 0.2), p.a), t_eval, opts)
        err = max(float(np.max(np.abs(blowup.from_blowup(zb, p.a) - za))) for za, zb in zip(A, B))
        assert err <= 1e-6


class TestLocalExpansion:
    def test_reference_values_match_oracle(self, expansion):
        for name, val in blowup.F2_COEFFS.items():
            assert expansion.oracle["f2"][name] == pytest.approx(val, rel=1e-6)
        for name, val in blowup.F1_COEFFS.items():
            assert expansion.oracle["f1"][name] == pytest.approx(val, rel=1e-6)

    def test_decimal_values(self):
        c = blowup.F2_COEFFS
        assert c["eps"] == pytest.approx(-0.198944, abs=1e-6)
        assert c["xi"] == pytest.approx(0.0954930, abs=1e-6)
        assert c["xi*psi"] == pytest.approx(0.346410, abs=1e-6)

    def test_unlisted_second_order_terms_vanish(self, expansion):
        listed = set(blowup.F2_COEFFS) | {"psi", "xi*xi", "psi*psi"}
        for name, val in expansion.oracle["f2"].items():
            if name not in listed:
                assert abs(val) <= 1e-6, name

    def test_base_point_is_stationary_at_origin(self):
        x, k = blowup.BASE_POINT[:2]
        np.testing.assert_allclose(blowup.fast_field(x, k, WelanderParams()), [0, 0], atol=1e-15)

    def test_hopf_slopes(self, expansion):
        assert expansion.hopf_slope() == pytest.approx(-1.6786066, abs=1e-6)
        assert expansion.equilibrium_hopf_slope() == pytest.approx(-8.49836, abs=1e-4)
        assert blowup.hopf_line(0.01) == pytest.approx(-0.016786066, abs=1e-8)

    def test_hopf_line_needs_positive_a(self):
        with pytest.raises(DomainError):
            blowup.hopf_line(0.0)

    @given(a=st.floats(1e-4, 1e-2), eps=st.floats(-0.05, 0.05))
    def test_eigenvalues_conjugate(self, a, eps):
        ev = np.linalg.eigvals(blowup.jacobian(a, eps))
        if blowup.discriminant(a, eps) < 0.0:
            assert ev[0] == pytest.approx(np.conj(ev[1]), abs=1e-14)
            assert ev[0].real == pytest.approx(0.5 * blowup.trace(a, eps), abs=1e-14)

    def test_complex_near_origin(self):
        # det is dominated by -J12 J21 = 3a/4 * 3/(10 pi) > 0
        assert blowup.discriminant(1e-3, -1e-3) < 0.0

    @pytest.mark.parametrize("eps", [-0.02, 0.02])
    def test_equilibrium_jacobian_first_order(self, expansion, eps):
        # truncated Jacobian vs exact Jacobian at the exact equilibrium, error O(a + |eps|)
        ratios = []
        for scale in (1.0, 0.1, 0.01):
            a, e = 0.01 * scale, eps * scale
            p = WelanderParams(epsilon=e, a=a)
            x, k = blowup.smooth_equilibrium(p)
            err = np.max(np.abs(blowup.fast_jacobian(x, k, p) - expansion.jacobian(a, e)))
            ratios.append(err / (a + abs(e)))
        assert max(ratios) < 2.0
        assert ratios[-1] <= 2.0 * ratios[0]

    def test_equilibrium_shift_tracks_equilibrium(self, expansion):
        a, eps = 1e-4, -2e-4
        x, k = blowup.smooth_equilibrium(WelanderParams(epsilon=eps, a=a))
        xi, psi = expansion.equilibrium_shift(a, eps)
        assert x - 0.75 == pytest.approx(xi, rel=0.05)
        assert k - 1.0 / 3.0 == pytest.approx(psi, rel=0.05)


class TestEquilibrium:
    @pytest.mark.parametrize("eps", [-0.02, 0.02])
    def test_converges_to_pseudoequilibrium(self, eps):
        xp, kp = pseudoequilibrium(WelanderParams(epsilon=eps))
        d = []
        for a in (1e-2, 1e-3, 1e-4):
            x, k = blowup.smooth_equilibrium(WelanderParams(epsilon=eps, a=a))
            d.append(math.hypot(x - xp, k - kp))
        assert d[0] > d[1] > d[2]
        assert all(5.0 <= d[i] / d[i + 1] <= 20.0 for i in range(2))

    @given(eps=st.floats(-0.05, 0.05), a=st.floats(1e-4, 1e-2))
    @settings(max_examples=200)
    def test_is_stationary(self, eps, a):
        p = WelanderParams(epsilon=eps, a=a)
        x, k = blowup.smooth_equilibrium(p)
        assert np.max(np.abs(blowup.fast_field(x, k, p))) <= 1e-12


class TestNumericHopf:
    @pytest.mark.parametrize("a, eps_star", [(2e-3, -0.015322), (1e-3, -0.0079635), (5e-4, -0.0040983)])
    def test_crossing_values(self, a, eps_star):
        rec = blowup.verify_hopf_numerically(a, check_amplitude=False)
        assert rec.eps_star == pytest.approx(eps_star, abs=2e-6)
        assert rec.transversality < 0.0

    def test_ratio_approaches_equilibrium_slope(self):
        rho = blowup.equilibrium_hopf_slope()
        ratios = [blowup.verify_hopf_numerically(a, check_amplitude=False).ratio for a in (1e-3, 5e-4)]
        assert all(abs(r - rho) <= 0.1 * abs(rho) for r in ratios)
        assert abs(ratios[1] - rho) < abs(ratios[0] - rho)

    @pytest.mark.parametrize("a", [0.01, 0.005])
    def test_no_crossing_for_larger_a(self, a):
        # the two crossings present at smaller a merge near a = 0.005
        with pytest.raises(NotFound):
            blowup.verify_hopf_numerically(a, check_amplitude=False)

    def test_second_crossing_below(self):
        eps = [c.eps for c in blowup.hopf_crossings(3e-3)]
        assert len(eps) == 2
        assert eps[0] == pytest.approx(-0.0602, abs=1e-3) and eps[1] == pytest.approx(-0.0226, abs=1e-3)

    def test_supercritical_small_a(self):
        rec = blowup.verify_hopf_numerically(1e-3)
        assert rec.supercritical
        assert rec.amplitude_slope == pytest.approx(0.5, abs=0.1)

    def test_needs_positive_a(self):
        with pytest.raises(DomainError):
            blowup.hopf_crossings(0.0)
