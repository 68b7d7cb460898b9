import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from fusedfocus.errors import DegenerateContact, NotInSlidingRegion, NotOnManifold
from fusedfocus.filippov import (BoundaryKind, PiecewiseSystem, Side, Visibility, classify_boundary,
                                 eval_field, find_tangencies, second_lie_derivative, sliding_flow,
                                 sliding_lambda, visibility)
from fusedfocus.welander import WelanderParams, nonsmooth_system, normal_speed, vector_field_xy

nonzero_eps = st.one_of(st.floats(-0.1, -1e-3), st.floats(1e-3, 0.1))


def planar(fp, fm, **kw):
    return PiecewiseSystem(dim=2, f_plus=fp, f_minus=fm, h=lambda z: z[1],
                           grad_h=lambda z: np.array([0.0, 1.0]), **kw)


def welander(eps):
    return nonsmooth_system(WelanderParams(epsilon=eps))


class TestEvalField:
    @given(eps=st.floats(-0.1, 0.1), x=st.floats(0, 1.2), y=st.floats(-0.5, 0.5))
    def test_endpoints_are_the_pieces(self, eps, x, y):
        p = WelanderParams(epsilon=eps)
        sysm = nonsmooth_system(p)
        z = np.array([x, y])
        np.testing.assert_allclose(eval_field(sysm, z, 0.0), vector_field_xy(z, p, 0.0), rtol=1e-15, atol=1e-16)
        np.testing.assert_allclose(eval_field(sysm, z, 1.0), vector_field_xy(z, p, 1.0), rtol=1e-15, atol=1e-16)

    @given(lam=st.floats(0, 1), x=st.floats(0, 1.2))
    def test_linear_in_lambda(self, lam, x):
        # the Welander field is affine in k, so the convex combination equals k = lam
        p = WelanderParams(epsilon=0.02)
        z = np.array([x, 0.0])
        np.testing.assert_allclose(eval_field(nonsmooth_system(p), z, lam), vector_field_xy(z, p, lam),
                                   rtol=1e-13, atol=1e-15)

    def test_nonlinear_lambda_field(self):
        sysm = planar(lambda z: np.array([1.0, -1.0]), lambda z: np.array([1.0, 1.0]),
                      lambda_field=lambda z, lam: np.array([1.0, 1.0 - 2.0 * lam ** 3]))
        lam = sliding_lambda(sysm, np.array([0.0, 0.0]))
        assert lam == pytest.approx(0.5 ** (1 / 3), rel=1e-12)

    def test_state_dimension_checked(self):
        with pytest.raises(Exception):
            eval_field(welander(0.01), np.array([0.1, 0.2, 0.3]), 0.5)


class TestSlidingLambda:
    def test_welander_value(self):
        eps, x = 0.05, 0.875
        p = WelanderParams(epsilon=eps)
        sp, sm = normal_speed(x, p, 1.0), normal_speed(x, p, 0.0)
        assert sliding_lambda(welander(eps), [x, 0.0]) == pytest.approx(sm / (sm - sp), rel=1e-14)

    def test_crossing_has_no_multiplier(self):
        assert sliding_lambda(welander(0.05), [0.5, 0.0]) is None

    def test_equal_normal_speeds_give_none(self):
        sysm = planar(lambda z: np.array([1.0, 1.0]), lambda z: np.array([0.0, 1.0]))
        assert sliding_lambda(sysm, [0.0, 0.0]) is None

    def test_both_tangent_is_degenerate(self):
        sysm = planar(lambda z: np.array([1.0, 0.0]), lambda z: np.array([-1.0, 0.0]))
        with pytest.raises(DegenerateContact):
            sliding_lambda(sysm, [0.0, 0.0])

    def test_off_manifold_rejected(self):
        with pytest.raises(NotOnManifold):
            sliding_lambda(welander(0.05), [0.875, 1e-3])

    def test_manifold_tolerance_scales_with_state(self):
        assert sliding_lambda(welander(0.05), [0.875, 5e-10]) is not None

    def test_sliding_flow_outside_region(self):
        with pytest.raises(NotInSlidingRegion):
            sliding_flow(welander(0.05), [0.5, 0.0])

    @given(eps=nonzero_eps, u=st.floats(0.0, 1.0))
    def test_sliding_flow_is_tangent(self, eps, u):
        lo, hi = sorted((0.75 + 1.25 * eps, 0.75 + 3.75 * eps))
        z = np.array([lo + u * (hi - lo), 0.0])
        sysm = welander(eps)
        assume(sliding_lambda(sysm, z) is not None)
        f = sliding_flow(sysm, z)
        assert abs(f[1]) <= 1e-10 * (1.0 + np.linalg.norm(f))


class TestClassification:
    def test_stable_sliding(self):
        c = classify_boundary(welander(0.05), [0.875, 0.0])
        assert c.kind is BoundaryKind.STABLE_SLIDING
        assert c.dS_dlambda == pytest.approx(-0.05, abs=1e-16)

    def test_unstable_sliding(self):
        c = classify_boundary(welander(-0.05), [0.625, 0.0])
        assert c.kind is BoundaryKind.UNSTABLE_SLIDING

    def test_crossing(self):
        c = classify_boundary(welander(0.05), [0.3, 0.0])
        assert c.kind is BoundaryKind.CROSSING and c.lambda_star is None

    def test_tangency(self):
        c = classify_boundary(welander(0.05), [0.8125, 0.0])
        assert c.kind is BoundaryKind.TANGENCY and c.tangent_sides == (Side.MINUS,)

    def test_double_tangency(self):
        c = classify_boundary(welander(0.0), [0.75, 0.0])
        assert c.kind is BoundaryKind.TANGENCY and set(c.tangent_sides) == {Side.PLUS, Side.MINUS}

    @given(eps=nonzero_eps, x=st.floats(0.0, 1.5))
    def test_partition(self, eps, x):
        p = WelanderParams(epsilon=eps)
        c = classify_boundary(nonsmooth_system(p), [x, 0.0])
        sp, sm = normal_speed(x, p, 1.0), normal_speed(x, p, 0.0)
        lam = sm / (sm - sp)
        assert (c.kind is BoundaryKind.CROSSING) == (not 0.0 <= lam <= 1.0)

    @given(eps=nonzero_eps, x=st.floats(0.0, 1.5))
    def test_interval_law(self, eps, x):
        a_, b_ = 0.75 + 1.25 * eps, 0.75 + 3.75 * eps
        lo, hi = (a_, b_) if eps > 0 else (b_, a_)
        assume(min(abs(x - lo), abs(x - hi)) > 1e-8)
        kind = classify_boundary(welander(eps), [x, 0.0]).kind
        if lo < x < hi:
            assert kind is (BoundaryKind.STABLE_SLIDING if eps > 0 else BoundaryKind.UNSTABLE_SLIDING)
        else:
            assert kind is BoundaryKind.CROSSING

    @given(eps=st.floats(-0.1, 0.1), x=st.floats(0.0, 1.5))
    def test_ds_dlambda_is_minus_eps(self, eps, x):
        assert classify_boundary(welander(eps), [x, 0.0]).dS_dlambda == pytest.approx(-eps, abs=1e-15)

    def test_flips_across_zero(self):
        assert classify_boundary(welander(1e-6), [0.75 + 2.5e-6, 0.0]).kind is BoundaryKind.STABLE_SLIDING
        assert classify_boundary(welander(-1e-6), [0.75 - 2.5e-6, 0.0]).kind is BoundaryKind.UNSTABLE_SLIDING


class TestTangencies:
    def test_welander_pair(self):
        ts = find_tangencies(welander(0.05), ((0.0, -0.5), (1.2, 0.5)))
        got = {t.side: t for t in ts}
        assert got[Side.MINUS].location[0] == pytest.approx(0.8125, abs=1e-12)
        assert got[Side.PLUS].location[0] == pytest.approx(0.9375, abs=1e-12)
        assert {t.visibility for t in ts} == {Visibility.INVISIBLE}

    @pytest.mark.parametrize("eps", [-0.05, -0.01, 0.01, 0.05])
    def test_closed_forms(self, eps):
        got = {t.side: t.location[0] for t in find_tangencies(welander(eps), ((0.0, -0.5), (1.5, 0.5)))}
        assert got[Side.PLUS] == pytest.approx(0.75 + 15 * eps / 4, abs=1e-8)
        assert got[Side.MINUS] == pytest.approx(0.75 + 5 * eps / 4, abs=1e-8)

    def test_fused_focus_is_doubly_invisible(self):
        sysm = welander(0.0)
        z = np.array([0.75, 0.0])
        assert visibility(sysm, z, Side.PLUS) is Visibility.INVISIBLE
        assert visibility(sysm, z, Side.MINUS) is Visibility.INVISIBLE

    def test_visible_tangency(self):
        # orbits of (1, x) through the origin are y = x^2/2, which stay in y >= 0
        sysm = planar(lambda z: np.array([1.0, z[0]]), lambda z: np.array([1.0, 1.0]))
        (t,) = [t for t in find_tangencies(sysm, ((-1.0, -1.0), (1.0, 1.0))) if t.side is Side.PLUS]
        assert t.location[0] == pytest.approx(0.0, abs=1e-12)
        assert t.visibility is Visibility.VISIBLE

    def test_lie_derivative_analytic_matches_fd(self):
        sysm = welander(0.03)
        fd = planar(sysm.f_plus, sysm.f_minus)
        z = np.array([0.8, 0.0])
        assert second_lie_derivative(sysm, z, Side.PLUS) == pytest.approx(
            second_lie_derivative(fd, z, Side.PLUS), rel=1e-6)

    def test_higher_dimensions_not_supported(self):
        sysm = PiecewiseSystem(dim=3, f_plus=lambda z: z, f_minus=lambda z: z, h=lambda z: z[2],
                               grad_h=lambda z: np.array([0.0, 0.0, 1.0]))
        with pytest.raises(NotImplementedError):
            find_tangencies(sysm, ((0, 0, 0), (1, 1, 1)))
