import csv
import io
import json

import pytest
from hypothesis import given, settings, strategies as st

from fusedfocus import blowup
from fusedfocus.scan import (Attractor, BifurcationDiagram, BifurcationKind, Budget, Regime, ScanPoint,
                             _dedupe, scan_nonsmooth, scan_smooth)


@pytest.fixture(scope="module")
def nonsmooth():
    return scan_nonsmooth([-0.04, 0.0, 0.04])


@pytest.fixture(scope="module")
def smooth():
    return scan_smooth([1e-3], [-0.012, -0.009, -0.007, -0.004], hopf_points=61)


class TestNonsmooth:
    def test_attractors(self, nonsmooth):
        by_eps = {p.eps: p for p in nonsmooth.points}
        assert by_eps[-0.04].attractor is Attractor.PERIODIC
        assert by_eps[-0.04].orbit_amplitude == pytest.approx(0.26579, abs=1e-4)
        assert by_eps[0.0].attractor is Attractor.FOCUS
        assert by_eps[0.04].attractor is Attractor.SLIDING
        assert all(p.regime is Regime.NONSMOOTH and p.a == 0.0 for p in nonsmooth.points)

    def test_sliding_data(self, nonsmooth):
        by_eps = {p.eps: p for p in nonsmooth.points}
        assert by_eps[0.04].slide_interval == pytest.approx((0.8, 0.9))
        assert by_eps[0.04].slide_stability == "stable"
        assert by_eps[-0.04].slide_stability == "unstable"
        assert by_eps[0.0].slide_stability == "collapsed"

    def test_fused_focus_detected(self, nonsmooth):
        (b,) = nonsmooth.detected_bifurcations
        assert b.kind is BifurcationKind.FUSED_FOCUS
        assert b.eps == 0.0 and b.a == 0.0

    def test_interpolated_without_zero(self):
        diag = scan_nonsmooth([-0.02, 0.03], Budget(t_final=50, seeds=1, max_events=200))
        (b,) = diag.detected_bifurcations
        assert b.eps == pytest.approx(0.0, abs=1e-15)

    def test_grid_deduplicated_and_sorted(self):
        diag = scan_nonsmooth([0.03, 0.01, 0.03], Budget(t_final=20, seeds=1, max_events=50))
        assert [p.eps for p in diag.points] == [0.01, 0.03]

    def test_threads_do_not_change_result(self):
        b = Budget(t_final=30, seeds=2, max_events=100)
        assert (scan_nonsmooth([-0.03, 0.02], b, threads=1).to_csv()
                == scan_nonsmooth([-0.03, 0.02], b, threads=2).to_csv())


class TestSmooth:
    def test_hopf_detected(self, smooth):
        (b,) = smooth.detected_bifurcations
        assert b.kind is BifurcationKind.SMOOTH_HOPF
        assert b.eps == pytest.approx(-0.0079635, abs=2e-6)

    def test_attractors_either_side(self, smooth):
        by_eps = {p.eps: p for p in smooth.points}
        assert by_eps[-0.007].attractor is Attractor.EQUILIBRIUM
        assert by_eps[-0.004].attractor is Attractor.EQUILIBRIUM
        assert by_eps[-0.009].attractor is Attractor.PERIODIC
        assert by_eps[-0.012].orbit_amplitude > by_eps[-0.009].orbit_amplitude > 0.0

    def test_eigen_sign_matches_attractor(self, smooth):
        for p in smooth.points:
            assert (p.eigen_real < 0.0) == (p.attractor is Attractor.EQUILIBRIUM)

    def test_rejects_nonpositive_a(self):
        with pytest.raises(ValueError):
            scan_smooth([0.0], [0.01])

    def test_hopf_search_optional(self):
        diag = scan_smooth([1e-3], [-0.01, 0.01], hopf_points=0)
        assert diag.detected_bifurcations == []

    @settings(max_examples=200, deadline=None)
    @given(a=st.floats(1e-4, 1e-3), eps=st.floats(-0.05, 0.05))
    def test_regime_consistency(self, a, eps):
        # away from the numerical Hopf point the smooth attractor follows its side
        star = -7.9635 * a
        if abs(eps - star) <= 0.25 * abs(star):
            return
        (p,) = scan_smooth([a], [eps], hopf_points=0).points
        if eps > star:
            assert p.attractor is Attractor.EQUILIBRIUM
        elif eps > -0.05 and eps < star:
            assert p.eigen_real > 0.0


class TestDiagram:
    def test_csv_header_and_rows(self, nonsmooth):
        rows = list(csv.reader(io.StringIO(nonsmooth.to_csv())))
        assert tuple(rows[0]) == BifurcationDiagram.CSV_COLUMNS
        assert len(rows) == 4
        assert rows[1][2] == "NonsmoothFilippov" and rows[1][3] == "PeriodicOrbit"

    def test_json_summary(self, nonsmooth):
        data = json.loads(nonsmooth.to_json())
        assert data["points"] == 3 and data["failures"] == []
        assert data["detected_bifurcations"][0]["kind"] == "FusedFocus"

    def test_merge_sorts(self, nonsmooth, smooth):
        m = smooth.merge(nonsmooth)
        assert [(p.a, p.eps) for p in m.points] == sorted((p.a, p.eps) for p in m.points)
        assert len(m.detected_bifurcations) == 2

    def test_deterministic(self):
        b = Budget(t_final=30, seeds=2, max_events=100)
        assert scan_nonsmooth([-0.03, 0.0], b).to_csv() == scan_nonsmooth([-0.03, 0.0], b).to_csv()

    def test_dedupe(self):
        assert _dedupe([0.3, 0.1, 0.3, 0.2]) == [0.1, 0.2, 0.3]


class TestScanPoint:
    def test_regime_tied_to_a(self):
        with pytest.raises(ValueError):
            ScanPoint(eps=0.0, a=0.01, regime=Regime.NONSMOOTH, attractor=Attractor.FOCUS)
        with pytest.raises(ValueError):
            ScanPoint(eps=0.0, a=0.0, regime=Regime.SMOOTH, attractor=Attractor.FOCUS)

    def test_periodic_needs_amplitude(self):
        with pytest.raises(ValueError):
            ScanPoint(eps=-0.01, a=0.0, regime=Regime.NONSMOOTH, attractor=Attractor.PERIODIC)

    def test_stationary(self):
        assert Attractor.SLIDING.stationary and not Attractor.PERIODIC.stationary
