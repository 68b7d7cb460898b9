import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fusedfocus import _pykernel, kernels
from fusedfocus.errors import DomainError
from fusedfocus.kernels import ARCTAN_XY, BLOWUP, FAST, FIXED_K, NativeField
from fusedfocus.welander import WelanderParams

HAS_CYTHON = kernels.BACKEND == "cython"
needs_cython = pytest.mark.skipif(not HAS_CYTHON, reason="compiled kernel not built")

eps_st = st.floats(-0.1, 0.1)
a_st = st.floats(1e-4, 0.5)


def _params(eps, a, k=0.0):
    return WelanderParams(epsilon=eps, a=a).kernel_params(k=k)


class TestBackendSelection:
    def test_default_backend(self):
        assert kernels.BACKEND in ("cython", "python")
        assert kernels.get_backend() is (kernels._compiled or _pykernel)

    def test_python_always_available(self):
        assert kernels.get_backend("python") is _pykernel

    def test_unknown_backend(self):
        with pytest.raises(ValueError):
            kernels.get_backend("fortran")

    def test_pure_python_env_switch(self):
        env = dict(os.environ, FUSEDFOCUS_PURE_PYTHON="1")
        out = subprocess.run([sys.executable, "-c", "import fusedfocus.kernels as k; print(k.BACKEND)"],
                             env=env, capture_output=True, text=True, check=True)
        assert out.stdout.strip() == "python"


class TestFields:
    def test_fixed_k_matches_closed_form(self):
        p = _params(0.03, 0.0, k=1.0)
        f = kernels.evaluate(FIXED_K, p, [0.6, 0.1])
        # x' = 1 - x - kx, y' = beta - beta eps - k eps - alpha - (alpha beta - alpha) x - (beta + k) y
        x, y, al, be, ep = 0.6, 0.1, 0.8, 0.5, 0.03
        want = [1 - 2 * x, be - be * ep - ep - al - (al * be - al) * x - (be + 1) * y]
        np.testing.assert_allclose(f, want, rtol=1e-14)

    def test_blowup_domain_guard(self):
        p = _params(0.0, 0.01)
        assert kernels.evaluate(BLOWUP, p, [0.7, 0.0]) is None
        assert kernels.evaluate(BLOWUP, p, [0.7, 1.0]) is None
        assert kernels.step(FAST, p, [0.7, 1.0 - 1e-9], 0.1) is None

    def test_native_field_raises_outside_domain(self):
        nf = NativeField(BLOWUP, _params(0.0, 0.01))
        with pytest.raises(DomainError):
            nf([0.7, 1.5])

    def test_fast_is_a_times_blowup(self):
        p = _params(0.02, 0.003)
        f = kernels.evaluate(FAST, p, [0.8, 0.3])
        g = kernels.evaluate(BLOWUP, p, [0.8, 0.3])
        np.testing.assert_allclose(f, 0.003 * g, rtol=1e-13)


@needs_cython
class TestBackendEquivalence:
    @given(eps=eps_st, a=a_st, x=st.floats(0.0, 1.5), y=st.floats(-0.5, 0.5),
           k=st.sampled_from([0.0, 1.0]))
    def test_rhs_fixed_and_arctan(self, eps, a, x, y, k):
        for code, p in ((FIXED_K, _params(eps, a, k)), (ARCTAN_XY, _params(eps, a))):
            fp = kernels.evaluate(code, p, [x, y], backend="python")
            fc = kernels.evaluate(code, p, [x, y], backend="cython")
            np.testing.assert_allclose(fc, fp, rtol=1e-14, atol=1e-15)

    @given(eps=eps_st, a=a_st, x=st.floats(0.0, 1.5), k=st.floats(1e-5, 1 - 1e-5))
    def test_rhs_blowup_charts(self, eps, a, x, k):
        p = _params(eps, a)
        for code in (BLOWUP, FAST):
            fp = kernels.evaluate(code, p, [x, k], backend="python")
            fc = kernels.evaluate(code, p, [x, k], backend="cython")
            np.testing.assert_allclose(fc, fp, rtol=1e-13, atol=1e-15)

    @given(eps=eps_st, a=st.floats(1e-3, 0.5), x=st.floats(0.3, 1.0), y=st.floats(-0.3, 0.3),
           h=st.floats(1e-4, 0.1))
    def test_single_step(self, eps, a, x, y, h):
        p = _params(eps, a)
        sp = kernels.step(ARCTAN_XY, p, [x, y], h, backend="python")
        sc = kernels.step(ARCTAN_XY, p, [x, y], h, backend="cython")
        np.testing.assert_allclose(sc, sp, rtol=1e-13, atol=1e-15)

    @given(eps=eps_st, a=st.floats(1e-2, 0.5), x=st.floats(0.3, 1.0), y=st.floats(-0.3, 0.3))
    def test_adaptive_run(self, eps, a, x, y):
        p = _params(eps, a)
        kw = dict(rtol=1e-9, atol=1e-11)
        rp = kernels.run(ARCTAN_XY, p, [x, y], 0.0, 5.0, backend="python", **kw)
        rc = kernels.run(ARCTAN_XY, p, [x, y], 0.0, 5.0, backend="cython", **kw)
        assert rp.status == rc.status == kernels.STATUS_DONE
        assert rp.nsteps == rc.nsteps
        np.testing.assert_allclose(rc.y, rp.y, rtol=1e-10, atol=1e-12)

    def test_event_stop_identical(self):
        p = _params(-0.04, 0.0, k=1.0)
        ev = (1, 0.0, -1, True)
        rp = kernels.run(FIXED_K, p, [0.5, 0.2], 0.0, 50.0, rtol=1e-9, atol=1e-11, event=ev, backend="python")
        rc = kernels.run(FIXED_K, p, [0.5, 0.2], 0.0, 50.0, rtol=1e-9, atol=1e-11, event=ev, backend="cython")
        assert rp.status == rc.status == kernels.STATUS_EVENT
        assert rp.t == pytest.approx(rc.t, abs=1e-12)


class TestBackwardRun:
    @pytest.mark.parametrize("backend", ["python"] + (["cython"] if HAS_CYTHON else []))
    def test_round_trip(self, backend):
        p = _params(0.01, 0.05)
        fwd = kernels.run(ARCTAN_XY, p, [0.6, 0.1], 0.0, 3.0, rtol=1e-11, atol=1e-13, backend=backend)
        back = kernels.run(ARCTAN_XY, p, fwd.y, 3.0, 0.0, rtol=1e-11, atol=1e-13, backend=backend)
        assert back.t == 0.0
        np.testing.assert_allclose(back.y, [0.6, 0.1], atol=1e-8)


class TestBenchmark:
    def test_runs(self, capsys):
        import runpy
        mod = runpy.run_path(os.path.join(os.path.dirname(__file__), "..", "benchmarks", "bench_kernels.py"))
        mod["main"](["--repeat", "1"])
        out = capsys.readouterr().out
        assert "speed-up" in out and "blow-up chart" in out
