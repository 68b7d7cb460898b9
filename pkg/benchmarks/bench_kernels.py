"""Compiled vs pure-Python integration kernels.

Times adaptive runs of each field through both backends and prints the
median wall time and speed-up.  Run with ``python benchmarks/bench_kernels.py``.
"""
import argparse
import statistics
import time

from fusedfocus import kernels
from fusedfocus.welander import WelanderParams

CASES = (
    ("fixed-k (Heaviside piece)", kernels.FIXED_K, WelanderParams(epsilon=-0.04).kernel_params(k=1.0),
     (0.5, 0.2), 50.0),
    ("arctan, (x, y) chart", kernels.ARCTAN_XY, WelanderParams(epsilon=-0.02, a=0.01).kernel_params(),
     (0.5, 0.2), 50.0),
    ("blow-up chart, fast time", kernels.FAST, WelanderParams(epsilon=-0.02, a=0.01).kernel_params(),
     (0.8, 0.4), 500.0),
)


def _time(code, p, y0, t1, backend, repeat):
    out = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        res = kernels.run(code, p, list(y0), 0.0, t1, rtol=1e-10, atol=1e-12, backend=backend, store=False)
        out.append(time.perf_counter() - t0)
    return statistics.median(out), res.nsteps


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    if kernels._compiled is None:
        print("compiled kernel not built; only the Python backend is available")
    print(f"{'case':28s} {'steps':>7s} {'python [ms]':>12s} {'cython [ms]':>12s} {'speed-up':>9s}")
    for name, code, p, y0, t1 in CASES:
        tp, n = _time(code, p, y0, t1, "python", args.repeat)
        if kernels._compiled is not None:
            tc, _ = _time(code, p, y0, t1, "cython", args.repeat)
            print(f"{name:28s} {n:7d} {1e3 * tp:12.2f} {1e3 * tc:12.3f} {tp / tc:9.1f}")
        else:
            print(f"{name:28s} {n:7d} {1e3 * tp:12.2f} {'-':>12s} {'-':>9s}")


if __name__ == "__main__":
    main()
