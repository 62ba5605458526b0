"""Compare the numba and pure-numpy kernels on representative workloads.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Each kernel is run once to trigger compilation, then timed; the table shows
the best of ``--repeat`` runs and checks that both backends agree.
"""

import argparse
import time

import numpy as np

from oscdecay import _kernels
from oscdecay.parser import parse_phase, parse_polynomial


def best_of(fn, repeat):
    fn()
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t)
    return min(times), out


def workloads():
    rng = np.random.default_rng(0)
    P = parse_polynomial("t1*t2*(4 + 1/25*x1 + 1/50*t1) - 3*t1^3*y2", 2, allow_tau=True)
    exps, coefs = P.compiled()
    pts = rng.uniform(-1, 1, size=(1 << 18, 6))
    yield "eval_poly 2^18 pts", lambda impl: impl.eval_poly(exps, coefs, pts)

    A = rng.normal(size=(1 << 15, 6))
    B = rng.normal(size=(289, 6))
    yield "min_abs_grid 2^15 x 289", lambda impl: impl.min_abs_grid(A, B)

    S = parse_phase("1/2*(x1*y1*y2 + x2*y2^2 - x2*y1^2)", 2)
    e, c = S.compiled()
    e = np.ascontiguousarray(e[:, :4])
    u = rng.random((1 << 17, 4))
    box = np.array([0.0, 0.0]), np.array([0.2, 0.2])
    args = (e, c, 1e3, u, box[0], box[1], box[0], box[1], box[0], box[1], 1, 1.0)
    yield "trilinear_sum 2^17 pts", lambda impl: impl.trilinear_sum(*args)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ns = ap.parse_args()
    if _kernels.numba_impl is None:
        raise SystemExit("numba is not installed; nothing to compare")
    print(f"{'kernel':28s} {'numpy [s]':>10s} {'numba [s]':>10s} {'speedup':>8s}  agree")
    for name, run in workloads():
        t_np, a = best_of(lambda: run(_kernels.numpy_impl), ns.repeat)
        t_nb, b = best_of(lambda: run(_kernels.numba_impl), ns.repeat)
        agree = np.allclose(np.asarray(a), np.asarray(b), rtol=1e-10, atol=1e-9)
        print(f"{name:28s} {t_np:10.4f} {t_nb:10.4f} {t_np / t_nb:8.1f}  {agree}")


if __name__ == "__main__":
    main()
