"""Time the numba kernels against their numpy twins.

    python3 benchmarks/bench_kernels.py [--repeat 3] [--quick]

Benchmarks one DP column transition on the 4x4 N=592 fixture, a full
modular count, and the typical-table solve on random 8x8 and 200x200
margins.  Both backends must agree exactly (counts) or to 1e-12 (duals).
"""
import argparse
import time

import numpy as np

from ctables import _accel
from ctables.exact_count import _count_mod, _plan, _prime
from ctables.kernels import column_transition
from ctables.margins import BarvinokParams, barvinok_margins, random_margins, validate
from ctables.typical import solve_typical

FIXTURE = validate((220, 215, 93, 64), (108, 286, 71, 127))


def best_of(fn, repeat):
    times, out = [], None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def cases(quick):
    a, b, shape, _ = _plan(list(FIXTURE.rows), list(FIXTURE.cols))
    p = _prime(0)
    state = np.zeros(int(np.prod(shape)), dtype=np.int64)
    state[-1] = 1
    _accel.set_backend("numpy")
    # time the second column, whose input state is nontrivial
    mid = column_transition(state, shape, b[0], sum(a) - b[0], p)
    r_next = sum(a) - b[0] - b[1]
    yield "DP column (4x4 fixture)", lambda: column_transition(mid, shape, b[1], r_next, p)
    if not quick:
        yield "modular count (4x4 fixture, one prime)", lambda: _count_mod(a, b, shape, p)
    rng = np.random.default_rng(1)
    small = [random_margins(rng, 8, 8, 50) for _ in range(50)]
    yield "typical solve x50 (m,n<=8)", lambda: [solve_typical(M).g_value for M in small]
    big = barvinok_margins(BarvinokParams(200 if not quick else 60, 0.5, 4.0, 1.0))
    yield f"typical solve ({big.m}x{big.n} Barvinok)", lambda: solve_typical(big).g_value


def agree(x, y):
    if isinstance(x, np.ndarray):
        return np.array_equal(x, y)
    if isinstance(x, list):
        return np.allclose(x, y, rtol=1e-12, atol=0)
    if isinstance(x, float):
        return abs(x - y) <= 1e-12 * abs(y)
    return x == y


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--quick", action="store_true", help="skip the full count, smaller solve")
    args = ap.parse_args()
    if not _accel.HAS_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")

    print(f"{'case':42s} {'numpy s':>10s} {'numba s':>10s} {'speedup':>8s}  agree")
    for name, fn in cases(args.quick):
        _accel.set_backend("numba")
        fn()  # compile outside the timing
        t_nb, out_nb = best_of(fn, args.repeat)
        _accel.set_backend("numpy")
        t_np, out_np = best_of(fn, args.repeat)
        print(f"{name:42s} {t_np:10.4f} {t_nb:10.4f} {t_np / t_nb:8.1f}x  {agree(out_nb, out_np)}")
    _accel.set_backend("numba")


if __name__ == "__main__":
    main()
