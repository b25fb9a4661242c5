"""Time the numpy and numba kernel backends side by side.

    python3 benchmarks/bench_kernels.py --spins 6 8 10 --repeat 20

Both backends are imported in the same process, so the env flag is not
needed here. Numba compile time is excluded by a warm-up call.
"""

import argparse
import time

import numpy as np

from nmrdeco import _kernels
from nmrdeco.core import cnot_permutation, spin_rotation


def random_rho(n, rng):
    d = 1 << n
    a = rng.normal(size=(d, 4)) + 1j * rng.normal(size=(d, 4))
    rho = a @ a.conj().T
    return rho / np.trace(rho)


def best_of(fn, repeat):
    fn()  # warm-up (and JIT compile)
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases(n, rng):
    rho = random_rho(n, rng)
    u = spin_rotation(0.7, "x", sign=1)
    phases = np.exp(1j * rng.normal(size=1 << n))
    perm = cnot_permutation(1, n, n).astype(np.int64)
    keep = [0]
    return {
        "apply_local": lambda k: k.apply_local(rho, u, n // 2 + 1, n),
        "apply_phases": lambda k: k.apply_phases(rho, phases),
        "apply_permutation": lambda k: k.apply_permutation(rho, perm),
        "partial_trace": lambda k: k.partial_trace(rho, keep, n),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--spins", type=int, nargs="+", default=[4, 6, 8, 10])
    ap.add_argument("--repeat", type=int, default=10)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    backends = [_kernels.numpy_kernels]
    if _kernels.numba_kernels is None:
        print("numba not installed: timing the numpy backend only")
    else:
        backends.append(_kernels.numba_kernels)

    rng = np.random.default_rng(args.seed)
    head = f"{'kernel':18s} {'spins':>5s}" + "".join(f" {k.name + ' (ms)':>12s}" for k in backends)
    if len(backends) == 2:
        head += f" {'speedup':>8s}"
    print(head)
    for n in args.spins:
        for name, call in cases(n, rng).items():
            ts = [best_of(lambda k=k: call(k), args.repeat) for k in backends]
            row = f"{name:18s} {n:5d}" + "".join(f" {t * 1e3:12.4f}" for t in ts)
            if len(ts) == 2:
                row += f" {ts[0] / ts[1]:8.2f}"
            print(row)
        # both paths must agree before their timings mean anything
        if len(backends) == 2:
            for name, call in cases(n, rng).items():
                a, b = (call(k) for k in backends)
                assert np.allclose(a, b, atol=1e-12), f"{name} disagrees at n={n}"


if __name__ == "__main__":
    main()
