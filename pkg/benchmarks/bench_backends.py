"""Wall-clock comparison of the numba and numpy Gillespie kernels.

    python3 benchmarks/bench_backends.py --paths 100000 --t 20

Each backend simulates the same paths; the script checks that discrete
outcomes coincide and reports the best of ``--repeat`` runs.
"""

import argparse
import time

import numpy as np

from fkqe import _accel, _kernels
from fkqe.model import FkWeight, Observable, build_discrete_stable, golden2


def instances(n_grid):
    stable = build_discrete_stable(n_grid, 1.0, 1.0, 0.2)
    yield "golden2", golden2(), FkWeight([1.0, 0.0], np.zeros((2, 2))), Observable.jump_count(2)
    yield f"stable1d n={n_grid}", stable, FkWeight(np.linspace(0, 1, n_grid), np.zeros((n_grid, n_grid))), \
        Observable.jump_count(n_grid)


def best_time(fn, repeat):
    best = np.inf
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--paths", type=int, default=100_000)
    p.add_argument("--t", type=float, default=20.0)
    p.add_argument("--n-grid", type=int, default=21)
    p.add_argument("--repeat", type=int, default=3)
    p.add_argument("--seed", type=int, default=1)
    args = p.parse_args(argv)

    backends = ["numpy"] + (["numba"] if _accel.HAVE_NUMBA else [])
    print(f"{'instance':<16} {'backend':<7} {'seconds':>9} {'paths/s':>12}")
    for name, chain, weight, obs in instances(args.n_grid):
        def run(backend):
            return _kernels.simulate(chain.q, chain.kappa, weight.V, weight.F, obs.Vp, obs.G,
                                     args.t, 0, args.seed, args.paths, backend=backend)

        outs = {}
        if "numba" in backends:
            _kernels.simulate(chain.q, chain.kappa, weight.V, weight.F, obs.Vp, obs.G,
                              args.t, 0, args.seed, 10, backend="numba")  # compile outside the timer
        for b in backends:
            sec, outs[b] = best_time(lambda: run(b), args.repeat)
            print(f"{name:<16} {b:<7} {sec:>9.3f} {args.paths / sec:>12.0f}")
        if len(outs) == 2:
            a, b = outs["numpy"], outs["numba"]
            same = all(np.array_equal(a[k], b[k]) for k in (0, 3, 4))
            print(f"{'':<16} discrete outcomes identical: {same}")


if __name__ == "__main__":
    main()
