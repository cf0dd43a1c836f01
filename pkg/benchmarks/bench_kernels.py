"""Compare the compiled kernels with the pure-Python fallback.

    python benchmarks/bench_kernels.py --games kuhn leduc leduc5 --repeat 20
"""

from __future__ import annotations

import argparse
import time

import numpy as np

import bufp.best_response
import bufp.metrics
import bufp.solvers
import bufp.strategy
from bufp._kernels import compiled, fallback
from bufp.game import load_game
from bufp.metrics import exploitability, total_exploitability
from bufp.solvers import SolverState
from bufp.strategy import random_profile

MODULES = (bufp.strategy, bufp.best_response, bufp.metrics, bufp.solvers)


def use(backend) -> None:
    for mod in MODULES:
        mod.backend = backend


def timed(fn, repeat: int) -> float:
    fn()  # warm caches
    start = time.perf_counter()
    for _ in range(repeat):
        fn()
    return (time.perf_counter() - start) / repeat * 1000.0


def workloads(tree, rng):
    prof = random_profile(tree, rng, 0.3)
    ft = tree.flat
    v = np.empty(ft.n_nodes)

    def values():
        bufp.strategy.backend.values(ft, prof.probs, v)

    def step(algo):
        state = SolverState.initial(tree, algo, seed=0, tie_break="random")
        return lambda: state.step()

    return {
        "values": values,
        "exploitability": lambda: exploitability(tree, prof),
        "total_exploitability": lambda: total_exploitability(tree, prof),
        "cfr step": step("cfr"),
        "bufp-ef step": step("bufp-ef"),
        "bufp-x step": step("bufp-x"),
    }


def main(argv=None) -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--games", nargs="+", default=["kuhn", "leduc"])
    parser.add_argument("--repeat", type=int, default=10)
    args = parser.parse_args(argv)
    if compiled is None:
        raise SystemExit("compiled core is not built; run `pip install -e . --no-build-isolation`")

    print(f"{'game':8s} {'workload':22s} {'compiled ms':>12s} {'python ms':>12s} {'speedup':>8s}")
    for game in args.games:
        tree = load_game(game)
        results = {}
        for name, backend in (("compiled", compiled), ("python", fallback)):
            use(backend)
            for work, fn in workloads(tree, np.random.default_rng(0)).items():
                results[name, work] = timed(fn, args.repeat)
        use(compiled)
        for work in workloads(tree, np.random.default_rng(0)):
            c, p = results["compiled", work], results["python", work]
            print(f"{game:8s} {work:22s} {c:12.3f} {p:12.3f} {p / c:7.1f}x")


if __name__ == "__main__":
    main()
