"""Compare the compiled kernels against their numpy fallbacks.

Two hot sweeps dominate oracle runtime: the tuple-lattice sweep behind the
fixed-point oracle (65536 packed tuples per 16-bit universe) and the
depth-first solution sweep behind the optimality oracle.  This script times
both backends on the same inputs and prints a small table.

    python3 benchmarks/bench_kernels.py [--repeats 5]
"""

import argparse
import time

import numpy as np

from timelyck import _kernels
from timelyck.fixpoint import TimingSpec
from timelyck.optimality import build_strategy_model
from timelyck.packed import PackedSpace
from timelyck.sampling import random_event, random_spec, random_universe
from timelyck.scenarios import generate_system, make_scenario
from timelyck.universe import INF


def tuple_sweep_inputs(seed):
    rng = np.random.default_rng(seed)
    u = random_universe(rng, n_agents=2, bit_budget=16, max_runs=2, max_times=4)
    while u.n_points != 8:
        u = random_universe(rng, n_agents=2, bit_budget=16, max_runs=2, max_times=4)
    spec = random_spec(rng, u.agents)
    psi = random_event(rng, u)
    space = PackedSpace(u)
    agents = spec.agents
    pair_index = np.zeros((2, 2), dtype=np.int64)
    tables, key_of = [], {}
    for ai, i in enumerate(agents):
        for aj, j in enumerate(agents):
            if ai == aj:
                continue
            d = spec.delta(i, j)
            key = INF if d == INF else int(d)
            if key not in key_of:
                key_of[key] = len(tables)
                tables.append(space.within_table(key))
            pair_index[ai, aj] = key_of[key]
    return (
        space.n_bits,
        2,
        space.pack(psi),
        np.stack(tables),
        pair_index,
        np.stack([space.knows_table(a) for a in agents]),
    )


def solution_sweep_inputs():
    # three agents, loose symmetric bounds: a few hundred thousand solutions
    agents = ("a", "b", "c")
    timing = TimingSpec(agents, {p: 2 for p in [(i, j) for i in agents for j in agents if i != j]})
    inst = generate_system(make_scenario(agents, timing, obs_delay=(0, 2)))
    model = build_strategy_model(inst)
    V = model.n_vars
    ubs = [[] for _ in range(V)]
    lbs = [[] for _ in range(V)]
    for p, q, c in model.constraints:
        (ubs[q] if q > p else lbs[p]).append((p, c) if q > p else (q, c))

    def csr(rows):
        off = np.zeros(V + 1, dtype=np.int64)
        other, cs = [], []
        for v in range(V):
            off[v + 1] = off[v] + len(rows[v])
            for o, c in rows[v]:
                other.append(o)
                cs.append(c)
        return np.asarray(other, np.int64), np.asarray(cs, np.int64), off

    uo, uc, uoff = csr(ubs)
    lo_, lc, loff = csr(lbs)
    n_vals = inst.universe.horizon + 1
    csr_args = (model.lo, model.hi, uo, uc, uoff, lo_, lc, loff, n_vals, 10**8)
    flat_args = (model.lo, model.hi, model.constraints, n_vals, 10**8)
    return csr_args, flat_args


def best_of(fn, repeats):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    rows = []

    sweeps = [tuple_sweep_inputs(s) for s in range(4)]

    def tuples_numpy():
        for a in sweeps:
            _kernels._scan_postfixed_join_numpy(*a)

    if _kernels._HAVE_NUMBA:

        def tuples_numba():
            for P, k, psi, wt, pi, kt in sweeps:
                _kernels._scan_postfixed_join_numba(P, k, np.int64(psi), wt, pi, kt)

        tuples_numba()  # compile outside the timed region
        rows.append(
            (
                "tuple-lattice sweep (4x 16-bit)",
                best_of(tuples_numba, args.repeats),
                best_of(tuples_numpy, args.repeats),
            )
        )
    else:
        rows.append(("tuple-lattice sweep (4x 16-bit)", None, best_of(tuples_numpy, args.repeats)))

    csr_args, flat_args = solution_sweep_inputs()
    count = None

    def solutions_numpy():
        nonlocal count
        count = _kernels._scan_solutions_numpy(*flat_args)[0]

    if _kernels._HAVE_NUMBA:

        def solutions_numba():
            nonlocal count
            count = _kernels._scan_solutions_numba(*csr_args)[0]

        solutions_numba()
        rows.append(
            (
                "solution sweep",
                best_of(solutions_numba, args.repeats),
                best_of(solutions_numpy, max(1, args.repeats // 2)),
            )
        )
    else:
        rows.append(("solution sweep", None, best_of(solutions_numpy, 1)))
    rows[-1] = (f"solution sweep ({count} solutions)", rows[-1][1], rows[-1][2])

    print(f"{'kernel':42s} {'numba':>10s} {'numpy':>10s} {'speedup':>8s}")
    for name, tn, tp in rows:
        if tn is None:
            print(f"{name:42s} {'-':>10s} {tp * 1e3:9.1f}ms {'-':>8s}")
        else:
            print(f"{name:42s} {tn * 1e3:9.1f}ms {tp * 1e3:9.1f}ms {tp / tn:7.1f}x")


if __name__ == "__main__":
    main()
