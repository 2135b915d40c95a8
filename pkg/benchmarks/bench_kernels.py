"""Time the numba kernels against the numpy fallbacks.

    python3 benchmarks/bench_kernels.py [--repeat 3] [--quick]

Each kernel runs once untimed per backend so numba compilation is not
counted, then the best of ``--repeat`` runs is reported.  Results from the
two backends are compared and a mismatch aborts the run.
"""

import argparse
import itertools
import time

import numpy as np

from rankone import kernels
from rankone.profiles import dlo_generic, random_graph_fixture


def best_time(fn, repeat):
    fn()
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def cases(quick):
    dlo = dlo_generic(30 if quick else 40, 3, seed=0).struct
    graph = random_graph_fixture(24, 4, seed=0).struct
    k = 4 if quick else 5
    out = []
    for name, s in (("dlo", dlo), ("graph", graph)):
        pc, uc = kernels.encode_binary(s)
        out.append((f"max_type_count {name} k={k}", lambda b, pc=pc, uc=uc: kernels.max_type_count(pc, uc, k, b)[0]))
        out.append((f"distality {name} nmax=4", lambda b, pc=pc, uc=uc: kernels.distality_width_raw(pc, uc, 4, b)))
    pc, uc = kernels.encode_binary(graph)
    combos = np.array(list(itertools.combinations(range(graph.size), 4)), dtype=np.int64)
    perms = np.array(list(itertools.permutations(range(4))), dtype=np.int64)
    out.append(("subset_codes graph k=4", lambda b: kernels.subset_codes(pc, uc, combos, perms, b)))
    return out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--quick", action="store_true", help="smaller inputs")
    args = ap.parse_args()
    print(f"{'kernel':32s} {'numba s':>10s} {'numpy s':>10s} {'speedup':>8s}")
    for name, run in cases(args.quick):
        t_nb, r_nb = best_time(lambda: run("numba"), args.repeat)
        t_np, r_np = best_time(lambda: run("numpy"), args.repeat)
        if not np.array_equal(np.asarray(r_nb), np.asarray(r_np)):
            raise SystemExit(f"{name}: backends disagree")
        print(f"{name:32s} {t_nb:10.4f} {t_np:10.4f} {t_np / max(t_nb, 1e-9):7.1f}x")


if __name__ == "__main__":
    main()
