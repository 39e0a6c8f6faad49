"""Compare the compiled and numpy triplet kernels on generated gene trees.

    python3 benchmarks/bench_kernels.py --sizes 100 200 400 800 --repeats 5

Each row times informative-triplet extraction (the part the kernels speed up)
and a full solve, on the same loss-free instance, once per backend.
"""

import argparse
import time

from timecons import _pykernels, kernels
from timecons.genetree import _compute_triplet_codes
from timecons.newick import emit_gene_tree, parse_gene_tree
from timecons.oracle import InstanceGenConfig, InstanceGenError, generate_instance
from timecons.solver import solve


def instance_near(n: int) -> str:
    for seed in range(10_000):
        try:
            g = generate_instance(InstanceGenConfig(n // 5, n + n // 10, 0.3, 0.3, 0.0, seed))
        except InstanceGenError:
            continue
        if abs(len(g.tree.leaves) - n) <= n // 10:
            return emit_gene_tree(g)
    raise SystemExit(f"no instance near {n} genes")


def best_of(repeats: int, fn) -> float:
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def use(impl) -> None:
    kernels.rule1_mark = impl.rule1_mark
    kernels.rule2_mark = impl.rule2_mark


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[100, 200, 400, 800])
    ap.add_argument("--repeats", type=int, default=5)
    args = ap.parse_args()

    backends = {"python": _pykernels}
    try:
        from timecons import _ckernels

        backends["cython"] = _ckernels
    except ImportError:
        print("compiled kernels not built; timing the numpy fallback only")

    print(f"{'genes':>6} {'species':>7} {'backend':>8} {'triplets ms':>12} {'solve ms':>10}")
    for n in args.sizes:
        text = instance_near(n)
        probe = parse_gene_tree(text)
        codes = {}
        for name, impl in backends.items():
            use(impl)
            trip = best_of(args.repeats, lambda: _compute_triplet_codes(parse_gene_tree(text)))
            full = best_of(args.repeats, lambda: solve(parse_gene_tree(text)))
            codes[name] = _compute_triplet_codes(parse_gene_tree(text)).tolist()
            print(f"{len(probe.tree.leaves):>6} {len(probe.species):>7} {name:>8} {trip * 1e3:>12.2f} {full * 1e3:>10.1f}")
        if len(set(map(tuple, codes.values()))) != 1:
            raise SystemExit("backends disagree")


if __name__ == "__main__":
    main()
