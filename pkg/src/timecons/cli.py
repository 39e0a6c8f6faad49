"""Command line: solve, check, triplets, validate, oracle, gen.

Exit codes: 0 solution / consistent, 1 no solution / inconsistent / violations,
2 input error.
"""

from __future__ import annotations

import argparse
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from itertools import islice
from typing import Optional

from .auxgraph import PairError, build_reconciliation, check_pair
from .genetree import AxiomError, GeneTreeError, informative_triplets, validate_axioms
from .newick import ParseError, emit_gene_tree, emit_newick, parse_gene_tree, parse_newick, parse_species_map
from .oracle import (
    DEFAULT_LIMIT,
    InstanceGenConfig,
    InstanceGenError,
    OracleLimitError,
    _pruned_binary,
    brute_force_solve,
    generate_instance,
    has_cycle,
    naive_aux_edges,
    naive_informative_triplets,
)
from .report import axiom_report, check_report, emit_report, solve_report
from .solver import SolverInputError, run_gtc, solve
from .tree import TreeError, _key, from_nested

INPUT_ERRORS = (
    ParseError, AxiomError, GeneTreeError, TreeError, PairError, SolverInputError,
    OracleLimitError, InstanceGenError, OSError, UnicodeDecodeError,
)


def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def _load_gene(args, strict: bool = True):
    smap = parse_species_map(_read(args.map)) if args.map else None
    return parse_gene_tree(_read(args.gene), smap, strict=strict)


def _write(text: str, out: Optional[str] = None) -> None:
    if out and out != "-":
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_solve(args) -> int:
    clock = {}
    t0 = time.perf_counter()
    g = _load_gene(args)
    clock["parse"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    g.triplet_codes
    clock["triplets"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    if args.start_tree:
        result = run_gtc(g, parse_newick(_read(args.start_tree)))
    else:
        result = solve(g)
    clock["solve"] = time.perf_counter() - t0
    rec = None
    if result.solved and args.emit_reconciliation:
        t0 = time.perf_counter()
        rec = build_reconciliation(g, result.tree)
        clock["reconciliation"] = time.perf_counter() - t0
    timing = {k: round(v * 1000, 3) for k, v in clock.items()} if args.timing else None
    if args.json:
        _write(emit_report(solve_report(g, result, rec, timing)), args.output)
    else:
        lines = []
        if result.solved:
            lines.append(emit_newick(result.tree))
        else:
            lines.append(f"no solution: {result.trace.reason}")
            lines.append(f"partial tree: {emit_newick(result.final_tree)}")
        if rec is not None:
            for u in g.tree.preorder:
                lines.append(f"{g.vertex_name(u)}\t{g.events[u].value}\t{rec.mu[u].describe(result.tree)}"
                             f"\t{rec.tau_gene[u]}")
        if timing:
            lines.append("timing_ms " + " ".join(f"{k}={v}" for k, v in timing.items()))
        _write("\n".join(lines) + "\n", args.output)
    return 0 if result.solved else 1


def cmd_check(args) -> int:
    g = _load_gene(args)
    s = parse_newick(_read(args.species))
    verdict = check_pair(g, s)
    rec = build_reconciliation(g, s) if verdict.consistent and args.emit_reconciliation else None
    if args.json:
        _write(emit_report(check_report(g, s, verdict, rec)))
    elif verdict.consistent:
        _write("consistent\n")
    else:
        out = [f"inconsistent: {verdict.kind}"]
        out += [f"missing {t}" for t in verdict.missing]
        if verdict.cycle_names:
            out.append("cycle " + " -> ".join(verdict.cycle_names + verdict.cycle_names[:1]))
        _write("\n".join(out) + "\n")
    return 0 if verdict.consistent else 1


def cmd_triplets(args) -> int:
    g = _load_gene(args)
    R = informative_triplets(g)
    _write("".join(f"{t}\n" for t in sorted(R, key=lambda t: tuple(map(_key, t)))))
    return 0


def cmd_validate(args) -> int:
    g = _load_gene(args, strict=False)
    report = validate_axioms(g)
    if args.json:
        _write(emit_report(axiom_report(g, report)))
    elif report.ok:
        _write("valid\n")
    else:
        _write("".join(f"{v.axiom}\t{v.detail}\n" for v in report.violations))
    return 0 if report.ok else 1


def _oracle_chunk(gene_text: str, nested_trees: list) -> Optional[int]:
    g = parse_gene_tree(gene_text)
    for i, nested in enumerate(nested_trees):
        if not has_cycle(naive_aux_edges(g, from_nested(nested))):
            return i
    return None


def cmd_oracle(args) -> int:
    g = _load_gene(args)
    if args.jobs <= 1:
        s = brute_force_solve(g, args.limit)
    else:
        if len(g.species) > args.limit:
            raise OracleLimitError(f"{len(g.species)} species exceeds the enumeration limit {args.limit}")
        text = emit_gene_tree(g)
        stream = _pruned_binary(list(g.species), naive_informative_triplets(g))
        s = None
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            while s is None:
                batch = [list(islice(stream, 64)) for _ in range(args.jobs)]
                batch = [b for b in batch if b]
                if not batch:
                    break
                # earliest hit in enumeration order wins, as in the serial run
                for chunk, hit in zip(batch, pool.map(_oracle_chunk, [text] * len(batch), batch)):
                    if hit is not None:
                        s = from_nested(chunk[hit])
                        break
    _write((emit_newick(s) if s is not None else "no solution") + "\n")
    return 0 if s is not None else 1


def cmd_gen(args) -> int:
    cfg = InstanceGenConfig(
        species_count=args.species,
        gene_count_hint=args.genes_hint,
        dup_rate=args.dup,
        hgt_rate=args.hgt,
        loss_rate=args.loss,
        seed=args.seed,
    )
    g = generate_instance(cfg)
    _write(emit_gene_tree(g) + "\n", args.output)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="timecons", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def gene_args(sp):
        sp.add_argument("gene", help="gene tree file (annotated Newick), '-' for stdin")
        sp.add_argument("--map", help="TSV file mapping genes to species (overrides name@species)")

    sp = sub.add_parser("solve", help="find a binary time-consistent species tree")
    gene_args(sp)
    sp.add_argument("--start-tree", help="almost binary species tree to refine instead of the star")
    sp.add_argument("--emit-reconciliation", action="store_true", help="also output a reconciliation with times")
    sp.add_argument("--json", action="store_true", help="JSON report")
    sp.add_argument("--timing", action="store_true", help="include per-phase timings (breaks byte-identity)")
    sp.add_argument("-o", "--output", help="output file")
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("check", help="test one gene tree / species tree pair")
    sp.add_argument("gene")
    sp.add_argument("species", help="species tree file (plain Newick)")
    sp.add_argument("--map")
    sp.add_argument("--emit-reconciliation", action="store_true")
    sp.add_argument("--json", action="store_true")
    sp.set_defaults(func=cmd_check)

    sp = sub.add_parser("triplets", help="print the informative species triplets")
    gene_args(sp)
    sp.set_defaults(func=cmd_triplets)

    sp = sub.add_parser("validate", help="report axiom violations")
    gene_args(sp)
    sp.add_argument("--json", action="store_true")
    sp.set_defaults(func=cmd_validate)

    sp = sub.add_parser("oracle", help="brute-force search over all binary species trees")
    gene_args(sp)
    sp.add_argument("--limit", type=int, default=DEFAULT_LIMIT, help="maximum number of species")
    sp.add_argument("--jobs", type=int, default=1, help="worker processes for the tree checks")
    sp.set_defaults(func=cmd_oracle)

    sp = sub.add_parser("gen", help="generate a random gene tree")
    sp.add_argument("--species", type=int, required=True)
    sp.add_argument("--genes-hint", type=int, default=1000, help="upper bound on gene leaves")
    sp.add_argument("--dup", type=float, default=0.0)
    sp.add_argument("--hgt", type=float, default=0.0)
    sp.add_argument("--loss", type=float, default=0.0)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("-o", "--output")
    sp.set_defaults(func=cmd_gen)
    return p


def main(argv: Optional[list] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except INPUT_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
