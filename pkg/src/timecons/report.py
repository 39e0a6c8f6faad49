"""Structured reports for the command line (JSON with stable keys)."""

from __future__ import annotations

import json
from typing import Optional

from .auxgraph import PairVerdict, Reconciliation, species_vertex_name
from .genetree import AxiomReport, EventLabeledGeneTree
from .newick import emit_newick
from .solver import SolveResult
from .tree import RootedTree

SCHEMA = 1


def _bipartition(bp) -> list:
    return [list(map(str, bp.part_a)), list(map(str, bp.part_b))]


def trace_json(result: SolveResult, s_names: Optional[RootedTree] = None) -> list:
    final = result.final_tree
    out = []
    for step in result.trace.steps:
        out.append(
            {
                "cherry": species_vertex_name(final, step.cherry),
                "split": _bipartition(step.bipartition),
                "sorted_before": step.members_before,
                "sorted_after": step.members_after,
            }
        )
    return out


def solve_report(
    g: EventLabeledGeneTree,
    result: SolveResult,
    reconciliation: Optional[Reconciliation] = None,
    timing: Optional[dict] = None,
) -> dict:
    rep: dict = {"schema": SCHEMA, "command": "solve", "trace": trace_json(result)}
    if result.solved:
        rep["verdict"] = "solution"
        rep["species_tree"] = emit_newick(result.tree)
    else:
        rep["verdict"] = "no_solution"
        rep["species_tree"] = None
        rep["certificates"] = {
            "reason": result.trace.reason,
            "partial_tree": emit_newick(result.final_tree),
            "sorted_vertices": result.final_members,
            "connected_good_split_graphs": [
                {
                    "cherry": species_vertex_name(result.final_tree, gsg.cherry),
                    "vertices": list(map(str, gsg.vertices)),
                    "edges": sorted(
                        [sorted(map(str, e)) + [sorted(tags)] for e, tags in gsg.edges.items()]
                    ),
                }
                for gsg in result.blocking_graphs
            ],
        }
    if reconciliation is not None:
        rep["reconciliation"] = reconciliation_json(g, result.tree, reconciliation)
    if timing is not None:
        rep["timing_ms"] = timing
    return rep


def check_report(g: EventLabeledGeneTree, s: RootedTree, verdict: PairVerdict,
                 reconciliation: Optional[Reconciliation] = None) -> dict:
    rep: dict = {"schema": SCHEMA, "command": "check", "species_tree": emit_newick(s)}
    if verdict.consistent:
        rep["verdict"] = "consistent"
    else:
        rep["verdict"] = "inconsistent_pair"
        rep["certificates"] = {
            "kind": verdict.kind,
            "missing_triplets": [str(t) for t in verdict.missing],
            "cycle": list(verdict.cycle_names) if verdict.cycle_names else None,
        }
    if reconciliation is not None:
        rep["reconciliation"] = reconciliation_json(g, s, reconciliation)
    return rep


def reconciliation_json(g: EventLabeledGeneTree, s: RootedTree, r: Reconciliation) -> dict:
    genes = []
    for u in g.tree.preorder:
        genes.append(
            {
                "vertex": g.vertex_name(u),
                "event": g.events[u].value,
                "maps_to": r.mu[u].describe(s),
                "edge": r.mu[u].edge,
                "time": r.tau_gene[u],
            }
        )
    species = [{"vertex": species_vertex_name(s, x), "time": r.tau_species[x]} for x in s.preorder]
    return {"genes": genes, "species": species, "planted_root_time": r.planted_time}


def axiom_report(g: EventLabeledGeneTree, report: AxiomReport) -> dict:
    return {
        "schema": SCHEMA,
        "command": "validate",
        "verdict": "valid" if report.ok else "invalid",
        "violations": [
            {"axiom": v.axiom, "where": _where(g, v.where), "detail": v.detail} for v in report.violations
        ],
    }


def _where(g, where):
    if isinstance(where, tuple):
        return [g.vertex_name(x) for x in where]
    return g.vertex_name(where)


def emit_report(rep: dict) -> str:
    return json.dumps(rep, sort_keys=True, indent=2, ensure_ascii=False) + "\n"
