import random
from dataclasses import replace

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import random_instances
from timecons.auxgraph import (
    A1, A2, A3, A4, AuxGraph, PairError, Place, build_aux_graph, build_reconciliation, check_pair, comparable,
    find_cycle, is_acyclic, lca_map, maximal_topological_sort, place_leq, place_lt, verify_reconciliation,
)
from timecons.genetree import Event
from timecons.newick import emit_newick, parse_gene_tree, parse_newick
from timecons.oracle import brute_force_solve, enumerate_binary_species_trees, naive_aux_edges, naive_time_consistent
from timecons.solver import solve
from timecons.tree import cherries, split_refinement, star_tree


def graph(n, edges):
    return AuxGraph(n, 0, [(a, b, A1) for a, b in edges])


def test_sort_dag():
    topo = maximal_topological_sort(graph(4, [(0, 1), (1, 2), (0, 3), (3, 2)]))
    assert topo.order == (0, 1, 3, 2)
    assert find_cycle(graph(4, [(0, 1)])) is None


def test_sort_two_cycle():
    g = graph(3, [(0, 1), (1, 0), (2, 0)])
    topo = maximal_topological_sort(g)
    assert topo.member_set == {2}
    assert find_cycle(g) == [0, 1]


def test_downstream_of_cycle_is_excluded():
    g = graph(5, [(1, 2), (2, 1), (2, 3), (0, 3), (3, 4)])
    assert maximal_topological_sort(g).member_set == {0}
    assert not is_acyclic(g)


def test_self_loop_is_a_cycle():
    assert find_cycle(graph(2, [(0, 1), (1, 1)])) == [1]


@given(st.integers(0, 2**32), st.integers(1, 25), st.floats(0.02, 0.4))
@settings(max_examples=120, deadline=None)
def test_member_set_ignores_tie_breaking(seed, n, density):
    rng = random.Random(seed)
    edges = [(a, b) for a in range(n) for b in range(n) if rng.random() < density / 2]
    g = graph(n, edges)
    base = maximal_topological_sort(g)
    for _ in range(5):
        prio = [rng.random() for _ in range(n)]
        assert maximal_topological_sort(g, prio).member_set == base.member_set
    # every member's in-neighbours precede it; every non-member has a non-member in-neighbour
    pos = {v: i for i, v in enumerate(base.order)}
    for v in range(n):
        if v in pos:
            assert all(p in pos and pos[p] < pos[v] for p in g.pred[v])
        else:
            assert any(p not in pos for p in g.pred[v])
    cycle = find_cycle(g, base)
    if cycle is None:
        assert len(base.order) == n
    else:
        for a, b in zip(cycle, cycle[1:] + cycle[:1]):
            assert b in g.succ[a]


def test_edges_match_independent_construction():
    rng = random.Random(2)
    for _, g in random_instances(80, seed=7, hint=14):
        for s in [star_tree(g.species)] + [next(enumerate_binary_species_trees(rng.sample(g.species, len(g.species)), 26))]:
            A = build_aux_graph(g, s)
            nT = A.n_gene

            def tag(node):
                return ("S", node - nT) if A.is_species(node) else ("T", node)

            assert sorted((tag(a), tag(b)) for a, b, _ in A.edges) == sorted(naive_aux_edges(g, s))


def test_edge_count_and_leaf_loops():
    for _, g in random_instances(150, seed=8):
        s = star_tree(g.species)
        A = build_aux_graph(g, s)
        nT = len(g)
        assert len(A.edges) <= 2 * nT + len(s)
        assert len(A.edges_of_class(A2)) == len(s) - 1
        assert len(A.edges_of_class(A4)) == len(g.transfer_edges)
        assert len(A.edges_of_class(A3)) == sum(e in (Event.DUP, Event.HGT) for e in g.events)
        for a, b, _ in A.edges:
            if a == b and A.is_species(a):
                assert not s.is_leaf(a - nT)


def test_lca_map_leaf_mismatch():
    g = parse_gene_tree("(a@A,b@B)[&ev=s];")
    with pytest.raises(PairError):
        lca_map(g, parse_newick("(A,C);"))


def test_split_keeps_other_in_neighbourhoods():
    rng = random.Random(4)
    for _, g in random_instances(120, seed=12):
        s = star_tree(g.species)
        for _ in range(len(g.species)):
            wide = [x for x in cherries(s) if len(s.children[x]) >= 3]
            if not wide:
                break
            x = rng.choice(wide)
            kids = list(s.children[x])
            rng.shuffle(kids)
            cut = rng.randint(1, len(kids) - 1)
            s2 = split_refinement(s, x, (set(kids[:cut]), set(kids[cut:])))
            A, A2g = build_aux_graph(g, s), build_aux_graph(g, s2)
            nT = len(g)
            for y in range(len(s)):
                if s.is_ancestor(x, y):
                    continue
                assert sorted(A.pred[nT + y]) == sorted(A2g.pred[nT + y])
            s = s2


def test_membership_only_grows_along_a_solve():
    for _, g in random_instances(200, seed=13):
        res = solve(g)
        for step in res.trace.steps:
            if step.member_set_after is not None:
                assert step.member_set_before <= step.member_set_after


def test_check_pair_matches_naive():
    rng = random.Random(5)
    n = 0
    for _, g in random_instances(120, seed=14, max_species=5, hint=16):
        trees = list(enumerate_binary_species_trees(g.species, 8))
        for s in rng.sample(trees, min(6, len(trees))):
            assert check_pair(g, s).consistent == naive_time_consistent(g, s)
            n += 1
    assert n > 250


def test_check_pair_certificates():
    g = parse_gene_tree("((a@A,b@B)[&ev=s],c@C)[&ev=s];")
    v = check_pair(g, parse_newick("((A,C),B);"))
    assert v.kind == "missing_triplets" and [str(t) for t in v.missing] == ["AB|C"]


S3 = parse_newick("((A,B),C);")


def test_place_order():
    a, b, c = (S3.vertex(x) for x in "ABC")
    ab = S3.parent[a]
    root = S3.root
    assert place_lt(S3, Place(a, False), Place(a, True))
    assert place_lt(S3, Place(a, True), Place(ab, False))
    assert not place_leq(S3, Place(ab, True), Place(ab, False))
    assert place_leq(S3, Place(ab, False), Place(ab, True))
    assert place_lt(S3, Place(ab, True), Place(root, True))
    assert not comparable(S3, Place(a, True), Place(c, False))
    assert not comparable(S3, Place(b, False), Place(a, True))


def solved_pairs(n, seed):
    for _, g in random_instances(n, seed=seed):
        res = solve(g)
        if res.solved:
            yield g, res.tree


def test_reconciliations_verify():
    count = 0
    for g, s in solved_pairs(200, 15):
        r = build_reconciliation(g, s)
        assert verify_reconciliation(g, s, r).ok
        count += 1
    assert count > 150


def test_reconciliation_rejects_inconsistent_pair():
    g = parse_gene_tree("((a@A,b@B)[&ev=s],c@C)[&ev=s];")
    with pytest.raises(ValueError):
        build_reconciliation(g, parse_newick("((A,C),B);"))


def test_perturbed_reconciliations_fail():
    hit_b2 = hit_m2 = 0
    for g, s in solved_pairs(120, 16):
        r = build_reconciliation(g, s)
        for u, e in enumerate(g.events):
            if e in (Event.DUP, Event.HGT):
                top = s.parent[r.mu[u].node]
                low = r.planted_time if top is None else r.tau_species[top]
                tau = list(r.tau_gene)
                tau[u] = low
                assert "B2" in verify_reconciliation(g, s, replace(r, tau_gene=tuple(tau))).clauses()
                hit_b2 += 1
                break
        for u, e in enumerate(g.events):
            if e is Event.SPEC:
                mu = list(r.mu)
                other = s.root if mu[u].node != s.root else s.children[s.root][0]
                mu[u] = Place(other, False)
                assert "M2.i" in verify_reconciliation(g, s, replace(r, mu=tuple(mu))).clauses()
                hit_m2 += 1
                break
    assert hit_b2 > 20 and hit_m2 > 20


def test_worked_example_pairs():
    from pathlib import Path

    g = parse_gene_tree((Path(__file__).parent / "data" / "worked_example.nwk").read_text())
    assert check_pair(g, parse_newick("(((A,C),B),D);")).consistent
    v = check_pair(g, parse_newick("(((A,B),C),D);"))
    assert v.kind == "cyclic" and not v.missing
    assert v.cycle_names == ("tB", "tD1", "dAC", "{A,B,C}", "{A,B}")
    assert emit_newick(brute_force_solve(g)) == "(((A,C),B),D);"
