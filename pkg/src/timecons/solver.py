"""Search for a binary time-consistent species tree by good split refinements.

Starting from a star (or any almost binary tree), each round recomputes the
LCA-map, the auxiliary graph and its maximal topological sort, then looks for
a cherry whose good-split graph is disconnected and splits it along the
components.  Edge presence in the good-split graphs is read off per-pair
witness sets (``LSets``) that are updated incrementally between rounds.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Optional

from .auxgraph import (
    TopoSort,
    agrees_with_triplets,
    build_aux_graph,
    lca_map,
    maximal_topological_sort,
    species_leaf_vertices,
    triplet_violations,
)
from .genetree import Event, EventLabeledGeneTree, bits, require_valid
from .tree import RootedTree, _key, cherries, is_almost_binary, is_binary, split_refinement, star_tree

C1, C2, C3, C4 = "C1", "C2", "C3", "C4"


class SolverInputError(ValueError):
    pass


# -- good-split graphs ---------------------------------------------------------


@dataclass(frozen=True)
class GoodSplitGraph:
    """Undirected graph on the leaf children of a cherry, edges tagged by condition."""

    cherry: int
    vertices: tuple  # species labels, sorted
    edges: dict  # frozenset({a, b}) -> frozenset of condition tags

    def components(self) -> list[list]:
        parent = {v: v for v in self.vertices}

        def find(v):
            while parent[v] != v:
                parent[v] = parent[parent[v]]
                v = parent[v]
            return v

        for e in self.edges:
            a, b = tuple(e)
            ra, rb = find(a), find(b)
            if ra != rb:
                parent[ra] = rb
        groups: dict = {}
        for v in self.vertices:
            groups.setdefault(find(v), []).append(v)
        comps = [sorted(c, key=_key) for c in groups.values()]
        comps.sort(key=lambda c: _key(c[0]))
        return comps

    def is_connected(self) -> bool:
        return len(self.components()) <= 1


@dataclass(frozen=True)
class Bipartition:
    part_a: tuple
    part_b: tuple


def find_disconnected_bipartition(gsg: GoodSplitGraph, rng: Optional[random.Random] = None) -> Optional[Bipartition]:
    """Component holding the smallest label against the rest; ``None`` if connected.

    With ``rng`` a random non-empty proper union of components is used instead.
    """
    comps = gsg.components()
    if len(comps) < 2:
        return None
    if rng is None:
        chosen = [0]
    else:
        while True:
            chosen = [i for i in range(len(comps)) if rng.random() < 0.5]
            if 0 < len(chosen) < len(comps):
                break
    a = sorted((v for i in chosen for v in comps[i]), key=_key)
    b = sorted((v for i in range(len(comps)) if i not in chosen for v in comps[i]), key=_key)
    if _key(b[0]) < _key(a[0]):
        a, b = b, a
    return Bipartition(tuple(a), tuple(b))


def _triplet_rows(g: EventLabeledGeneTree, R) -> list[tuple[int, int, int]]:
    k = len(g.species)
    if R is None:
        out = []
        for code in g.triplet_codes.tolist():
            ab, c = divmod(code, k)
            out.append((*divmod(ab, k), c))
        return out
    idx = g.species_index
    return [(idx[a], idx[b], idx[c]) for a, b, c in R]


def good_split_graph(
    g: EventLabeledGeneTree,
    s: RootedTree,
    x: int,
    Q: TopoSort,
    R=None,
    mu_hat=None,
) -> GoodSplitGraph:
    """Evaluate C1-C4 from scratch for every pair of children of cherry ``x``.

    ``R`` defaults to the informative triplets of ``g``; ``mu_hat`` to the LCA-map.
    """
    if not s.children[x] or any(not s.is_leaf(c) for c in s.children[x]):
        raise SolverInputError(f"species vertex {x} is not a cherry")
    if mu_hat is None:
        mu_hat = lca_map(g, s)
    idx = g.species_index
    kids = [idx[s.labels[c]] for c in s.children[x]]
    kid_mask = sum(1 << i for i in kids)
    tags: dict = {}

    def add(a: int, b: int, tag: str):
        tags.setdefault((min(a, b), max(a, b)), set()).add(tag)

    def add_within(mask: int, tag: str):
        for a, b in combinations(bits(mask & kid_mask), 2):
            add(a, b, tag)

    members = Q.member_set
    for a, b, c in _triplet_rows(g, R):
        if kid_mask >> a & 1 and kid_mask >> b & 1 and kid_mask >> c & 1:
            add(a, b, C1)
    t, ev, f = g.tree, g.events, g.forest
    for u in range(len(t)):
        eu = ev[u]
        dup_like = eu is Event.DUP or eu is Event.HGT
        if dup_like and u not in members:
            add_within(f.species_mask[u], C4)
        for v in t.children[u]:
            if ev[v] is not Event.SPEC:
                continue
            if dup_like and u not in members:
                add_within(f.species_mask[v], C2)
            if eu is Event.SPEC and mu_hat[u] == x:
                add_within(f.species_mask[v], C3)
    sp = g.species
    edges = {frozenset((sp[a], sp[b])): frozenset(ts) for (a, b), ts in tags.items()}
    return GoodSplitGraph(x, tuple(sorted((sp[i] for i in kids), key=_key)), edges)


def _ancestors_in(s: RootedTree, x: int, members, n_gene: int) -> bool:
    p = s.parent[x]
    while p is not None:
        if n_gene + p not in members:
            return False
        p = s.parent[p]
    return True


def find_good_split(
    g: EventLabeledGeneTree,
    s: RootedTree,
    Q: TopoSort,
    R=None,
    mu_hat=None,
) -> Optional[tuple[int, Bipartition]]:
    """First non-binary cherry (by id) with all strict ancestors sorted and a disconnected graph."""
    if mu_hat is None:
        mu_hat = lca_map(g, s)
    n_gene = len(g.tree)
    for x in cherries(s):
        if len(s.children[x]) < 3 or not _ancestors_in(s, x, Q.member_set, n_gene):
            continue
        bp = find_disconnected_bipartition(good_split_graph(g, s, x, Q, R, mu_hat))
        if bp is not None:
            return x, bp
    return None


# -- incremental witness sets ----------------------------------------------------


class LSets:
    """Per sibling pair ``{a, b}`` the witnesses for C1 (species) and C2-C4 (gene vertices).

    Pairs are keyed ``a*k + b`` over species indices with ``a < b``.  Pairs stop
    being tracked once they are no longer siblings.
    """

    def __init__(self, k: int):
        self.k = k
        self.l1: dict[int, set] = {}
        self.l2: dict[int, set] = {}
        self.l3: dict[int, set] = {}
        self.l4: dict[int, set] = {}

    def key(self, a: int, b: int) -> int:
        return a * self.k + b if a < b else b * self.k + a

    def edge(self, a: int, b: int) -> bool:
        key = self.key(a, b)
        return bool(self.l1.get(key) or self.l2.get(key) or self.l3.get(key) or self.l4.get(key))

    def tags(self, a: int, b: int) -> set:
        key = self.key(a, b)
        return {tag for tag, l in ((C1, self.l1), (C2, self.l2), (C3, self.l3), (C4, self.l4)) if l.get(key)}

    def _pairs(self, mask: int, groups) -> Iterable[int]:
        """Keys of sibling pairs inside ``mask``; ``groups`` are the sibling masks."""
        for gm in groups:
            inside = mask & gm
            if inside & (inside - 1):
                bs = bits(inside)
                k = self.k
                for i, a in enumerate(bs):
                    base = a * k
                    for b in bs[i + 1:]:
                        yield base + b


def lsets_init(g: EventLabeledGeneTree, s: RootedTree, Q: TopoSort, mu_hat=None, R=None) -> LSets:
    """Build the witness sets for every sibling pair of ``s`` from scratch."""
    if mu_hat is None:
        mu_hat = lca_map(g, s)
    k = len(g.species)
    L = LSets(k)
    idx = g.species_index
    cmask = {x: sum(1 << idx[s.labels[c]] for c in s.children[x]) for x in cherries(s)}
    group = [0] * k
    for m in cmask.values():
        for a in bits(m):
            group[a] = m
    for m in cmask.values():
        bs = bits(m)
        for a, b in combinations(bs, 2):
            key = a * k + b
            L.l1[key] = set()
            L.l2[key] = set()
            L.l3[key] = set()
            L.l4[key] = set()
    for a, b, c in _triplet_rows(g, R):
        gm = group[a]
        if gm and gm >> b & 1 and gm >> c & 1:
            L.l1[a * k + b].add(c)
    groups = list(cmask.values())
    t, ev, f = g.tree, g.events, g.forest
    members = Q.member_set
    for u in range(len(t)):
        eu = ev[u]
        outside = (eu is Event.DUP or eu is Event.HGT) and u not in members
        if outside:
            for key in L._pairs(f.species_mask[u], groups):
                L.l4[key].add(u)
        for v in t.children[u]:
            if ev[v] is not Event.SPEC:
                continue
            if outside:
                for key in L._pairs(f.species_mask[v], groups):
                    L.l2[key].add(u)
            if eu is Event.SPEC and mu_hat[u] in cmask:
                for key in L._pairs(f.species_mask[v], [cmask[mu_hat[u]]]):
                    L.l3[key].add(u)
    return L


def lsets_update_sort(L: LSets, g: EventLabeledGeneTree, entered: Iterable[int], groups) -> None:
    """Drop gene vertices that just entered the topological sort from the C2 and C4 sets."""
    t, ev, f = g.tree, g.events, g.forest
    for q in entered:
        if ev[q] is not Event.DUP and ev[q] is not Event.HGT:
            continue
        for key in L._pairs(f.species_mask[q], groups):
            w = L.l4.get(key)
            if w:
                w.discard(q)
        for v in t.children[q]:
            if ev[v] is Event.SPEC:
                for key in L._pairs(f.species_mask[v], groups):
                    w = L.l2.get(key)
                    if w:
                        w.discard(q)


def lsets_update_split(
    L: LSets,
    g: EventLabeledGeneTree,
    x: int,
    mask1: int,
    mask2: int,
    old_mu_hat,
) -> None:
    """Update after cherry ``x`` was split into children with species masks ``mask1`` / ``mask2``."""
    k = L.k
    b1, b2 = bits(mask1), bits(mask2)
    for a in b1:
        for b in b2:
            key = L.key(a, b)
            for l in (L.l1, L.l2, L.l3, L.l4):
                l.pop(key, None)
    for side, other in ((b1, mask2), (b2, mask1)):
        other_set = set(bits(other))
        for a, b in combinations(side, 2):
            L.l1[a * k + b] -= other_set
    t, ev, f = g.tree, g.events, g.forest
    for u in range(len(t)):
        if old_mu_hat[u] != x or ev[u] is not Event.SPEC:
            continue
        mu = f.species_mask[u]
        if mu & ~mask1 == 0:
            drop_from = [mask2]  # u now maps to the X1 side
        elif mu & ~mask2 == 0:
            drop_from = [mask1]
        else:
            drop_from = [mask1, mask2]
        for v in t.children[u]:
            if ev[v] is Event.SPEC:
                for key in L._pairs(f.species_mask[v], drop_from):
                    w = L.l3.get(key)
                    if w:
                        w.discard(u)


# -- the solver ----------------------------------------------------------------------


@dataclass
class TraceStep:
    cherry: int
    bipartition: Bipartition
    members_before: int
    members_after: Optional[int] = None
    member_set_before: frozenset = field(default_factory=frozenset, repr=False)
    member_set_after: Optional[frozenset] = field(default=None, repr=False)


@dataclass
class SolveTrace:
    steps: list = field(default_factory=list)
    outcome: str = ""  # solution | no_solution
    reason: str = ""


@dataclass
class SolveResult:
    """Outcome of a solve.  ``tree`` is ``None`` when no solution exists.

    On failure ``final_tree`` is the last refined tree and ``blocking_graphs``
    holds the connected good-split graphs of the cherries that were examined.
    """

    tree: Optional[RootedTree]
    trace: SolveTrace
    final_tree: RootedTree
    final_members: int = 0
    blocking_graphs: list = field(default_factory=list)
    debug_checks: int = 0
    debug_mismatches: list = field(default_factory=list)

    @property
    def solved(self) -> bool:
        return self.tree is not None

    def __bool__(self) -> bool:
        return self.solved


def solve(
    g: EventLabeledGeneTree,
    rng: Optional[random.Random] = None,
    debug: bool = False,
    naive: bool = False,
) -> SolveResult:
    """Find a binary time-consistent species tree for ``g``, starting from the star.

    ``rng`` randomises the cherry order and the choice of disconnected
    bipartition; ``debug`` compares the witness sets with a from-scratch
    evaluation at every round; ``naive`` skips the witness sets entirely.
    """
    require_valid(g)
    return _run(g, star_tree(g.species), rng, debug, naive)


def solve_gtc(g: EventLabeledGeneTree, s0: RootedTree, **options) -> Optional[RootedTree]:
    """A binary refinement of ``s0`` that is time-consistent for ``g``, or ``None``."""
    return run_gtc(g, s0, **options).tree


def run_gtc(
    g: EventLabeledGeneTree,
    s0: RootedTree,
    rng: Optional[random.Random] = None,
    debug: bool = False,
    naive: bool = False,
) -> SolveResult:
    """Like :func:`solve_gtc` but returns the full :class:`SolveResult`."""
    require_valid(g)
    try:
        species_leaf_vertices(g, s0)
    except ValueError as exc:
        raise SolverInputError(str(exc)) from None
    if not is_almost_binary(s0):
        raise SolverInputError("start tree is not almost binary")
    if not agrees_with_triplets(g, s0):
        return _fail(s0, SolveTrace(), "start tree conflicts with the informative triplets")
    graph = build_aux_graph(g, s0)
    for a, b, _ in graph.edges:
        if a == b and graph.is_species(a) and s0.is_leaf(a - graph.n_gene):
            return _fail(s0, SolveTrace(), "a species leaf carries a self-loop in the auxiliary graph")
    return _run(g, s0, rng, debug, naive)


def _fail(s, trace, reason, **extra) -> SolveResult:
    trace.outcome, trace.reason = "no_solution", reason
    return SolveResult(None, trace, s, **extra)


def _run(g, s, rng, debug, naive) -> SolveResult:
    nT = len(g.tree)
    trace = SolveTrace()
    leaf_of = species_leaf_vertices(g, s)
    sp_of_vertex = {v: i for i, v in enumerate(leaf_of)}
    lsets: Optional[LSets] = None
    members: frozenset = frozenset()
    debug_checks, mismatches = 0, []
    while True:
        mu_hat = lca_map(g, s)
        graph = build_aux_graph(g, s, mu_hat)
        Q = maximal_topological_sort(graph)
        if trace.steps and trace.steps[-1].members_after is None:
            trace.steps[-1].members_after = len(Q.member_set)
            trace.steps[-1].member_set_after = Q.member_set
        if is_binary(s):
            break
        cmask = {x: sum(1 << sp_of_vertex[c] for c in s.children[x]) for x in cherries(s)}
        groups = list(cmask.values())
        new_members = frozenset(v for v in Q.member_set if v < nT)
        if not naive:
            if lsets is None:
                lsets = lsets_init(g, s, Q, mu_hat)
            else:
                lsets_update_sort(lsets, g, new_members - members, groups)
        members = new_members
        if debug and not naive:
            for x, m in cmask.items():
                ref = good_split_graph(g, s, x, Q, None, mu_hat)
                for a, b in combinations(bits(m), 2):
                    debug_checks += 1
                    want = frozenset((g.species[a], g.species[b])) in ref.edges
                    if lsets.edge(a, b) != want:
                        mismatches.append((len(trace.steps), x, g.species[a], g.species[b], want))
        order = [x for x in sorted(cmask) if len(s.children[x]) >= 3]
        if rng is not None:
            rng.shuffle(order)
        chosen = None
        blocking = []
        for x in order:
            if not _ancestors_in(s, x, Q.member_set, nT):
                continue
            if naive:
                gsg = good_split_graph(g, s, x, Q, None, mu_hat)
            else:
                gsg = _graph_from_lsets(g, lsets, x, cmask[x])
            bp = find_disconnected_bipartition(gsg, rng)
            if bp is not None:
                chosen = (x, bp)
                break
            blocking.append(gsg)
        if chosen is None:
            return _fail(s, trace, "no cherry admits a good split refinement",
                         final_members=len(Q.member_set), blocking_graphs=blocking,
                         debug_checks=debug_checks, debug_mismatches=mismatches)
        x, bp = chosen
        idx = g.species_index
        part_a = {leaf_of[idx[lab]] for lab in bp.part_a}
        part_b = {leaf_of[idx[lab]] for lab in bp.part_b}
        trace.steps.append(TraceStep(x, bp, len(Q.member_set), member_set_before=Q.member_set))
        s = split_refinement(s, x, (part_a, part_b))
        if not naive:
            m1 = sum(1 << idx[lab] for lab in bp.part_a)
            m2 = sum(1 << idx[lab] for lab in bp.part_b)
            lsets_update_split(lsets, g, x, m1, m2, mu_hat)
    extra = dict(final_members=len(Q.member_set), debug_checks=debug_checks, debug_mismatches=mismatches)
    if len(Q.member_set) != graph.n_nodes:
        return _fail(s, trace, "the auxiliary graph of the binary tree has a cycle", **extra)
    if triplet_violations(g, s):
        return _fail(s, trace, "the binary tree misses informative triplets", **extra)
    trace.outcome = "solution"
    return SolveResult(s, trace, s, **extra)


def _graph_from_lsets(g, lsets: LSets, x: int, mask: int) -> GoodSplitGraph:
    sp = g.species
    edges = {}
    for a, b in combinations(bits(mask), 2):
        if lsets.edge(a, b):
            edges[frozenset((sp[a], sp[b]))] = frozenset(lsets.tags(a, b))
    return GoodSplitGraph(x, tuple(sorted((sp[i] for i in bits(mask)), key=_key)), edges)


__all__ = [
    "Bipartition", "GoodSplitGraph", "LSets", "SolveResult", "SolveTrace", "SolverInputError",
    "TraceStep", "find_disconnected_bipartition", "find_good_split", "good_split_graph",
    "lsets_init", "lsets_update_sort", "lsets_update_split", "run_gtc", "solve", "solve_gtc",
]
