"""LCA-map, the auxiliary graph of a gene/species tree pair, and time-consistency.

Auxiliary-graph nodes are integers: gene vertex ``u`` is node ``u`` and species
vertex ``x`` is node ``n_gene + x``.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple, Optional, Sequence

from .genetree import Event, EventLabeledGeneTree, bits
from .tree import RootedTree, Triplet, _key

A1, A2, A3, A4 = "A1", "A2", "A3", "A4"
EDGE_CLASSES = (A1, A2, A3, A4)


class PairError(ValueError):
    """The species tree does not fit the gene tree (leaf-set mismatch)."""


# -- LCA-map ------------------------------------------------------------------


def species_leaf_vertices(g: EventLabeledGeneTree, s: RootedTree) -> list[int]:
    """Species-tree vertex of every species index of ``g``."""
    if s.leaf_labels != frozenset(g.species):
        missing = sorted(set(g.species) - s.leaf_labels, key=_key)
        extra = sorted(s.leaf_labels - set(g.species), key=_key)
        raise PairError(f"species tree leaves do not match the gene tree species "
                        f"(missing {missing}, unexpected {extra})")
    return [s.vertex(sp) for sp in g.species]


def lca_map(g: EventLabeledGeneTree, s: RootedTree) -> tuple[int, ...]:
    """``mu_hat[u]``: species vertex at the lca of the species below ``u`` in its component."""
    leaf_of = species_leaf_vertices(g, s)
    f = g.forest
    mu = [0] * len(g.tree)
    for v in g.tree.postorder:
        ch = f.children[v]
        if not ch:
            mu[v] = leaf_of[g.leaf_species[v]]
        else:
            w = mu[ch[0]]
            for c in ch[1:]:
                w = s.lca2(w, mu[c])
            mu[v] = w
    return tuple(mu)


# -- auxiliary graph ------------------------------------------------------------


class AuxGraph:
    """Directed multigraph on gene and species vertices; every edge carries its class."""

    def __init__(self, n_gene: int, n_species: int, edges: Sequence[tuple[int, int, str]]):
        self.n_gene = n_gene
        self.n_species = n_species
        self.edges = tuple(edges)

    @property
    def n_nodes(self) -> int:
        return self.n_gene + self.n_species

    def species_node(self, x: int) -> int:
        return self.n_gene + x

    def is_species(self, node: int) -> bool:
        return node >= self.n_gene

    @cached_property
    def succ(self) -> list[list[int]]:
        out: list[list[int]] = [[] for _ in range(self.n_nodes)]
        for a, b, _ in self.edges:
            out[a].append(b)
        return out

    @cached_property
    def pred(self) -> list[list[int]]:
        out: list[list[int]] = [[] for _ in range(self.n_nodes)]
        for a, b, _ in self.edges:
            out[b].append(a)
        return out

    def edges_of_class(self, cls: str) -> list[tuple[int, int]]:
        return [(a, b) for a, b, c in self.edges if c == cls]

    def classes_between(self, a: int, b: int) -> list[str]:
        return sorted({c for x, y, c in self.edges if x == a and y == b})


def build_aux_graph(g: EventLabeledGeneTree, s: RootedTree, mu_hat: Optional[Sequence[int]] = None) -> AuxGraph:
    if mu_hat is None:
        mu_hat = lca_map(g, s)
    t, ev = g.tree, g.events
    nT = len(t)
    edges: list[tuple[int, int, str]] = []

    def end(u: int) -> int:
        e = ev[u]
        return nT + mu_hat[u] if (e is Event.SPEC or e is Event.LEAF) else u

    for u in range(nT):
        eu = end(u)
        for v in t.children[u]:
            edges.append((eu, end(v), A1))
    for x in range(len(s)):
        for y in s.children[x]:
            edges.append((nT + x, nT + y, A2))
    for u in range(nT):
        if ev[u] is Event.DUP or ev[u] is Event.HGT:
            edges.append((u, nT + mu_hat[u], A3))
    for u, v in sorted(g.transfer_edges):
        edges.append((nT + s.lca2(mu_hat[u], mu_hat[v]), u, A4))
    return AuxGraph(nT, len(s), edges)


class TopoSort(NamedTuple):
    order: tuple[int, ...]
    member_set: frozenset


def maximal_topological_sort(graph: AuxGraph, priority: Optional[Sequence] = None) -> TopoSort:
    """Peel in-degree-zero nodes until none remain.

    Ties go to the smallest ``(priority[node], node)``; by default the smallest
    node id.  The member set does not depend on the tie-breaking.
    """
    n = graph.n_nodes
    indeg = [0] * n
    for _, b, _ in graph.edges:
        indeg[b] += 1
    succ = graph.succ
    if priority is None:
        heap = [v for v in range(n) if indeg[v] == 0]
        heapq.heapify(heap)
        order = []
        while heap:
            v = heapq.heappop(heap)
            order.append(v)
            for w in succ[v]:
                indeg[w] -= 1
                if indeg[w] == 0:
                    heapq.heappush(heap, w)
    else:
        heap2 = [(priority[v], v) for v in range(n) if indeg[v] == 0]
        heapq.heapify(heap2)
        order = []
        while heap2:
            _, v = heapq.heappop(heap2)
            order.append(v)
            for w in succ[v]:
                indeg[w] -= 1
                if indeg[w] == 0:
                    heapq.heappush(heap2, (priority[w], w))
    return TopoSort(tuple(order), frozenset(order))


def is_acyclic(graph: AuxGraph) -> bool:
    return len(maximal_topological_sort(graph).order) == graph.n_nodes


def find_cycle(graph: AuxGraph, topo: Optional[TopoSort] = None) -> Optional[list[int]]:
    """A directed cycle among the nodes left over by peeling, or ``None``.

    Every leftover node has a leftover in-neighbour, so walking backwards must
    revisit a node.  Returned in forward edge order starting at its smallest node.
    """
    if topo is None:
        topo = maximal_topological_sort(graph)
    if len(topo.member_set) == graph.n_nodes:
        return None
    members = topo.member_set
    start = min(v for v in range(graph.n_nodes) if v not in members)
    seen: dict[int, int] = {}
    path = []
    v = start
    while v not in seen:
        seen[v] = len(path)
        path.append(v)
        v = min(p for p in graph.pred[v] if p not in members)
    cycle = path[seen[v]:]
    cycle.reverse()  # walked against edge direction
    i = cycle.index(min(cycle))
    return cycle[i:] + cycle[:i]


def node_name(g: EventLabeledGeneTree, s: RootedTree, graph: AuxGraph, node: int) -> str:
    if not graph.is_species(node):
        return g.vertex_name(node)
    x = node - graph.n_gene
    return species_vertex_name(s, x)


def species_vertex_name(s: RootedTree, x: int) -> str:
    if s.is_leaf(x):
        return str(s.labels[x])
    labs = sorted((s.labels[l] for l in s.leaves_below[x]), key=_key)
    return "{" + ",".join(map(str, labs)) + "}"


# -- pair check -------------------------------------------------------------------


def triplet_violations(g: EventLabeledGeneTree, s: RootedTree) -> list[Triplet]:
    """Informative triplets not displayed by ``s``."""
    leaf_of = species_leaf_vertices(g, s)
    k = len(g.species)
    sp = g.species
    depth = s.depth
    out = []
    for code in g.triplet_codes.tolist():
        ab, c = divmod(code, k)
        a, b = divmod(ab, k)
        va, vb, vc = leaf_of[a], leaf_of[b], leaf_of[c]
        if not depth[s.lca2(va, vb)] > depth[s.lca2(va, vc)]:
            out.append(Triplet(sp[a], sp[b], sp[c]))
    return out


def agrees_with_triplets(g: EventLabeledGeneTree, s: RootedTree) -> bool:
    """``s`` displays neither alternative of any informative triplet."""
    leaf_of = species_leaf_vertices(g, s)
    k = len(g.species)
    depth = s.depth
    for code in g.triplet_codes.tolist():
        ab, c = divmod(code, k)
        a, b = divmod(ab, k)
        va, vb, vc = leaf_of[a], leaf_of[b], leaf_of[c]
        dab = depth[s.lca2(va, vb)]
        if depth[s.lca2(va, vc)] > dab or depth[s.lca2(vb, vc)] > dab:
            return False
    return True


@dataclass(frozen=True)
class PairVerdict:
    kind: str  # consistent | missing_triplets | cyclic
    missing: tuple[Triplet, ...] = ()
    cycle: Optional[tuple[int, ...]] = None
    cycle_names: Optional[tuple[str, ...]] = None

    @property
    def consistent(self) -> bool:
        return self.kind == "consistent"


def check_pair(g: EventLabeledGeneTree, s: RootedTree) -> PairVerdict:
    """Decide whether ``s`` is a time-consistent species tree for ``g``.

    The tree must display every informative triplet and the auxiliary graph must
    be acyclic.  Missing triplets take precedence in ``kind``; a cycle found at
    the same time is still reported.
    """
    missing = tuple(triplet_violations(g, s))
    graph = build_aux_graph(g, s)
    cycle = find_cycle(graph)
    names = tuple(node_name(g, s, graph, v) for v in cycle) if cycle else None
    if missing:
        kind = "missing_triplets"
    elif cycle:
        kind = "cyclic"
    else:
        kind = "consistent"
    return PairVerdict(kind, missing, tuple(cycle) if cycle else None, names)


# -- reconciliation ---------------------------------------------------------------


class Place(NamedTuple):
    """A species vertex (``edge=False``) or the edge above species vertex ``node``."""

    node: int
    edge: bool

    def describe(self, s: RootedTree) -> str:
        if not self.edge:
            return species_vertex_name(s, self.node)
        p = s.parent[self.node]
        top = "planted root" if p is None else species_vertex_name(s, p)
        return f"({top}, {species_vertex_name(s, self.node)})"


def place_leq(s: RootedTree, p: Place, q: Place) -> bool:
    """Partial order on species vertices and edges (below-or-equal)."""
    if p.edge == q.edge or (not p.edge and q.edge):
        return s.is_ancestor(q.node, p.node)
    # edge below vertex: the vertex is a strict ancestor of the edge's lower end
    return p.node != q.node and s.is_ancestor(q.node, p.node)


def place_lt(s: RootedTree, p: Place, q: Place) -> bool:
    return p != q and place_leq(s, p, q)


def comparable(s: RootedTree, p: Place, q: Place) -> bool:
    return place_leq(s, p, q) or place_leq(s, q, p)


@dataclass(frozen=True)
class Reconciliation:
    """A reconciliation map with its time maps.

    Times increase away from the root.  The edge above the species root hangs
    from a planted root at time ``planted_time``.
    """

    mu: tuple[Place, ...]
    tau_gene: tuple[int, ...]
    tau_species: tuple[int, ...]
    planted_time: int


@dataclass(frozen=True)
class ClauseFailure:
    clause: str
    witness: tuple
    detail: str


@dataclass(frozen=True)
class ReconciliationReport:
    failures: tuple[ClauseFailure, ...]

    @property
    def ok(self) -> bool:
        return not self.failures

    def clauses(self) -> set:
        return {f.clause for f in self.failures}


def build_reconciliation(g: EventLabeledGeneTree, s: RootedTree) -> Reconciliation:
    """Construct a time-consistent reconciliation; the pair must be consistent.

    Duplications and transfers go onto the edge above their LCA-map image when
    a common order of the auxiliary graph allows it; otherwise each is lifted to
    the edge of its image's root path that brackets its position in one order.
    """
    verdict = check_pair(g, s)
    if not verdict.consistent:
        raise ValueError(f"pair is not time-consistent ({verdict.kind})")
    mu_hat = lca_map(g, s)
    graph = build_aux_graph(g, s, mu_hat)
    nT = graph.n_gene
    ev = g.events
    dt = [u for u in range(nT) if ev[u] is Event.DUP or ev[u] is Event.HGT]
    bounds = [
        (nT + s.parent[mu_hat[u]], u, "bound")
        for u in dt
        if s.parent[mu_hat[u]] is not None
    ]
    tight = AuxGraph(nT, len(s), graph.edges + tuple(bounds))
    topo = maximal_topological_sort(tight)
    if len(topo.order) != tight.n_nodes:
        # species vertices first keeps each event as low as the order allows
        prio = [1] * nT + [0] * len(s)
        topo = maximal_topological_sort(graph, prio)
    pos = [0] * graph.n_nodes
    for i, v in enumerate(topo.order):
        pos[v] = i + 1
    tau_s = tuple(pos[nT + x] for x in range(len(s)))
    mu: list[Place] = []
    tau_t: list[int] = []
    for u in range(nT):
        if ev[u] is Event.LEAF or ev[u] is Event.SPEC:
            mu.append(Place(mu_hat[u], False))
            tau_t.append(tau_s[mu_hat[u]])
            continue
        y = mu_hat[u]
        while s.parent[y] is not None and tau_s[s.parent[y]] > pos[u]:
            y = s.parent[y]
        mu.append(Place(y, True))
        tau_t.append(pos[u])
    r = Reconciliation(tuple(mu), tuple(tau_t), tau_s, 0)
    report = verify_reconciliation(g, s, r)
    if not report.ok:
        raise RuntimeError(f"constructed reconciliation failed verification: {report.failures[:3]}")
    return r


def verify_reconciliation(g: EventLabeledGeneTree, s: RootedTree, r: Reconciliation) -> ReconciliationReport:
    """Check the reconciliation clauses M1-M3 and the time constraints B1-B2."""
    t, ev, f = g.tree, g.events, g.forest
    fails: list[ClauseFailure] = []
    nT = len(t)
    try:
        leaf_of = species_leaf_vertices(g, s)
    except PairError as exc:
        return ReconciliationReport((ClauseFailure("input", (), str(exc)),))
    if len(r.mu) != nT or len(r.tau_gene) != nT or len(r.tau_species) != len(s):
        return ReconciliationReport((ClauseFailure("input", (), "map sizes do not match the trees"),))
    mu = r.mu
    name = g.vertex_name

    def where(p: Place) -> str:
        return p.describe(s)

    for u in range(nT):
        p = mu[u]
        if not 0 <= p.node < len(s):
            fails.append(ClauseFailure("input", (u,), f"{name(u)} maps outside the species tree"))
            return ReconciliationReport(tuple(fails))
    # M1, M2
    for u in range(nT):
        p, e = mu[u], ev[u]
        if e is Event.LEAF:
            want = Place(leaf_of[g.leaf_species[u]], False)
            if p != want:
                fails.append(ClauseFailure("M1", (u,), f"leaf {name(u)} maps to {where(p)}, not its species"))
        elif e is Event.SPEC:
            want = Place(s.lca(leaf_of[i] for i in bits(f.species_mask[u])), False)
            if p != want:
                fails.append(ClauseFailure("M2.i", (u,), f"speciation {name(u)} maps to {where(p)}, "
                                                         f"expected {where(want)}"))
            ch = t.children[u]
            for i in range(len(ch)):
                for j in range(i + 1, len(ch)):
                    if comparable(s, mu[ch[i]], mu[ch[j]]):
                        fails.append(ClauseFailure("M2.iv", (u, ch[i], ch[j]),
                                                   f"children {name(ch[i])} and {name(ch[j])} of "
                                                   f"{name(u)} map to comparable places"))
        elif not p.edge:
            fails.append(ClauseFailure("M2.ii", (u,), f"{e.name.lower()} {name(u)} maps to vertex {where(p)}"))
    for u, v in sorted(g.transfer_edges):
        if comparable(s, mu[u], mu[v]):
            fails.append(ClauseFailure("M2.iii", (u, v), f"transfer {name(u)}->{name(v)} endpoints map "
                                                         f"to comparable places"))
    # M3 over all ancestor pairs inside a transfer-forest component
    for x in range(nT):
        y = t.parent[x]
        child = x
        while y is not None and (y, child) not in g.transfer_edges:
            both_events = ev[x] in (Event.DUP, Event.HGT) and ev[y] in (Event.DUP, Event.HGT)
            if both_events:
                if not place_leq(s, mu[x], mu[y]):
                    fails.append(ClauseFailure("M3.i", (x, y), f"{name(x)} below {name(y)} but "
                                                               f"{where(mu[x])} is not below {where(mu[y])}"))
            elif not place_lt(s, mu[x], mu[y]):
                fails.append(ClauseFailure("M3.ii", (x, y), f"{name(x)} below {name(y)} but "
                                                            f"{where(mu[x])} is not strictly below {where(mu[y])}"))
            child, y = y, t.parent[y]
    # time maps
    tg, ts = r.tau_gene, r.tau_species
    for u in range(nT):
        for v in t.children[u]:
            if not tg[v] > tg[u]:
                fails.append(ClauseFailure("time-map-T", (u, v), f"{name(v)} is not later than its parent {name(u)}"))
    for x in range(len(s)):
        for y in s.children[x]:
            if not ts[y] > ts[x]:
                fails.append(ClauseFailure("time-map-S", (x, y), f"species {species_vertex_name(s, y)} "
                                                                 f"is not later than its parent"))
        if s.parent[x] is None and not ts[x] > r.planted_time:
            fails.append(ClauseFailure("time-map-S", (x,), "species root is not later than the planted root"))
    for u in range(nT):
        p = mu[u]
        if ev[u] in (Event.LEAF, Event.SPEC):
            if not p.edge and tg[u] != ts[p.node]:
                fails.append(ClauseFailure("B1", (u,), f"{name(u)} time {tg[u]} differs from "
                                                       f"{where(p)} time {ts[p.node]}"))
        elif p.edge:
            top = s.parent[p.node]
            lo = r.planted_time if top is None else ts[top]
            if not ts[p.node] > tg[u] > lo:
                fails.append(ClauseFailure("B2", (u,), f"{name(u)} time {tg[u]} outside the open interval "
                                                       f"({lo}, {ts[p.node]}) of edge {where(p)}"))
    return ReconciliationReport(tuple(fails))


def time_consistent(g: EventLabeledGeneTree, s: RootedTree) -> bool:
    return check_pair(g, s).consistent


__all__ = [
    "A1", "A2", "A3", "A4", "AuxGraph", "ClauseFailure", "PairError", "PairVerdict", "Place",
    "Reconciliation", "ReconciliationReport", "TopoSort", "agrees_with_triplets", "build_aux_graph",
    "build_reconciliation", "check_pair", "find_cycle", "is_acyclic", "lca_map",
    "maximal_topological_sort", "node_name", "verify_reconciliation",
]
