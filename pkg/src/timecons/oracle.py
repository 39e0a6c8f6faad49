"""Ground truth for small instances, plus a random instance generator.

Everything in the brute-force path is written directly from the definitions
and shares no code with the solver beyond tree construction.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Iterator, Optional

from .genetree import Event, EventLabeledGeneTree, validate_axioms
from .tree import RootedTree, Triplet, TripletSet, _key, from_nested, triplet

DEFAULT_LIMIT = 8


class OracleLimitError(ValueError):
    pass


class InstanceGenError(ValueError):
    pass


def double_factorial(m: int) -> int:
    return math.prod(range(m, 0, -2)) if m > 0 else 1


# -- enumeration -----------------------------------------------------------------


def _insertions(t, leaf) -> Iterator:
    yield (t, leaf)
    if isinstance(t, tuple):
        left, right = t
        for sub in _insertions(left, leaf):
            yield (sub, right)
        for sub in _insertions(right, leaf):
            yield (left, sub)


def _nested_binary(labels: list) -> Iterator:
    if len(labels) == 1:
        yield labels[0]
        return
    for t in _nested_binary(labels[:-1]):
        yield from _insertions(t, labels[-1])


def enumerate_binary_species_trees(species: Iterable, limit: int = DEFAULT_LIMIT) -> Iterator[RootedTree]:
    """Every rooted binary tree on ``species`` exactly once, by leaf insertion."""
    labels = sorted(set(species), key=_key)
    if not labels:
        raise ValueError("need at least one species")
    if len(labels) > limit:
        raise OracleLimitError(f"{len(labels)} species exceeds the enumeration limit {limit}")
    for nested in _nested_binary(labels):
        yield from_nested(nested)


# -- naive definitions ---------------------------------------------------------------


def _forest_parent(g: EventLabeledGeneTree) -> list:
    t = g.tree
    return [
        None if p is None or (p, v) in g.transfer_edges else p
        for v, p in enumerate(t.parent)
    ]


def _forest_leaves(g: EventLabeledGeneTree) -> list[set]:
    par = _forest_parent(g)
    below: list[set] = [set() for _ in range(len(g.tree))]
    for leaf in g.tree.leaves:
        v = leaf
        while v is not None:
            below[v].add(leaf)
            v = par[v]
    return below


def _path_to_root(par, v) -> list:
    out = []
    while v is not None:
        out.append(v)
        v = par[v]
    return out


def naive_informative_triplets(g: EventLabeledGeneTree) -> TripletSet:
    """Informative triplets by enumerating leaf triples and transfer-edge combinations."""
    par = _forest_parent(g)
    sig = {v: g.sigma[g.tree.labels[v]] for v in g.tree.leaves}
    paths = {v: _path_to_root(par, v) for v in g.tree.leaves}
    out = set()

    def lca(a, b):
        on_a = set(paths[a])
        for w in paths[b]:
            if w in on_a:
                return w
        return None

    def height(w):
        return len(_path_to_root(par, w))

    for a, b, c in combinations(g.tree.leaves, 3):
        if len({sig[a], sig[b], sig[c]}) < 3:
            continue
        ab, ac, bc = lca(a, b), lca(a, c), lca(b, c)
        if ab is None or ac is None or bc is None:
            continue  # not all in one component
        for (x, y, z), inner, outer, other in (
            ((a, b, c), ab, ac, bc),
            ((a, c, b), ac, ab, bc),
            ((b, c, a), bc, ab, ac),
        ):
            if inner != outer and outer == other and height(inner) > height(outer):
                if g.events[outer] is Event.SPEC:
                    out.add(triplet(sig[x], sig[y], sig[z]))
    below = _forest_leaves(g)
    for u, v in g.transfer_edges:
        for one, other in ((below[u], below[v]), (below[v], below[u])):
            for a, b in combinations(sorted(one), 2):
                for c in other:
                    if len({sig[a], sig[b], sig[c]}) == 3:
                        out.add(triplet(sig[a], sig[b], sig[c]))
    return TripletSet(out)


def naive_displays(s: RootedTree, t: Triplet) -> bool:
    a, b, c = (s.vertex(x) for x in t)
    pa, pb, pc = (_path_to_root(s.parent, v) for v in (a, b, c))

    def lca(p, q):
        sq = set(q)
        return next(w for w in p if w in sq)

    ab, ac, bc = lca(pa, pb), lca(pa, pc), lca(pb, pc)
    return ac == bc and ab != ac and ac in _path_to_root(s.parent, ab)


def naive_aux_edges(g: EventLabeledGeneTree, s: RootedTree) -> list[tuple]:
    """Auxiliary-graph edges on tagged nodes ``("T", u)`` / ``("S", x)``."""
    below = _forest_leaves(g)
    t, ev = g.tree, g.events
    leaf_of = {s.labels[v]: v for v in s.leaves}
    spaths = {v: _path_to_root(s.parent, v) for v in range(len(s))}

    def s_lca(xs):
        xs = list(xs)
        common = set(spaths[xs[0]])
        for x in xs[1:]:
            common &= set(spaths[x])
        return next(w for w in spaths[xs[0]] if w in common)

    mu = [s_lca({leaf_of[g.sigma[t.labels[l]]] for l in below[u]}) for u in range(len(t))]

    def end(u):
        return ("S", mu[u]) if ev[u] in (Event.SPEC, Event.LEAF) else ("T", u)

    edges = []
    for u in range(len(t)):
        for v in t.children[u]:
            edges.append((end(u), end(v)))
    for x in range(len(s)):
        for y in s.children[x]:
            edges.append((("S", x), ("S", y)))
    for u in range(len(t)):
        if ev[u] in (Event.DUP, Event.HGT):
            edges.append((("T", u), ("S", mu[u])))
    for u, v in g.transfer_edges:
        edges.append((("S", s_lca([mu[u], mu[v]])), ("T", u)))
    return edges


def has_cycle(edges: list[tuple]) -> bool:
    """Three-colour depth-first search."""
    succ: dict = {}
    for a, b in edges:
        succ.setdefault(a, []).append(b)
        succ.setdefault(b, [])
    colour = dict.fromkeys(succ, 0)
    for root in succ:
        if colour[root]:
            continue
        colour[root] = 1
        stack = [(root, iter(succ[root]))]
        while stack:
            v, it = stack[-1]
            for w in it:
                if colour[w] == 1:
                    return True
                if colour[w] == 0:
                    colour[w] = 1
                    stack.append((w, iter(succ[w])))
                    break
            else:
                colour[v] = 2
                stack.pop()
    return False


def naive_time_consistent(g: EventLabeledGeneTree, s: RootedTree, R: Optional[TripletSet] = None) -> bool:
    if R is None:
        R = naive_informative_triplets(g)
    return all(naive_displays(s, r) for r in R) and not has_cycle(naive_aux_edges(g, s))


# -- brute force ------------------------------------------------------------------------


def _pruned_binary(labels: list, R: TripletSet) -> Iterator:
    """Binary trees by leaf insertion, dropping partial trees that miss a triplet."""
    pos = {lab: i for i, lab in enumerate(labels)}
    by_last: dict[int, list] = {}
    for r in R:
        by_last.setdefault(max(pos[r.a], pos[r.b], pos[r.c]), []).append(r)

    def rec(t, i):
        if i == len(labels):
            yield t
            return
        for cand in ([labels[0]] if i == 0 else _insertions(t, labels[i])):
            checks = by_last.get(i, ())
            if checks:
                tree = from_nested(cand)
                if not all(naive_displays(tree, r) for r in checks):
                    continue
            yield from rec(cand, i + 1)

    yield from rec(None, 0)


def brute_force_solve(g: EventLabeledGeneTree, limit: int = DEFAULT_LIMIT) -> Optional[RootedTree]:
    """First enumerated binary species tree that is time-consistent for ``g``."""
    labels = sorted(set(g.sigma.values()), key=_key)
    if len(labels) > limit:
        raise OracleLimitError(f"{len(labels)} species exceeds the enumeration limit {limit}")
    R = naive_informative_triplets(g)
    for nested in _pruned_binary(labels, R):
        s = from_nested(nested)
        if not has_cycle(naive_aux_edges(g, s)):
            return s
    return None


def brute_force_all(g: EventLabeledGeneTree, limit: int = DEFAULT_LIMIT) -> list[RootedTree]:
    labels = sorted(set(g.sigma.values()), key=_key)
    if len(labels) > limit:
        raise OracleLimitError(f"{len(labels)} species exceeds the enumeration limit {limit}")
    R = naive_informative_triplets(g)
    return [from_nested(n) for n in _pruned_binary(labels, R) if not has_cycle(naive_aux_edges(g, from_nested(n)))]


# -- BUILD -------------------------------------------------------------------------------


def aho_build(R: Iterable, leaves: Iterable) -> Optional[RootedTree]:
    """A tree displaying every triplet of ``R``, or ``None`` if ``R`` is incompatible."""
    R = [triplet(*r) for r in R]
    leaves = sorted(set(leaves), key=_key)
    if not leaves:
        raise ValueError("need at least one leaf")

    def build(L: list):
        if len(L) == 1:
            return L[0]
        Ls = set(L)
        parent = {x: x for x in L}

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for a, b, c in R:
            if a in Ls and b in Ls and c in Ls:
                parent[find(a)] = find(b)
        groups: dict = {}
        for x in L:
            groups.setdefault(find(x), []).append(x)
        if len(groups) == 1:
            return None
        subs = []
        for grp in sorted(groups.values(), key=lambda grp: _key(grp[0])):
            sub = build(grp)
            if sub is None:
                return None
            subs.append(sub)
        return tuple(subs)

    nested = build(leaves)
    if nested is None:
        return None
    return from_nested(nested)


# -- instance generator ------------------------------------------------------------------


@dataclass(frozen=True)
class InstanceGenConfig:
    """Knobs for :func:`generate_instance`; rates are per unit of species-tree height."""

    species_count: int
    gene_count_hint: int
    dup_rate: float = 0.0
    hgt_rate: float = 0.0
    loss_rate: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.species_count < 1:
            raise InstanceGenError("species_count must be positive")
        if self.gene_count_hint < 1:
            raise InstanceGenError("gene_count_hint must be positive")
        for name in ("dup_rate", "hgt_rate", "loss_rate"):
            r = getattr(self, name)
            if not 0.0 <= r <= 1.0:
                raise InstanceGenError(f"{name} must lie in [0, 1], got {r}")


# events per unit height at rate 1.0
RATE_SCALE = 4.0
MAX_ATTEMPTS = 200


def species_labels(k: int) -> list[str]:
    if k <= 26:
        return [chr(ord("A") + i) for i in range(k)]
    width = len(str(k))
    return [f"S{i + 1:0{width}d}" for i in range(k)]


@dataclass
class _SpeciesEdge:
    start: float
    end: float
    children: list
    label: Optional[str] = None


def _random_species_tree(k: int, rng: random.Random) -> list[_SpeciesEdge]:
    """Yule-style tree; edge 0 is the planted edge above the root.  Heights scaled to 1."""
    edges = [_SpeciesEdge(0.0, math.inf, [])]
    alive = [0]
    now = rng.expovariate(1.0) * 0.2
    while len(alive) < k:
        i = alive.pop(rng.randrange(len(alive)))
        edges[i].end = now
        for _ in range(2):
            edges.append(_SpeciesEdge(now, math.inf, []))
            edges[i].children.append(len(edges) - 1)
            alive.append(len(edges) - 1)
        now += rng.expovariate(len(alive))
    if k == 1:
        now = 1.0
    height = now + rng.expovariate(1.0) * 0.2 if k > 1 else now
    for i in alive:
        edges[i].end = height
    for e in edges:
        e.start /= height
        e.end /= height
    labels = species_labels(k)
    rng.shuffle(labels)
    for i, lab in zip(alive, labels):
        edges[i].label = lab
    return edges


@dataclass
class _GNode:
    event: Event
    species: Optional[str] = None
    children: list = None  # (child index, is_transfer)

    def __post_init__(self):
        if self.children is None:
            self.children = []


def _simulate(cfg: InstanceGenConfig, rng: random.Random, cap: int):
    sp = _random_species_tree(cfg.species_count, rng)
    nodes: list[_GNode] = []
    total = (cfg.dup_rate + cfg.hgt_rate + cfg.loss_rate) * RATE_SCALE
    # stack of (parent node, is_transfer, species edge, time)
    root_holder = _GNode(Event.DUP)
    stack = [(root_holder, False, 0, 0.0)]
    n_leaves = 0
    while stack:
        parent, tr, e, now = stack.pop()
        edge = sp[e]
        wait = rng.expovariate(total) if total > 0 else math.inf
        if now + wait < edge.end:
            now += wait
            pick = rng.random() * total
            if pick < cfg.loss_rate * RATE_SCALE:
                nodes.append(_GNode(Event.LEAF, species=None))  # lost lineage
                parent.children.append((len(nodes) - 1, tr))
                continue
            if pick < (cfg.loss_rate + cfg.hgt_rate) * RATE_SCALE:
                targets = [j for j, o in enumerate(sp) if j != e and o.start < now < o.end]
                if targets:
                    node = _GNode(Event.HGT)
                    nodes.append(node)
                    parent.children.append((len(nodes) - 1, tr))
                    stack.append((node, False, e, now))
                    stack.append((node, True, rng.choice(targets), now))
                    continue
            node = _GNode(Event.DUP)
            nodes.append(node)
            parent.children.append((len(nodes) - 1, tr))
            stack.append((node, False, e, now))
            stack.append((node, False, e, now))
            continue
        if edge.children:
            node = _GNode(Event.SPEC)
            nodes.append(node)
            parent.children.append((len(nodes) - 1, tr))
            for c in edge.children:
                stack.append((node, False, c, edge.end))
        else:
            n_leaves += 1
            if n_leaves > cap:
                return None
            nodes.append(_GNode(Event.LEAF, species=edge.label))
            parent.children.append((len(nodes) - 1, tr))
    return nodes, root_holder.children[0][0]


def _prune(nodes: list[_GNode], root: int):
    """Drop lost lineages and suppress unary vertices.  Returns a nested structure or None."""

    def rec(v):
        nd = nodes[v]
        if nd.event is Event.LEAF:
            return None if nd.species is None else ("leaf", nd.species)
        kept = []
        for c, tr in nd.children:
            sub = rec(c)
            if sub is not None:
                kept.append((sub, tr))
        if not kept:
            return None
        if len(kept) == 1:
            return kept[0][0]  # suppressed: the incoming edge keeps its own flag
        return ("node", nd.event, kept)

    return rec(root)


def _to_gene_tree(nested) -> tuple:
    children, labels, events, names, transfer, sigma = [], [], [], [], [], {}
    stack = [(nested, None, False)]
    counter = 0
    while stack:
        nd, parent, tr = stack.pop()
        v = len(children)
        children.append([])
        names.append(None)
        if parent is not None:
            children[parent].append(v)
            if tr:
                transfer.append((parent, v))
        if nd[0] == "leaf":
            counter += 1
            gene = f"g{counter}"
            labels.append(gene)
            events.append(Event.LEAF)
            sigma[gene] = nd[1]
        else:
            labels.append(None)
            events.append(nd[1])
            for sub, sub_tr in reversed(nd[2]):
                stack.append((sub, v, sub_tr))
    return children, labels, events, transfer, sigma


def _repair(children, events, transfer: set, sigma, labels) -> None:
    """Relabel until the axioms hold; each pass only removes transfers or speciations."""
    while True:
        g = EventLabeledGeneTree(RootedTree(children, labels), events, transfer, sigma)
        report = validate_axioms(g)
        if report.ok:
            return
        for viol in report.violations:
            if viol.axiom == "O2":
                v = viol.where
                events[v] = Event.DUP
                for c in children[v]:
                    transfer.discard((v, c))
            elif viol.axiom == "O3a":
                events[viol.where] = Event.DUP
            elif viol.axiom == "O3b":
                transfer.discard(viol.where)
            else:
                raise AssertionError(f"generator produced {viol.axiom}")
        # a transfer vertex left without transfer edges is caught as O2 next pass
        for v, e in enumerate(events):
            if e is Event.HGT and not any((v, c) in transfer for c in children[v]):
                events[v] = Event.DUP


def generate_instance(cfg: InstanceGenConfig) -> EventLabeledGeneTree:
    """Random gene tree that satisfies the observability axioms.

    ``gene_count_hint`` caps the number of gene leaves; attempts that exceed it
    or lose every gene are retried with derived seeds.
    """
    for attempt in range(MAX_ATTEMPTS):
        rng = random.Random(f"{cfg.seed}:{attempt}")
        sim = _simulate(cfg, rng, cfg.gene_count_hint)
        if sim is None:
            continue
        nested = _prune(*sim)
        if nested is None:
            continue
        if nested[0] == "leaf":
            if cfg.species_count == 1 or cfg.gene_count_hint == 1:
                children, labels, events, transfer, sigma = [[]], ["g1"], [Event.LEAF], [], {"g1": nested[1]}
                return EventLabeledGeneTree(RootedTree(children, labels), events, transfer, sigma)
            continue
        children, labels, events, transfer, sigma = _to_gene_tree(nested)
        transfer = set(transfer)
        _repair(children, events, transfer, sigma, labels)
        return EventLabeledGeneTree(RootedTree(children, labels), events, transfer, sigma)
    raise InstanceGenError(f"no instance within {MAX_ATTEMPTS} attempts for {cfg}")


__all__ = [
    "DEFAULT_LIMIT", "InstanceGenConfig", "InstanceGenError", "OracleLimitError", "aho_build",
    "brute_force_all", "brute_force_solve", "double_factorial", "enumerate_binary_species_trees",
    "generate_instance", "has_cycle", "naive_aux_edges", "naive_displays", "naive_informative_triplets",
    "naive_time_consistent", "species_labels",
]
