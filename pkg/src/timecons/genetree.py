"""Event-labeled gene trees: axioms, the transfer forest and informative triplets."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from itertools import combinations
from typing import Iterable, Mapping, Optional

import numpy as np

from . import kernels
from .tree import Label, RootedTree, TreeError, Triplet, TripletSet, _key


class GeneTreeError(TreeError):
    """Structurally invalid gene tree (bad labels, edges or species map)."""


class Event(str, Enum):
    LEAF = "leaf"
    SPEC = "s"
    DUP = "d"
    HGT = "t"

    def __str__(self) -> str:
        return self.value


class EventLabeledGeneTree:
    """A gene tree with event labels, transfer edges and a gene -> species map.

    ``events[v]`` is the :class:`Event` of vertex ``v``; ``transfer_edges`` holds
    ``(parent, child)`` vertex pairs; ``sigma`` maps gene (leaf) labels to species
    labels.  ``names`` optionally names internal vertices for reports.
    """

    def __init__(
        self,
        tree: RootedTree,
        events: Iterable,
        transfer_edges: Iterable[tuple[int, int]],
        sigma: Mapping[Label, Label],
        names: Optional[Iterable[Optional[str]]] = None,
    ):
        events = tuple(Event(e) for e in events)
        if len(events) != len(tree):
            raise GeneTreeError("one event label per vertex is required")
        for v in range(len(tree)):
            if (events[v] is Event.LEAF) != tree.is_leaf(v):
                raise GeneTreeError(f"vertex {v}: leaf event iff the vertex is a leaf")
        try:
            tree.label_index
        except TreeError as exc:
            raise GeneTreeError(str(exc)) from None
        transfer = frozenset((int(u), int(v)) for u, v in transfer_edges)
        for u, v in transfer:
            if not (0 <= v < len(tree)) or tree.parent[v] != u:
                raise GeneTreeError(f"transfer edge ({u}, {v}) is not an edge of the tree")
            if events[u] is not Event.HGT:
                raise GeneTreeError(f"transfer edge ({u}, {v}) leaves a non-transfer vertex")
        sig = {}
        for v in tree.leaves:
            lab = tree.labels[v]
            if lab not in sigma:
                raise GeneTreeError(f"gene {lab!r} has no species")
            sig[lab] = sigma[lab]
        self.tree = tree
        self.events = events
        self.transfer_edges = transfer
        self.sigma = sig
        self.names = tuple(names) if names is not None else (None,) * len(tree)
        if len(self.names) != len(tree):
            raise GeneTreeError("one name slot per vertex is required")

    def __len__(self) -> int:
        return len(self.tree)

    def __repr__(self) -> str:
        from .newick import emit_gene_tree

        return f"EventLabeledGeneTree({emit_gene_tree(self)!r})"

    def vertex_name(self, v: int) -> str:
        if self.tree.is_leaf(v):
            return str(self.tree.labels[v])
        return self.names[v] if self.names[v] else f"#{v}"

    def is_transfer(self, u: int, v: int) -> bool:
        return (u, v) in self.transfer_edges

    @cached_property
    def species(self) -> tuple:
        """Observed species, sorted; species index ``i`` is ``species[i]``."""
        return tuple(sorted(set(self.sigma.values()), key=_key))

    @cached_property
    def species_index(self) -> dict:
        return {s: i for i, s in enumerate(self.species)}

    @cached_property
    def leaf_species(self) -> tuple[int, ...]:
        """Species index of every leaf vertex, -1 for internal vertices."""
        idx = self.species_index
        return tuple(
            idx[self.sigma[self.tree.labels[v]]] if self.tree.is_leaf(v) else -1
            for v in range(len(self.tree))
        )

    def species_of_mask(self, mask: int) -> frozenset:
        return frozenset(self.species[i] for i in _bits(mask))

    @cached_property
    def forest(self) -> "TransferForest":
        return transfer_forest(self)

    @cached_property
    def triplet_codes(self) -> np.ndarray:
        """Sorted ``(a*k + b)*k + c`` codes of the informative triplets over species indices."""
        return _compute_triplet_codes(self)


def _bits(mask: int):
    i = 0
    while mask:
        if mask & 1:
            yield i
        mask >>= 1
        i += 1


def bits(mask: int) -> list[int]:
    return list(_bits(mask))


@dataclass(frozen=True)
class TransferForest:
    """The gene tree with its transfer edges removed.

    All per-vertex data refers to the vertex's own component: ``leaves_below[x]``
    are the leaves reachable from ``x`` without crossing a transfer edge and
    ``species_below[x]`` their species.  ``species_mask`` is the same set as a
    bitmask over species indices.
    """

    component: tuple[int, ...]
    comp_root: tuple[int, ...]
    children: tuple[tuple[int, ...], ...]
    leaves_below: tuple[frozenset, ...]
    species_below: tuple[frozenset, ...]
    species_mask: tuple[int, ...]
    depth: tuple[int, ...] = field(repr=False)

    @property
    def n_components(self) -> int:
        return len(self.comp_root)

    def component_leaves(self, c: int) -> frozenset:
        return self.leaves_below[self.comp_root[c]]


def transfer_forest(g: EventLabeledGeneTree) -> TransferForest:
    t = g.tree
    n = len(t)
    fchildren = tuple(
        tuple(c for c in t.children[v] if (v, c) not in g.transfer_edges) for v in range(n)
    )
    component = [-1] * n
    depth = [0] * n
    comp_root = []
    for v in t.preorder:
        p = t.parent[v]
        if p is None or (p, v) in g.transfer_edges:
            component[v] = len(comp_root)
            comp_root.append(v)
        else:
            component[v] = component[p]
            depth[v] = depth[p] + 1
    leaves: list = [None] * n
    masks = [0] * n
    for v in t.postorder:
        if t.is_leaf(v):
            leaves[v] = frozenset((v,))
            masks[v] = 1 << g.leaf_species[v]
        else:
            leaves[v] = frozenset().union(*(leaves[c] for c in fchildren[v]))
            m = 0
            for c in fchildren[v]:
                m |= masks[c]
            masks[v] = m
    return TransferForest(
        component=tuple(component),
        comp_root=tuple(comp_root),
        children=fchildren,
        leaves_below=tuple(leaves),
        species_below=tuple(g.species_of_mask(m) for m in masks),
        species_mask=tuple(masks),
        depth=tuple(depth),
    )


# -- axioms ----------------------------------------------------------------


@dataclass(frozen=True)
class Violation:
    axiom: str  # O1, O2, O3a, O3b
    where: object  # vertex id or (u, v) edge
    detail: str


@dataclass(frozen=True)
class AxiomReport:
    violations: tuple[Violation, ...]

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok


class AxiomError(ValueError):
    """A gene tree violates the observability axioms."""

    def __init__(self, report: "AxiomReport"):
        self.report = report
        lines = "; ".join(f"{v.axiom}: {v.detail}" for v in report.violations)
        super().__init__(f"axiom violations: {lines}")


def require_valid(g: EventLabeledGeneTree) -> None:
    report = validate_axioms(g)
    if not report.ok:
        raise AxiomError(report)


def validate_axioms(g: EventLabeledGeneTree) -> AxiomReport:
    """Check O1, O2, O3a and O3b and report every violation found."""
    t, ev = g.tree, g.events
    out: list[Violation] = []
    f = g.forest
    for v in range(len(t)):
        ch = t.children[v]
        if ch and len(ch) < 2:
            out.append(Violation("O1", v, f"{g.vertex_name(v)} has out-degree {len(ch)}"))
        if ev[v] is Event.HGT:
            n_tr = sum(1 for c in ch if (v, c) in g.transfer_edges)
            if n_tr == 0 or n_tr == len(ch):
                what = "no transfer edge" if n_tr == 0 else "no non-transfer edge"
                out.append(Violation("O2", v, f"transfer vertex {g.vertex_name(v)} has {what}"))
        if ev[v] is Event.SPEC:
            for a, b in combinations(ch, 2):
                shared = f.species_mask[a] & f.species_mask[b]
                if shared:
                    out.append(
                        Violation(
                            "O3a",
                            v,
                            f"children {g.vertex_name(a)} and {g.vertex_name(b)} of speciation "
                            f"{g.vertex_name(v)} share species {sorted(g.species_of_mask(shared), key=_key)}",
                        )
                    )
    for u, v in sorted(g.transfer_edges):
        shared = f.species_mask[u] & f.species_mask[v]
        if shared:
            out.append(
                Violation(
                    "O3b",
                    (u, v),
                    f"transfer edge {g.vertex_name(u)}->{g.vertex_name(v)} endpoints share species "
                    f"{sorted(g.species_of_mask(shared), key=_key)}",
                )
            )
    return AxiomReport(tuple(out))


# -- informative triplets --------------------------------------------------

# Above this many species the dense mark array gets too large; use a set instead.
_DENSE_LIMIT = 1 << 27


def informative_triplets(g: EventLabeledGeneTree) -> TripletSet:
    """The informative species triplets of ``g`` as a :class:`TripletSet`."""
    k = len(g.species)
    sp = g.species
    out = []
    for code in g.triplet_codes.tolist():
        ab, c = divmod(code, k)
        a, b = divmod(ab, k)
        out.append(Triplet(sp[a], sp[b], sp[c]))
    return TripletSet(out)


def decode_triplets(codes: np.ndarray, k: int) -> np.ndarray:
    """``(n, 3)`` int array of ``(a, b, c)`` species indices."""
    codes = np.asarray(codes, dtype=np.int64)
    c = codes % k
    ab = codes // k
    return np.stack([ab // k, ab % k, c], axis=1)


def _compute_triplet_codes(g: EventLabeledGeneTree) -> np.ndarray:
    k = len(g.species)
    if k < 3:
        return np.zeros(0, dtype=np.int64)
    if k**3 > _DENSE_LIMIT:
        return _triplet_codes_sparse(g)
    mark = np.zeros(k**3, dtype=np.uint8)
    f = g.forest
    is_spec = np.array([e is Event.SPEC for e in g.events], dtype=np.uint8)
    for root in f.comp_root:
        leaves = sorted(f.leaves_below[root])
        if len(leaves) < 3:
            continue
        depth, vert = _component_lca_matrices(g, root, leaves)
        leaf_sp = np.array([g.leaf_species[v] for v in leaves], dtype=np.int32)
        kernels.rule1_mark(depth, vert, leaf_sp, is_spec, k, mark)
    for u, v in sorted(g.transfer_edges):
        side_u = np.array(bits(f.species_mask[u]), dtype=np.int32)
        side_v = np.array(bits(f.species_mask[v]), dtype=np.int32)
        kernels.rule2_mark(side_u, side_v, k, mark)
    return np.flatnonzero(mark).astype(np.int64)


def _component_lca_matrices(g: EventLabeledGeneTree, root: int, leaves: list[int]):
    """Pairwise lca depth and vertex over the leaves of one transfer-forest component."""
    f = g.forest
    m = len(leaves)
    pos = {v: i for i, v in enumerate(leaves)}
    depth = np.zeros((m, m), dtype=np.int32)
    vert = np.zeros((m, m), dtype=np.int32)
    local = {}
    stack = [root]
    while stack:
        w = stack.pop()
        ch = f.children[w]
        stack.extend(ch)
        if len(ch) < 2:
            continue
        for c in ch:
            if c not in local:
                local[c] = np.fromiter((pos[x] for x in f.leaves_below[c]), dtype=np.intp)
        for c1, c2 in combinations(ch, 2):
            ix = np.ix_(local[c1], local[c2])
            iy = np.ix_(local[c2], local[c1])
            depth[ix] = f.depth[w]
            depth[iy] = f.depth[w]
            vert[ix] = w
            vert[iy] = w
    for i, v in enumerate(leaves):
        depth[i, i] = f.depth[v]
        vert[i, i] = v
    return depth, vert


def _triplet_codes_sparse(g: EventLabeledGeneTree) -> np.ndarray:
    # Same rules as the dense path, accumulated in a Python set.
    k = len(g.species)
    f = g.forest
    found: set[int] = set()

    def add(a, b, c):
        if a > b:
            a, b = b, a
        found.add((a * k + b) * k + c)

    for root in f.comp_root:
        leaves = sorted(f.leaves_below[root])
        if len(leaves) < 3:
            continue
        depth, vert = _component_lca_matrices(g, root, leaves)
        sp = [g.leaf_species[v] for v in leaves]
        for i, j, l in combinations(range(len(leaves)), 3):
            a, b, c = sp[i], sp[j], sp[l]
            if a == b or a == c or b == c:
                continue
            dab, dac, dbc = depth[i, j], depth[i, l], depth[j, l]
            if dab > dac:
                top, trip = vert[i, l], (a, b, c)
            elif dac > dab:
                top, trip = vert[i, j], (a, c, b)
            elif dbc > dab:
                top, trip = vert[i, j], (b, c, a)
            else:
                continue
            if g.events[top] is Event.SPEC:
                add(*trip)
    for u, v in g.transfer_edges:
        for one, other in ((f.species_mask[u], f.species_mask[v]), (f.species_mask[v], f.species_mask[u])):
            for a, b in combinations(bits(one), 2):
                for c in bits(other):
                    if c != a and c != b:
                        add(a, b, c)
    return np.array(sorted(found), dtype=np.int64)
