"""Rooted leaf-labeled trees and the topological operations built on them.

Trees are immutable.  Vertex ids are dense integers ``0..n-1``; refinement
operations (:func:`apply_extension`, :func:`split_refinement`) keep every
existing id and append new vertices at the end, so the old-id -> new-id map
is the identity and bookkeeping keyed by vertex id survives a refinement.
"""

from __future__ import annotations

from functools import cached_property
from itertools import combinations
from typing import Hashable, Iterable, NamedTuple, Optional, Sequence


class TreeError(ValueError):
    """Raised for structurally invalid trees or bad arguments to tree operations."""


Label = Hashable


class Triplet(NamedTuple):
    """Rooted triplet ``ab|c``.  Use :func:`triplet` to build the canonical form."""

    a: Label
    b: Label
    c: Label

    def __str__(self) -> str:
        return f"{self.a}{self.b}|{self.c}" if _short(self) else f"{self.a},{self.b}|{self.c}"


def _short(t: Triplet) -> bool:
    return all(isinstance(x, str) and len(x) == 1 for x in t)


def triplet(a: Label, b: Label, c: Label) -> Triplet:
    """Canonical ``ab|c`` with the pair sorted; labels must be pairwise distinct."""
    if a == b or a == c or b == c:
        raise TreeError(f"triplet labels must be pairwise distinct: {a!r}, {b!r}, {c!r}")
    if _key(b) < _key(a):
        a, b = b, a
    return Triplet(a, b, c)


def _key(x):
    # mixed label types still sort deterministically
    return (type(x).__name__, x)


class TripletSet(frozenset):
    """A frozenset of canonical :class:`Triplet` values."""

    def __new__(cls, items: Iterable = ()):
        return super().__new__(cls, (triplet(*t) for t in items))

    def __repr__(self) -> str:
        body = ", ".join(str(t) for t in sorted(self, key=lambda t: tuple(map(_key, t))))
        return f"TripletSet({{{body}}})"

    def labels(self) -> set:
        return {x for t in self for x in t}


class RootedTree:
    """Rooted tree with ordered children and labels on the leaves.

    Parameters
    ----------
    children:
        ``children[v]`` lists the children of vertex ``v``.
    labels:
        ``labels[v]`` is the label of leaf ``v`` and ``None`` for internal vertices.
    """

    __slots__ = ("children", "labels", "parent", "root", "__dict__")

    def __init__(self, children: Sequence[Sequence[int]], labels: Sequence[Optional[Label]]):
        n = len(children)
        if n == 0:
            raise TreeError("a tree needs at least one vertex")
        if len(labels) != n:
            raise TreeError("children and labels must have the same length")
        parent: list[Optional[int]] = [None] * n
        for v, ch in enumerate(children):
            for c in ch:
                if not 0 <= c < n:
                    raise TreeError(f"vertex {v} has unknown child {c}")
                if parent[c] is not None or c == v:
                    raise TreeError(f"vertex {c} has more than one parent")
                parent[c] = v
        roots = [v for v in range(n) if parent[v] is None]
        if len(roots) != 1:
            raise TreeError(f"expected exactly one root, found {len(roots)}")
        for v, ch in enumerate(children):
            if (labels[v] is None) == (len(ch) == 0):
                kind = "leaf without a label" if ch == () or not ch else "internal vertex with a label"
                raise TreeError(f"vertex {v}: {kind}")
        self.children: tuple[tuple[int, ...], ...] = tuple(tuple(ch) for ch in children)
        self.labels: tuple[Optional[Label], ...] = tuple(labels)
        self.parent: tuple[Optional[int], ...] = tuple(parent)
        self.root: int = roots[0]
        if len(self.preorder) != n:
            raise TreeError("tree is not connected")

    # -- basic structure -------------------------------------------------

    def __len__(self) -> int:
        return len(self.children)

    def __repr__(self) -> str:
        from .newick import emit_newick

        return f"RootedTree({emit_newick(self)!r})"

    def __eq__(self, other) -> bool:
        if not isinstance(other, RootedTree):
            return NotImplemented
        return self.children == other.children and self.labels == other.labels

    def __hash__(self) -> int:
        return hash((self.children, self.labels))

    def is_leaf(self, v: int) -> bool:
        return not self.children[v]

    @cached_property
    def preorder(self) -> tuple[int, ...]:
        order, stack = [], [self.root]
        while stack:
            v = stack.pop()
            order.append(v)
            stack.extend(reversed(self.children[v]))
        return tuple(order)

    @cached_property
    def postorder(self) -> tuple[int, ...]:
        out, stack = [], [(self.root, False)]
        while stack:
            v, done = stack.pop()
            if done:
                out.append(v)
            else:
                stack.append((v, True))
                stack.extend((c, False) for c in reversed(self.children[v]))
        return tuple(out)

    @cached_property
    def leaves(self) -> tuple[int, ...]:
        return tuple(v for v in self.preorder if not self.children[v])

    @cached_property
    def depth(self) -> tuple[int, ...]:
        d = [0] * len(self)
        for v in self.preorder:
            p = self.parent[v]
            if p is not None:
                d[v] = d[p] + 1
        return tuple(d)

    @cached_property
    def label_index(self) -> dict:
        """Leaf label -> vertex id.  Raises on duplicate labels."""
        idx = {}
        for v in self.leaves:
            lab = self.labels[v]
            if lab in idx:
                raise TreeError(f"duplicate leaf label {lab!r}")
            idx[lab] = v
        return idx

    @cached_property
    def leaf_labels(self) -> frozenset:
        return frozenset(self.labels[v] for v in self.leaves)

    def vertex(self, label: Label) -> int:
        try:
            return self.label_index[label]
        except KeyError:
            raise TreeError(f"unknown leaf label {label!r}") from None

    @cached_property
    def leaves_below(self) -> tuple[frozenset, ...]:
        """Leaf vertex ids in the subtree of every vertex."""
        below: list = [None] * len(self)
        for v in self.postorder:
            ch = self.children[v]
            below[v] = frozenset((v,)) if not ch else frozenset().union(*(below[c] for c in ch))
        return tuple(below)

    def ancestors(self, v: int, strict: bool = True) -> list[int]:
        out = [] if strict else [v]
        p = self.parent[v]
        while p is not None:
            out.append(p)
            p = self.parent[p]
        return out

    def is_ancestor(self, y: int, x: int) -> bool:
        """True iff ``x`` lies in the subtree of ``y`` (``x`` below or equal to ``y``)."""
        return self._tin[y] <= self._tin[x] < self._tout[y]

    @cached_property
    def _tin(self) -> tuple[int, ...]:
        self._build_intervals()
        return self._tin

    @cached_property
    def _tout(self) -> tuple[int, ...]:
        self._build_intervals()
        return self._tout

    def _build_intervals(self) -> None:
        n = len(self)
        tin, size = [0] * n, [1] * n
        for i, v in enumerate(self.preorder):
            tin[v] = i
        for v in self.postorder:
            p = self.parent[v]
            if p is not None:
                size[p] += size[v]
        self.__dict__["_tin"] = tuple(tin)
        self.__dict__["_tout"] = tuple(tin[v] + size[v] for v in range(n))

    # -- LCA: Euler tour + sparse table, O(1) per query ------------------

    @cached_property
    def _lca_table(self):
        euler: list[int] = []
        first = [0] * len(self)
        stack = [(self.root, 0)]
        while stack:
            v, i = stack.pop()
            if i == 0:
                first[v] = len(euler)
            euler.append(v)
            ch = self.children[v]
            if i < len(ch):
                stack.append((v, i + 1))
                stack.append((ch[i], 0))
        depth = self.depth
        table = [euler]
        j = 1
        while (1 << j) <= len(euler):
            prev, half = table[-1], 1 << (j - 1)
            row = []
            for i in range(len(euler) - (1 << j) + 1):
                a, b = prev[i], prev[i + half]
                row.append(a if depth[a] <= depth[b] else b)
            table.append(row)
            j += 1
        return first, table

    def lca2(self, u: int, v: int) -> int:
        if u == v:
            return u
        first, table = self._lca_table
        i, j = first[u], first[v]
        if i > j:
            i, j = j, i
        k = (j - i + 1).bit_length() - 1
        a, b = table[k][i], table[k][j - (1 << k) + 1]
        return a if self.depth[a] <= self.depth[b] else b

    def lca(self, xs: Iterable[int]) -> int:
        it = iter(xs)
        try:
            w = next(it)
        except StopIteration:
            raise TreeError("lca of an empty set") from None
        n = len(self)
        if not 0 <= w < n:
            raise TreeError(f"unknown vertex {w}")
        for x in it:
            if not 0 <= x < n:
                raise TreeError(f"unknown vertex {x}")
            w = self.lca2(w, x)
        return w

    def lca_labels(self, labels: Iterable[Label]) -> int:
        return self.lca(self.vertex(lab) for lab in labels)


# -- free-function API ---------------------------------------------------


def lca(tree: RootedTree, xs: Iterable[int]) -> int:
    """Lowest common ancestor of a non-empty set of vertices."""
    return tree.lca(xs)


def star_tree(labels: Iterable[Label]) -> RootedTree:
    """Star on ``labels`` (sorted); leaves get ids ``0..k-1`` and the root id ``k``.

    A single label yields the one-vertex tree.
    """
    labs = sorted(set(labels), key=_key)
    if not labs:
        raise TreeError("star tree needs at least one label")
    if len(labs) == 1:
        return RootedTree([()], [labs[0]])
    k = len(labs)
    return RootedTree([()] * k + [tuple(range(k))], list(labs) + [None])


def from_nested(nested) -> RootedTree:
    """Build a tree from nested tuples, e.g. ``(("A", "B"), "C")``.  Preorder ids."""
    children: list[list[int]] = []
    labels: list = []

    def walk(node) -> int:
        v = len(children)
        children.append([])
        if isinstance(node, (tuple, list)):
            labels.append(None)
            for sub in node:
                children[v].append(walk(sub))
        else:
            labels.append(node)
        return v

    walk(nested)
    return RootedTree(children, labels)


def displays(tree: RootedTree, t: Triplet) -> bool:
    """True iff ``tree`` displays ``ab|c``."""
    a, b, c = (tree.vertex(x) for x in t)
    ab = tree.lca2(a, b)
    ac = tree.lca2(a, c)
    return ab != ac and tree.is_ancestor(ac, ab) and ac == tree.lca2(b, c)


def displayed_triplets(tree) -> TripletSet:
    """All triplets displayed by a tree, or by any tree of an iterable (a forest)."""
    if not isinstance(tree, RootedTree):
        out: set = set()
        for comp in tree:
            out |= displayed_triplets(comp)
        return TripletSet(out)
    tree.label_index  # duplicate-label check
    leaves = tree.leaves
    depth = tree.depth
    out = set()
    for a, b, c in combinations(leaves, 3):
        dab = depth[tree.lca2(a, b)]
        dac = depth[tree.lca2(a, c)]
        dbc = depth[tree.lca2(b, c)]
        la, lb, lc = tree.labels[a], tree.labels[b], tree.labels[c]
        if dab > dac:
            out.add(triplet(la, lb, lc))
        elif dac > dab:
            out.add(triplet(la, lc, lb))
        elif dbc > dab:
            out.add(triplet(lb, lc, la))
    return TripletSet(out)


def agrees(tree: RootedTree, R: Iterable[Triplet]) -> bool:
    """True iff for every ``ab|c`` in ``R`` the tree displays neither ``ac|b`` nor ``bc|a``."""
    for a, b, c in R:
        va, vb, vc = tree.vertex(a), tree.vertex(b), tree.vertex(c)
        ab, ac, bc = tree.lca2(va, vb), tree.lca2(va, vc), tree.lca2(vb, vc)
        d = tree.depth
        # ac|b: lca(a,c) strictly below lca(a,b) = lca(b,c); bc|a symmetric
        if d[ac] > d[ab] or d[bc] > d[ab]:
            return False
    return True


def restrict(tree: RootedTree, X: Iterable[Label]) -> RootedTree:
    """Minimal subtree connecting the leaves labelled ``X``, unary vertices suppressed."""
    X = set(X)
    if not X:
        raise TreeError("cannot restrict to an empty label set")
    keep_leaves = {tree.vertex(lab) for lab in X}
    # count kept leaves per vertex
    count = [0] * len(tree)
    for v in tree.postorder:
        if tree.is_leaf(v):
            count[v] = 1 if v in keep_leaves else 0
        else:
            count[v] = sum(count[c] for c in tree.children[v])
    children: list[list[int]] = []
    labels: list = []

    def build(v: int) -> int:
        # descend through vertices with a single contributing child
        while True:
            live = [c for c in tree.children[v] if count[c] > 0]
            if len(live) == 1 and not tree.is_leaf(v):
                v = live[0]
                continue
            break
        nid = len(children)
        children.append([])
        if tree.is_leaf(v):
            labels.append(tree.labels[v])
        else:
            labels.append(None)
            for c in live:
                children[nid].append(build(c))
        return nid

    build(tree.root)
    return RootedTree(children, labels)


def apply_extension(tree: RootedTree, x: int, Xp: Iterable[int]) -> RootedTree:
    """The ``(x, X')`` extension: hang the children ``X'`` of ``x`` below a new vertex.

    The new vertex gets id ``len(tree)`` and takes the position of the first moved
    child in ``x``'s child list.  ``|X'| <= 1`` returns the tree unchanged.
    """
    Xp = set(Xp)
    ch = tree.children[x]
    if not Xp <= set(ch):
        raise TreeError(f"{sorted(Xp - set(ch))} are not children of {x}")
    if Xp == set(ch) and len(ch) > 1:
        raise TreeError("extension set must be a strict subset of the children")
    if len(Xp) <= 1:
        return tree
    y = len(tree)
    children = [list(c) for c in tree.children] + [[c for c in ch if c in Xp]]
    new_ch, placed = [], False
    for c in ch:
        if c in Xp:
            if not placed:
                new_ch.append(y)
                placed = True
        else:
            new_ch.append(c)
    children[x] = new_ch
    return RootedTree(children, list(tree.labels) + [None])


def contract_edge(tree: RootedTree, y: int) -> RootedTree:
    """Contract the edge above internal vertex ``y``; ids above ``y`` shift down by one."""
    p = tree.parent[y]
    if p is None or tree.is_leaf(y):
        raise TreeError("can only contract the edge above a non-root internal vertex")
    remap = {v: (v if v < y else v - 1) for v in range(len(tree)) if v != y}
    children, labels = [], []
    for v in range(len(tree)):
        if v == y:
            continue
        ch = []
        for c in tree.children[v]:
            if c == y:
                ch.extend(remap[g] for g in tree.children[y])
            else:
                ch.append(remap[c])
        children.append(ch)
        labels.append(tree.labels[v])
    return RootedTree(children, labels)


def split_refinement(tree: RootedTree, x: int, partition) -> RootedTree:
    """Split the children of cherry ``x`` into the two given parts.

    ``partition`` is a pair of vertex-id collections.  Applies the extensions
    ``(x, A)`` and then ``(x, B)``; afterwards ``x`` has exactly two children.
    """
    A, B = (set(p) for p in partition)
    ch = set(tree.children[x])
    if not ch or any(not tree.is_leaf(c) for c in ch):
        raise TreeError(f"vertex {x} is not a cherry")
    if not A or not B or A & B or A | B != ch:
        raise TreeError("partition must split the children of x into two non-empty disjoint parts")
    t1 = apply_extension(tree, x, A)
    rest = set(t1.children[x]) - ({len(tree)} if len(A) > 1 else set())
    return apply_extension(t1, x, rest & B)


def is_binary(tree: RootedTree) -> bool:
    return all(len(ch) in (0, 2) for ch in tree.children)


def cherries(tree: RootedTree) -> list[int]:
    """Internal vertices all of whose children are leaves, in increasing id order."""
    return [
        v
        for v, ch in enumerate(tree.children)
        if ch and all(not tree.children[c] for c in ch)
    ]


def is_almost_binary(tree: RootedTree) -> bool:
    cher = set(cherries(tree))
    return all(len(ch) in (0, 2) or v in cher for v, ch in enumerate(tree.children))


def n_binary_vertices(tree: RootedTree) -> int:
    return sum(1 for ch in tree.children if len(ch) == 2)


def n_resolved_vertices(tree: RootedTree) -> int:
    """Binary vertices that are not cherries.

    A split refinement of a cherry with at least three children raises this
    count by exactly one: the split vertex becomes binary and every vertex it
    creates is a cherry.
    """
    return sum(
        1
        for ch in tree.children
        if len(ch) == 2 and any(tree.children[c] for c in ch)
    )


def same_topology(s: RootedTree, t: RootedTree) -> bool:
    """Equality up to vertex ids and child order (leaf-labelled clusters)."""
    return clusters(s) == clusters(t)


def clusters(tree: RootedTree) -> frozenset:
    return frozenset(
        frozenset(tree.labels[l] for l in tree.leaves_below[v]) for v in range(len(tree))
    )
