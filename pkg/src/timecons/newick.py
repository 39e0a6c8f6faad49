"""Newick reading and writing, with bracket annotations for gene trees.

Gene trees use ``[&ev=s|d|t]`` on internal nodes and ``[&tr=1]`` on a node whose
incoming edge is a transfer edge; both keys may share one bracket.  Leaf species
come from a ``gene@species`` suffix or from a TSV map (which wins on conflict).
Edge lengths are accepted and ignored.  Brackets without ``&`` are comments.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Mapping, Optional

from .genetree import AxiomError, Event, EventLabeledGeneTree, GeneTreeError, validate_axioms
from .tree import RootedTree, TreeError, _key


class ParseError(ValueError):
    def __init__(self, msg: str, line: int = 0, column: int = 0):
        self.line, self.column = line, column
        super().__init__(f"line {line}, column {column}: {msg}" if line else msg)


_SPECIAL = set("(),:;[]'")
_EVENT_CODES = {"s": Event.SPEC, "d": Event.DUP, "t": Event.HGT}


@dataclass
class _Node:
    name: Optional[str] = None
    children: list = field(default_factory=list)
    annotations: dict = field(default_factory=dict)
    pos: int = 0


class _Reader:
    def __init__(self, text: str):
        self.text = text
        self.i = 0

    def error(self, msg: str, at: Optional[int] = None) -> ParseError:
        at = self.i if at is None else at
        line = self.text.count("\n", 0, at) + 1
        col = at - (self.text.rfind("\n", 0, at) + 1) + 1
        return ParseError(msg, line, col)

    def skip_ws(self):
        while self.i < len(self.text) and self.text[self.i].isspace():
            self.i += 1

    def peek(self) -> str:
        self.skip_ws()
        return self.text[self.i] if self.i < len(self.text) else ""

    def expect(self, ch: str):
        if self.peek() != ch:
            got = repr(self.peek()) if self.peek() else "end of input"
            raise self.error(f"expected {ch!r}, found {got}")
        self.i += 1

    def parse(self) -> _Node:
        node = self.node()
        self.expect(";")
        if self.peek():
            raise self.error("unexpected text after ';'")
        return node

    def node(self) -> _Node:
        start = self.i
        self.skip_ws()
        node = _Node(pos=self.i)
        if self.peek() == "(":
            self.i += 1
            node.children.append(self.node())
            while self.peek() == ",":
                self.i += 1
                node.children.append(self.node())
            self.expect(")")
        node.name = self.name()
        self.suffixes(node)
        if not node.children and not node.name:
            raise self.error("leaf without a name", start if start < len(self.text) else None)
        return node

    def name(self) -> Optional[str]:
        self.skip_ws()
        t, i = self.text, self.i
        if i < len(t) and t[i] == "'":
            out = []
            i += 1
            while True:
                if i >= len(t):
                    raise self.error("unterminated quoted name", self.i)
                if t[i] == "'":
                    if i + 1 < len(t) and t[i + 1] == "'":
                        out.append("'")
                        i += 2
                        continue
                    i += 1
                    break
                out.append(t[i])
                i += 1
            self.i = i
            return "".join(out)
        j = i
        while j < len(t) and t[j] not in _SPECIAL and not t[j].isspace():
            j += 1
        self.i = j
        return t[i:j] or None

    def suffixes(self, node: _Node):
        while True:
            ch = self.peek()
            if ch == ":":
                self.i += 1
                self.skip_ws()
                m = re.compile(r"[-+0-9.eE]+").match(self.text, self.i)
                if not m:
                    raise self.error("expected an edge length after ':'")
                try:
                    float(m.group())
                except ValueError:
                    raise self.error(f"bad edge length {m.group()!r}") from None
                self.i = m.end()
            elif ch == "[":
                self.annotation(node)
            else:
                return

    def annotation(self, node: _Node):
        start = self.i
        end = self.text.find("]", self.i)
        if end < 0:
            raise self.error("unterminated '['")
        body = self.text[self.i + 1 : end]
        self.i = end + 1
        if not body.startswith("&"):
            return  # plain comment
        for item in body[1:].split(","):
            item = item.strip()
            if not item:
                continue
            key, eq, val = item.partition("=")
            key, val = key.strip(), val.strip()
            if not eq:
                raise self.error(f"annotation {item!r} is not key=value", start)
            if key not in ("ev", "tr"):
                raise self.error(f"unknown annotation key {key!r}", start)
            if key in node.annotations:
                raise self.error(f"duplicate annotation key {key!r}", start)
            node.annotations[key] = (val, start)


def _flatten(root: _Node):
    """Preorder ids; returns children lists, parents, nodes."""
    nodes, children, parents = [], [], []
    stack = [(root, None)]
    while stack:
        nd, parent = stack.pop()
        v = len(nodes)
        nodes.append(nd)
        children.append([])
        parents.append(parent)
        if parent is not None:
            children[parent].append(v)
        stack.extend((c, v) for c in reversed(nd.children))
    return children, parents, nodes


def parse_newick(text: str) -> RootedTree:
    """Plain Newick species tree; internal names and edge lengths are ignored."""
    reader = _Reader(text)
    root = reader.parse()
    children, parents, nodes = _flatten(root)
    for nd in nodes:
        if nd.annotations:
            _, at = next(iter(nd.annotations.values()))
            raise reader.error("species trees take no annotations", at)
        if not nd.children and not nd.name:
            raise reader.error("leaf without a name", nd.pos)
    labels = [None if nd.children else nd.name for nd in nodes]
    seen = {}
    for nd, lab in zip(nodes, labels):
        if lab is not None:
            if lab in seen:
                raise reader.error(f"duplicate leaf label {lab!r}", nd.pos)
            seen[lab] = nd
    return RootedTree(children, labels)


def parse_species_map(text: str) -> dict:
    """Two-column TSV ``gene<TAB>species``; blank lines and ``#`` comments skipped."""
    out = {}
    for n, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        parts = line.rstrip("\n").split("\t")
        if len(parts) != 2 or not parts[0].strip() or not parts[1].strip():
            raise ParseError("expected two tab-separated columns", n, 1)
        gene, sp = parts[0].strip(), parts[1].strip()
        if gene in out and out[gene] != sp:
            raise ParseError(f"gene {gene!r} mapped twice", n, 1)
        out[gene] = sp
    return out


def parse_gene_tree(
    text: str,
    species_map: Optional[Mapping[str, str]] = None,
    strict: bool = True,
) -> EventLabeledGeneTree:
    """Parse an annotated gene tree.

    With ``strict`` (the default) axiom violations raise :class:`AxiomError`;
    otherwise the tree is returned and the caller inspects :func:`validate_axioms`.
    """
    reader = _Reader(text)
    root = reader.parse()
    children, parents, nodes = _flatten(root)
    events, labels, names, sigma, transfer = [], [], [], {}, []
    species_map = dict(species_map or {})
    for v, nd in enumerate(nodes):
        ev = nd.annotations.get("ev")
        tr = nd.annotations.get("tr")
        if nd.children:
            if ev is None:
                raise reader.error("internal node without an 'ev' annotation", nd.pos)
            code, at = ev
            if code not in _EVENT_CODES:
                raise reader.error(f"unknown event code {code!r}", at)
            events.append(_EVENT_CODES[code])
            labels.append(None)
            names.append(nd.name)
        else:
            if ev is not None:
                raise reader.error("leaves take no 'ev' annotation", ev[1])
            events.append(Event.LEAF)
            gene, at_sign, sp = nd.name.rpartition("@")
            if not at_sign:
                gene, sp = nd.name, None
            elif not gene or not sp:
                raise reader.error(f"malformed leaf name {nd.name!r}", nd.pos)
            if gene in sigma or gene in labels:
                raise reader.error(f"duplicate gene label {gene!r}", nd.pos)
            sp = species_map.get(gene, sp)
            if sp is None:
                raise reader.error(f"gene {gene!r} has no species", nd.pos)
            labels.append(gene)
            names.append(None)
            sigma[gene] = sp
        if tr is not None:
            val, at = tr
            if val not in ("0", "1"):
                raise reader.error(f"'tr' must be 0 or 1, got {val!r}", at)
            if val == "1":
                if v == 0:
                    raise reader.error("the root has no incoming edge to mark as transfer", at)
                transfer.append((parents[v], v))
    try:
        g = EventLabeledGeneTree(RootedTree(children, labels), events, transfer, sigma, names)
    except TreeError as exc:
        raise ParseError(str(exc)) from None
    if strict:
        report = validate_axioms(g)
        if not report.ok:
            raise AxiomError(report)
    return g


# -- writing -----------------------------------------------------------------


def _quote(name) -> str:
    s = str(name)
    if s and not any(ch in _SPECIAL or ch.isspace() for ch in s):
        return s
    return "'" + s.replace("'", "''") + "'"


def _child_order(tree: RootedTree, label_of) -> list[list[int]]:
    smallest: list = [None] * len(tree)
    for v in tree.postorder:
        if tree.is_leaf(v):
            smallest[v] = _key(label_of(v))
        else:
            smallest[v] = min(smallest[c] for c in tree.children[v])
    return [sorted(ch, key=lambda c: smallest[c]) for ch in tree.children]


def _emit(tree: RootedTree, label_of, suffix_of) -> str:
    order = _child_order(tree, label_of)
    out: list[str] = []
    stack: list = [tree.root]
    while stack:
        item = stack.pop()
        if isinstance(item, str):
            out.append(item)
            continue
        v = item
        if tree.is_leaf(v):
            out.append(_quote(label_of(v)) + suffix_of(v))
            continue
        out.append("(")
        stack.append(")" + suffix_of(v))
        for i, c in enumerate(reversed(order[v])):
            stack.append(c)
            if i < len(order[v]) - 1:
                stack.append(",")
    return "".join(out) + ";"


def emit_newick(tree: RootedTree) -> str:
    """Deterministic Newick with children ordered by their smallest leaf label."""
    return _emit(tree, lambda v: tree.labels[v], lambda v: "")


def emit_gene_tree(g: EventLabeledGeneTree) -> str:
    t = g.tree

    def label(v):
        return f"{t.labels[v]}@{g.sigma[t.labels[v]]}"

    def suffix(v):
        keys = []
        if not t.is_leaf(v):
            keys.append(f"ev={g.events[v].value}")
        p = t.parent[v]
        if p is not None and (p, v) in g.transfer_edges:
            keys.append("tr=1")
        name = "" if t.is_leaf(v) or not g.names[v] else _quote(g.names[v])
        return name + (f"[&{','.join(keys)}]" if keys else "")

    return _emit(t, label, suffix)


__all__ = [
    "AxiomError",
    "GeneTreeError",
    "ParseError",
    "emit_gene_tree",
    "emit_newick",
    "parse_gene_tree",
    "parse_newick",
    "parse_species_map",
]
