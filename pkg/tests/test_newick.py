import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import random_instances, random_tree
from timecons.genetree import AxiomError, Event, GeneTreeError
from timecons.newick import ParseError, emit_gene_tree, emit_newick, parse_gene_tree, parse_newick, parse_species_map
from timecons.tree import TreeError, same_topology


def test_species_tree_roundtrip():
    s = parse_newick("((B,A),(C,(E,D)));")
    assert emit_newick(s) == "((A,B),(C,(D,E)));"
    assert same_topology(parse_newick(emit_newick(s)), s)


def test_lengths_comments_and_quotes():
    s = parse_newick("(('x y':1.5,B:2)[hello]:0.1,C);")
    assert set(s.leaf_labels) == {"x y", "B", "C"}
    assert "'x y'" in emit_newick(s)


def test_duplicate_species_labels_rejected():
    with pytest.raises((ParseError, TreeError)):
        parse_newick("(A,A);")


def test_annotations_in_species_tree_rejected():
    with pytest.raises(ParseError):
        parse_newick("(A,B)[&ev=s];")


@pytest.mark.parametrize(
    "text,line,col",
    [
        ("(A,B", 1, 5),
        ("(A,B);x", 1, 7),
        ("(A,\n B));", 2, 4),
    ],
)
def test_error_positions(text, line, col):
    with pytest.raises(ParseError) as info:
        parse_newick(text)
    assert (info.value.line, info.value.column) == (line, col)


def test_gene_tree_parse():
    g = parse_gene_tree("((a@A,b@B)x[&ev=s,tr=1],c@C)[&ev=t];")
    assert g.species == ("A", "B", "C")
    x = g.names.index("x")
    assert g.events[x] is Event.SPEC
    assert g.transfer_edges == {(g.tree.root, x)}


def test_species_map_wins():
    g = parse_gene_tree("(a@A,b)[&ev=d];", parse_species_map("a\tZ\nb\tB\n"))
    assert g.sigma == {"a": "Z", "b": "B"}


def test_species_map_errors():
    with pytest.raises(ParseError):
        parse_species_map("a\tA\na\tB\n")
    with pytest.raises(ParseError):
        parse_species_map("justone\n")


@pytest.mark.parametrize(
    "text",
    [
        "(a@A,b@B);",  # missing event
        "(a@A,b@B)[&ev=x];",  # unknown event
        "(a@A,b@B)[&ev=s,foo=1];",  # unknown key
        "(a@A,b@B)[&ev=s,ev=d];",  # duplicate key
        "(a@A,b)[&ev=s];",  # no species for b
    ],
)
def test_bad_gene_trees(text):
    with pytest.raises((ParseError, GeneTreeError)):
        parse_gene_tree(text)


def test_strict_axioms():
    with pytest.raises(AxiomError):
        parse_gene_tree("(a@A,b@A)[&ev=s];")
    g = parse_gene_tree("(a@A,b@A)[&ev=s];", strict=False)
    assert len(g) == 3


def test_gene_roundtrip_generated():
    for _, g in random_instances(100, seed=4):
        text = emit_gene_tree(g)
        h = parse_gene_tree(text)
        assert emit_gene_tree(h) == text
        assert h.species == g.species
        assert len(h.transfer_edges) == len(g.transfer_edges)


def test_species_roundtrip_random():
    rng = random.Random(1)
    for _ in range(100):
        t = random_tree(rng, rng.randint(1, 12), binary=rng.random() < 0.5)
        text = emit_newick(t)
        assert emit_newick(parse_newick(text)) == text
        assert same_topology(parse_newick(text), t)


@given(st.text(alphabet="(),;:[]&=@'ABab01 \n.", max_size=40))
@settings(max_examples=400, deadline=None)
def test_fuzz_only_clean_errors(text):
    for parse in (parse_newick, parse_gene_tree):
        try:
            parse(text)
        except (ParseError, TreeError, GeneTreeError, AxiomError):
            pass
