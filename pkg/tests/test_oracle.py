import random
from itertools import combinations

import pytest

from helpers import gene_newick, random_instances, random_nested
from timecons.genetree import Event, informative_triplets, validate_axioms
from timecons.newick import emit_newick, parse_gene_tree
from timecons.oracle import (
    InstanceGenConfig, InstanceGenError, OracleLimitError, aho_build, brute_force_all, brute_force_solve,
    double_factorial, enumerate_binary_species_trees, generate_instance, naive_displays, species_labels,
)
from timecons.solver import solve
from timecons.tree import displayed_triplets, displays, is_binary, triplet


@pytest.mark.parametrize("n", range(2, 8))
def test_enumeration_count(n):
    trees = [emit_newick(t) for t in enumerate_binary_species_trees(species_labels(n))]
    assert len(trees) == double_factorial(2 * n - 3)
    assert len(set(trees)) == len(trees)


def test_enumeration_limits():
    assert [emit_newick(t) for t in enumerate_binary_species_trees("A")] == ["A;"]
    with pytest.raises(OracleLimitError):
        next(enumerate_binary_species_trees(species_labels(9)))
    with pytest.raises(ValueError):
        next(enumerate_binary_species_trees([]))


def test_aho_examples():
    assert emit_newick(aho_build([], "ABC")) == "(A,B,C);"
    assert emit_newick(aho_build([triplet("A", "B", "C")], "ABC")) == "((A,B),C);"
    assert aho_build([triplet("A", "B", "C"), triplet("B", "C", "A")], "ABC") is None


def test_aho_matches_enumeration():
    rng = random.Random(9)
    for _ in range(150):
        n = rng.randint(3, 6)
        labels = species_labels(n)
        pool = [triplet(a, b, c) for a, b, c in combinations(labels, 3) for a, b, c in ((a, b, c), (a, c, b), (b, c, a))]
        R = rng.sample(pool, rng.randint(0, min(len(pool), 6)))
        built = aho_build(R, labels)
        exists = any(all(displays(s, r) for r in R) for s in enumerate_binary_species_trees(labels))
        assert (built is not None) == exists
        if built is not None:
            assert all(naive_displays(built, r) for r in R)


def test_brute_force_speciation_tree():
    nested = random_nested(random.Random(4), "ABCDE", binary=True)
    g = parse_gene_tree(gene_newick(nested))
    sols = brute_force_all(g)
    assert len(sols) == 1
    assert displayed_triplets(sols[0]) == informative_triplets(g)


def test_brute_force_incompatible_transfers():
    g = parse_gene_tree(
        "(((a1@A,b1@B)[&ev=d],c1@C[&tr=1])[&ev=t],((a2@A,c2@C)[&ev=d],b2@B[&tr=1])[&ev=t])[&ev=d];"
    )
    assert informative_triplets(g) == {triplet("A", "B", "C"), triplet("A", "C", "B")}
    assert brute_force_solve(g) is None
    assert not solve(g).solved


def test_brute_force_limit():
    g = parse_gene_tree("(" + ",".join(f"g{i}@{s}" for i, s in enumerate(species_labels(9))) + ")[&ev=d];")
    with pytest.raises(OracleLimitError):
        brute_force_solve(g)
    assert brute_force_solve(g, limit=9) is not None


def test_generator_is_deterministic_and_valid():
    for cfg, g in random_instances(300, seed=31, max_species=10, hint=60):
        assert validate_axioms(g).ok
        assert len(g.tree.leaves) <= cfg.gene_count_hint
        assert len(g.species) <= cfg.species_count
        again = generate_instance(cfg)
        assert repr(again) == repr(g)


def test_generator_config_checks():
    with pytest.raises(InstanceGenError):
        InstanceGenConfig(3, 10, dup_rate=1.5)
    with pytest.raises(InstanceGenError):
        InstanceGenConfig(0, 10)
    with pytest.raises(InstanceGenError):
        InstanceGenConfig(3, 0)


def test_zero_rates_give_species_tree_image():
    for seed in range(60):
        k = 1 + seed % 9
        g = generate_instance(InstanceGenConfig(k, 100, seed=seed))
        assert len(g.tree.leaves) == k == len(g.species)
        assert all(e in (Event.SPEC, Event.LEAF) for e in g.events)
        res = solve(g)
        assert res.solved and is_binary(res.tree)
        assert informative_triplets(g) <= displayed_triplets(res.tree)


def test_some_lossy_transfer_instances_are_infeasible():
    infeasible = total = 0
    rng = random.Random(33)
    for seed in range(1000):
        cfg = InstanceGenConfig(rng.randint(4, 6), 40, dup_rate=0.3, hgt_rate=1.0, loss_rate=1.0, seed=seed)
        try:
            g = generate_instance(cfg)
        except InstanceGenError:
            continue
        total += 1
        infeasible += brute_force_solve(g) is None
    print(f"infeasible {infeasible}/{total}")
    assert total > 900 and infeasible >= 10
