import random

from timecons.tree import RootedTree, from_nested


def random_nested(rng: random.Random, labels, binary: bool = False):
    """Random rooted tree shape by repeatedly merging 2 (or, if not binary, 2-4) clusters."""
    items = list(labels)
    rng.shuffle(items)
    while len(items) > 1:
        width = 2 if binary else min(len(items), rng.choice([2, 2, 3, 4]))
        picked = [items.pop(rng.randrange(len(items))) for _ in range(width)]
        items.append(tuple(picked))
    return items[0]


def random_tree(rng: random.Random, n: int, binary: bool = False) -> RootedTree:
    return from_nested(random_nested(rng, [f"L{i}" for i in range(n)], binary))


def path_to_root(tree: RootedTree, v: int) -> list:
    out = [v]
    while tree.parent[v] is not None:
        v = tree.parent[v]
        out.append(v)
    return out


def gene_newick(nested, event: str = "s", species=lambda leaf: leaf) -> str:
    """Annotated gene tree text for a nested shape; every internal node gets ``event``."""
    counter = [0]

    def rec(node):
        if isinstance(node, tuple):
            return "(" + ",".join(rec(c) for c in node) + f")[&ev={event}]"
        counter[0] += 1
        return f"g{counter[0]}@{species(node)}"

    return rec(nested) + ";"


def random_instances(n: int, seed: int = 0, max_species: int = 6, hint: int = 30):
    """Deterministic stream of generated gene trees with mixed rates."""
    from timecons.oracle import InstanceGenConfig, InstanceGenError, generate_instance

    rng = random.Random(seed)
    out = []
    while len(out) < n:
        cfg = InstanceGenConfig(
            species_count=rng.randint(1, max_species),
            gene_count_hint=hint,
            dup_rate=rng.choice([0.0, 0.2, 0.5, 1.0]),
            hgt_rate=rng.choice([0.0, 0.3, 0.6, 1.0]),
            loss_rate=rng.choice([0.0, 0.2, 0.5, 1.0]),
            seed=rng.getrandbits(63),
        )
        try:
            out.append((cfg, generate_instance(cfg)))
        except InstanceGenError:
            continue  # high rates with a small leaf cap rarely fit
    return out
