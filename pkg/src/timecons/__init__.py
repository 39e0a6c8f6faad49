"""Time-consistent species trees for event-labeled gene trees with transfers."""

from .auxgraph import (
    AuxGraph,
    PairVerdict,
    Reconciliation,
    build_aux_graph,
    build_reconciliation,
    check_pair,
    find_cycle,
    lca_map,
    maximal_topological_sort,
    verify_reconciliation,
)
from .genetree import (
    AxiomError,
    Event,
    EventLabeledGeneTree,
    informative_triplets,
    transfer_forest,
    validate_axioms,
)
from .kernels import BACKEND
from .newick import emit_gene_tree, emit_newick, parse_gene_tree, parse_newick
from .oracle import (
    InstanceGenConfig,
    aho_build,
    brute_force_solve,
    enumerate_binary_species_trees,
    generate_instance,
)
from .solver import good_split_graph, find_disconnected_bipartition, find_good_split, solve, solve_gtc
from .tree import (
    RootedTree,
    Triplet,
    TripletSet,
    agrees,
    apply_extension,
    cherries,
    displayed_triplets,
    is_almost_binary,
    is_binary,
    lca,
    restrict,
    split_refinement,
    star_tree,
    triplet,
)

__version__ = "0.1.0"

__all__ = [
    "agrees",
    "aho_build",
    "apply_extension",
    "AuxGraph",
    "AxiomError",
    "BACKEND",
    "brute_force_solve",
    "build_aux_graph",
    "build_reconciliation",
    "check_pair",
    "cherries",
    "displayed_triplets",
    "emit_gene_tree",
    "emit_newick",
    "enumerate_binary_species_trees",
    "Event",
    "EventLabeledGeneTree",
    "find_cycle",
    "find_disconnected_bipartition",
    "find_good_split",
    "generate_instance",
    "good_split_graph",
    "informative_triplets",
    "InstanceGenConfig",
    "is_almost_binary",
    "is_binary",
    "lca",
    "lca_map",
    "maximal_topological_sort",
    "PairVerdict",
    "parse_gene_tree",
    "parse_newick",
    "Reconciliation",
    "restrict",
    "RootedTree",
    "solve",
    "solve_gtc",
    "split_refinement",
    "star_tree",
    "transfer_forest",
    "triplet",
    "Triplet",
    "TripletSet",
    "validate_axioms",
    "verify_reconciliation",
]
