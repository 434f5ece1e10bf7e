"""Round-synchronous CONGEST simulation with a sampling-based distributed
minimum-cut approximation and exact centralized oracles."""

from .congest import (
    BudgetViolation,
    NetworkConfig,
    RoundLimitExceeded,
    RoundStats,
    default_bits,
)
from .driver import (
    CutResult,
    EpsilonSchedule,
    NoCutFoundError,
    PackingPolicy,
    approx_min_cut,
    solve_epsilon_prime,
    test_tree_cut,
)
from .generators import clique_path, planted_cut, random_connected
from .graph import (
    GraphFormatError,
    GraphValidationError,
    SampledSubgraph,
    VertexSide,
    WeightedMultigraph,
    cut_weight,
    load_graph,
    sample_subgraph,
    save_graph,
)
from .mst import EdgeLoad, TreePacking, distributed_mst, greedy_tree_packing
from .oracle import ExactMinCut, expected_y, stoer_wagner
from .tree import RootedSpanningTree, TreeLabels
from .tree_primitives import (
    compute_low_high,
    compute_preorder,
    decompose,
    find_bridges,
    upcast,
    downcast,
)

__version__ = "0.1.0"
