"""Parallel structural graph clustering with an out-of-core mode.

Vertices are clustered by structural similarity of their neighborhoods:
dense vertices become cores, clusters grow over similar core-core edges,
border vertices attach as members, and the rest are hubs or outliers.  The
engine prunes similarity evaluations with progressive neighborhood bounds,
runs its phases edge-parallel, and can process graphs under a memory budget
by partitioning them into edge-extended subgraphs on disk.
"""

from .graph import (
    EdgeList,
    Graph,
    ParseError,
    build_graph,
    edge_index,
    is_graph_cache,
    load_graph,
    parse_edge_list,
    save_graph,
)
from .scan import (
    ClusteringResult,
    ClusterState,
    Role,
    SimilarityStatus,
    StatsReport,
    check_sim,
    classify_hub_outlier,
    detect_clusters,
    epsilon_fraction,
    find_root,
    identify_core,
    init_state,
    scan_in_memory,
    structural_similarity,
    union_roots,
)
from .oracle import (
    EquivalenceReport,
    OracleResult,
    edge_similarities,
    results_equivalent,
    serial_scan,
)
from .partition import (
    EdgeExtendedSubgraph,
    GraphMeta,
    InfeasibleBudgetError,
    PartitionInfo,
    PartitionPlan,
    estimate_memory,
    load_partition,
    partition_graph,
    scan_out_of_core,
)
from .cli import RunConfig, main, run
from .estimator import StructuralClustering

__version__ = "0.1.0"

__all__ = [
    "EdgeList",
    "Graph",
    "ParseError",
    "build_graph",
    "edge_index",
    "is_graph_cache",
    "load_graph",
    "parse_edge_list",
    "save_graph",
    "ClusteringResult",
    "ClusterState",
    "Role",
    "SimilarityStatus",
    "StatsReport",
    "check_sim",
    "classify_hub_outlier",
    "detect_clusters",
    "epsilon_fraction",
    "find_root",
    "identify_core",
    "init_state",
    "scan_in_memory",
    "structural_similarity",
    "union_roots",
    "EquivalenceReport",
    "OracleResult",
    "edge_similarities",
    "results_equivalent",
    "serial_scan",
    "EdgeExtendedSubgraph",
    "GraphMeta",
    "InfeasibleBudgetError",
    "PartitionInfo",
    "PartitionPlan",
    "estimate_memory",
    "load_partition",
    "partition_graph",
    "scan_out_of_core",
    "RunConfig",
    "main",
    "run",
    "StructuralClustering",
    "__version__",
]
