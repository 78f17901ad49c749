"""Cycle-consistent multi-matching via higher-order projected power iteration."""

from hippi.assignment import (
    AuctionConfig,
    AuctionStallError,
    ScoreBlock,
    lap_auction,
    lap_exact,
    project_to_universe,
)
from hippi.baselines import (
    BASELINE_METHODS,
    PairwiseInput,
    greedy_init,
    pairwise_lap_matchings,
    random_init,
    run_baseline,
    spectral_sync,
    vote_similarity,
)
from hippi.core import (
    OUTLIER,
    PSD_TOL,
    BlockIndex,
    MultiAdjacency,
    PairwiseMatchingSet,
    ProblemInstance,
    SimilarityMatrix,
    UniverseAssignment,
    expand,
)
from hippi.kernels import (
    DegenerateGeometryError,
    KernelConfig,
    PsdReport,
    assert_psd,
    build_adjacency,
    build_similarity,
)
from hippi.metrics import (
    CycleReport,
    MatchReport,
    cycle_error,
    fscore,
    verify_cycle_consistency,
)
from hippi.solver import (
    SolverConfig,
    SolverTrace,
    WbarOperator,
    hippi_solve,
    hippi_step,
    objective,
    universe_size,
)
from hippi.synth import (
    GenConfig,
    GenerationError,
    generate,
    planted_assignment,
    twin_prototype_instance,
)

__version__ = "0.1.0"

__all__ = [
    "AuctionConfig",
    "AuctionStallError",
    "BASELINE_METHODS",
    "BlockIndex",
    "CycleReport",
    "DegenerateGeometryError",
    "GenConfig",
    "GenerationError",
    "KernelConfig",
    "MatchReport",
    "MultiAdjacency",
    "OUTLIER",
    "PSD_TOL",
    "PairwiseInput",
    "PairwiseMatchingSet",
    "ProblemInstance",
    "PsdReport",
    "ScoreBlock",
    "SimilarityMatrix",
    "SolverConfig",
    "SolverTrace",
    "UniverseAssignment",
    "WbarOperator",
    "assert_psd",
    "build_adjacency",
    "build_similarity",
    "cycle_error",
    "expand",
    "fscore",
    "generate",
    "greedy_init",
    "hippi_solve",
    "hippi_step",
    "lap_auction",
    "lap_exact",
    "objective",
    "pairwise_lap_matchings",
    "planted_assignment",
    "project_to_universe",
    "random_init",
    "run_baseline",
    "spectral_sync",
    "twin_prototype_instance",
    "universe_size",
    "verify_cycle_consistency",
    "vote_similarity",
    "__version__",
]
