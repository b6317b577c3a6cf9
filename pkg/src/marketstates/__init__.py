"""Market states from rolling correlation structure.

The pipeline: daily prices -> log returns -> rolling-epoch Pearson
correlation matrices -> optional power-map noise suppression -> optional
sector coarse graining -> seeded k-means states -> transition dynamics
and low-dimensional views.
"""

from .clustering import (
    Clustering,
    GridCell,
    GridResult,
    SigmaIntraResult,
    StateSequence,
    kmeans,
    optimize_states,
    order_states,
    sigma_intra,
)
from .corrmat import (
    CorrMatrix,
    EpochSpec,
    GuhrMatrix,
    average_correlation,
    coarse_grain,
    dump_matrix,
    epoch_correlation,
    iter_pipeline_matrices,
    iter_rolling_correlations,
    load_matrix_dump,
    matrix_distance,
    pipeline_matrices,
    power_map,
    rolling_correlations,
)
from .errors import (
    ComputationError,
    DegenerateColumn,
    DegradedRankWarning,
    DimensionMismatch,
    InsufficientData,
    InsufficientSequence,
    InvalidRegime,
    MarketStatesError,
    NonErgodic,
    ParameterRange,
    ParseError,
    SingletonSectorWarning,
    TieWarning,
    UnmappedTicker,
    ValidationError,
)
from .ingest import (
    PriceTable,
    ReturnTable,
    SectorMap,
    filter_stocks,
    load_price_table,
    load_sector_map,
    log_returns,
    parse_price_table,
    parse_sector_map,
)
from .markov import (
    BootstrapPolicy,
    EquilibriumVector,
    MarkovianityReport,
    TransitionMatrix,
    equilibrium_distribution,
    markovianity_check,
    transition_matrix,
    tridiagonality,
)
from .mds import (
    DistanceMatrix,
    Embedding,
    classical_mds,
    distance_matrix,
    embedding_svg,
    embedding_table,
    project_2d,
)
from .synth import RegimeSpec, generate_block_market, generate_markov_sequence

__version__ = "0.1.0"

__all__ = [
    "BootstrapPolicy",
    "Clustering",
    "ComputationError",
    "CorrMatrix",
    "DegenerateColumn",
    "DegradedRankWarning",
    "DimensionMismatch",
    "DistanceMatrix",
    "Embedding",
    "EpochSpec",
    "EquilibriumVector",
    "GridCell",
    "GridResult",
    "GuhrMatrix",
    "InsufficientData",
    "InsufficientSequence",
    "InvalidRegime",
    "MarketStatesError",
    "MarkovianityReport",
    "NonErgodic",
    "ParameterRange",
    "ParseError",
    "PriceTable",
    "RegimeSpec",
    "ReturnTable",
    "SectorMap",
    "SigmaIntraResult",
    "SingletonSectorWarning",
    "StateSequence",
    "TieWarning",
    "TransitionMatrix",
    "UnmappedTicker",
    "ValidationError",
    "average_correlation",
    "classical_mds",
    "coarse_grain",
    "distance_matrix",
    "dump_matrix",
    "embedding_svg",
    "embedding_table",
    "epoch_correlation",
    "equilibrium_distribution",
    "filter_stocks",
    "generate_block_market",
    "generate_markov_sequence",
    "iter_pipeline_matrices",
    "iter_rolling_correlations",
    "kmeans",
    "load_matrix_dump",
    "load_price_table",
    "load_sector_map",
    "log_returns",
    "markovianity_check",
    "matrix_distance",
    "optimize_states",
    "order_states",
    "parse_price_table",
    "parse_sector_map",
    "pipeline_matrices",
    "power_map",
    "project_2d",
    "rolling_correlations",
    "sigma_intra",
    "transition_matrix",
    "tridiagonality",
]
