"""Random-matrix diagnostics for synchronisation of annual growth panels.

The pipeline is: parse a level panel, convert it to percent growth, select a
window of years and countries, form the Pearson correlation matrix, and
compare its spectrum against Marchenko-Pastur bounds and a Monte Carlo null.
"""

__version__ = "0.1.0"

from rmtsync.clustering import (
    Dendrogram,
    DistanceMatrix,
    agnes_average,
    corr_rows_to_distances,
    corr_to_metric_distance,
    to_newick,
)
from rmtsync.errors import ConfigError, ConvergenceError, DataError, RmtSyncError
from rmtsync.matrix import (
    CorrelationMatrix,
    EigenDecomposition,
    correlation_matrix,
    eigen_symmetric,
    standardize_columns,
    trace,
)
from rmtsync.panel import (
    GrowthPanel,
    LevelPanel,
    PeriodSpec,
    growth_rates,
    parse_panel_csv,
    select_window,
    serialize_panel_csv,
    validate_panel,
)
from rmtsync.rmt import (
    MpBounds,
    NullSimConfig,
    NullSimResult,
    SpectrumReport,
    classify_spectrum,
    info_fraction,
    ipr,
    mp_bounds,
    mp_density,
    participation_number,
    simulate_null,
)
from rmtsync.rolling import RollingConfig, RollingPoint, rolling_info_fraction

__all__ = [
    "__version__",
    "Dendrogram",
    "DistanceMatrix",
    "agnes_average",
    "corr_rows_to_distances",
    "corr_to_metric_distance",
    "to_newick",
    "ConfigError",
    "ConvergenceError",
    "DataError",
    "RmtSyncError",
    "CorrelationMatrix",
    "EigenDecomposition",
    "correlation_matrix",
    "eigen_symmetric",
    "standardize_columns",
    "trace",
    "GrowthPanel",
    "LevelPanel",
    "PeriodSpec",
    "growth_rates",
    "parse_panel_csv",
    "select_window",
    "serialize_panel_csv",
    "validate_panel",
    "MpBounds",
    "NullSimConfig",
    "NullSimResult",
    "SpectrumReport",
    "classify_spectrum",
    "info_fraction",
    "ipr",
    "mp_bounds",
    "mp_density",
    "participation_number",
    "simulate_null",
    "RollingConfig",
    "RollingPoint",
    "rolling_info_fraction",
]
