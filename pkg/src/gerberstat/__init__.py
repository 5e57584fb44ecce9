"""Gerber co-movement statistics and positive semidefiniteness checks."""

from .exceptions import (
    GerberError,
    InputError,
    PreconditionError,
    ZeroVarianceError,
)
from .gerber import (
    VARIANTS,
    CountMatrices,
    GerberMatrix,
    PairCounts,
    count_matrices,
    covariance_from_gerber,
    gerber_gs1,
    gerber_gs2,
    gerber_matrix,
    gerber_oracle,
    gerber_original,
    joint_observation,
    pair_counts,
)
from .indicators import IndicatorSet, ThresholdVector, build_indicators, build_thresholds
from .ingest import IngestOptions, ReturnMatrix, load_returns, validate_for_thresholding
from .pipeline import Analysis, analyze
from .psd import (
    PsdReport,
    SeriesCheck,
    check_psd,
    find_non_psd_original,
    symmetric_eigen_extremes,
    verify_series_construction,
    verify_squared_form,
)

__version__ = "0.1.0"
