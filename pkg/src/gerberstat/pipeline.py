"""Returns -> thresholds -> indicators -> counts, in one call."""

from dataclasses import dataclass

import numpy as np

from .gerber import CountMatrices, GerberMatrix, count_matrices, gerber_matrix
from .indicators import DEFAULT_C, IndicatorSet, ThresholdVector, build_indicators, build_thresholds
from .ingest import ReturnMatrix, validate_for_thresholding


@dataclass(frozen=True)
class Analysis:
    returns: ReturnMatrix
    sigmas: np.ndarray
    thresholds: ThresholdVector
    indicators: IndicatorSet
    counts: CountMatrices

    def gerber(self, variant) -> GerberMatrix:
        return gerber_matrix(self.counts, variant)


def analyze(r: ReturnMatrix, c=DEFAULT_C) -> Analysis:
    sigmas = validate_for_thresholding(r)
    th = build_thresholds(sigmas, c)
    ind = build_indicators(r, th)
    return Analysis(r, sigmas, th, ind, count_matrices(ind))
