"""Threshold exceedance indicators.

Each (period, asset) cell is classified as up, down or neutral against a
symmetric threshold ``h_k = c * sigma_k``.  Piercing is inclusive: a return
exactly equal to ``+h_k`` counts as up and ``-h_k`` as down.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import DimensionError, InputError
from .ingest import ReturnMatrix

DEFAULT_C = 0.5

INDICATOR_DTYPE = np.int8


def _frozen(a, dtype):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class ThresholdVector:
    """Per-asset exceedance levels ``h = c * sigma``."""

    c: float
    h: np.ndarray

    def __post_init__(self):
        if not self.c > 0:
            raise InputError(f"threshold fraction c must be positive, got {self.c}")
        h = _frozen(self.h, np.float64)
        if h.ndim != 1:
            raise DimensionError("thresholds must be a 1-D vector")
        if not np.all(h > 0):
            raise InputError("every threshold must be positive")
        object.__setattr__(self, "h", h)

    def __len__(self):
        return len(self.h)


def build_thresholds(sigmas, c=DEFAULT_C) -> ThresholdVector:
    """Scale standard deviations by ``c``.

    Raises ``InputError`` for ``c <= 0`` or any non-positive sigma.
    """
    c = float(c)
    if not c > 0:
        raise InputError(f"threshold fraction c must be positive, got {c}")
    sigmas = np.asarray(sigmas, dtype=np.float64)
    if not np.all(sigmas > 0):
        raise InputError("standard deviations must all be positive")
    return ThresholdVector(c, c * sigmas)


@dataclass(frozen=True)
class IndicatorSet:
    """The four T x K integer indicator matrices.

    Attributes
    ----------
    U, D : ndarray of {0, 1}
        Return at or above ``+h`` / at or below ``-h``.
    F : ndarray of {-1, 0, 1}
        ``U - D``.
    P : ndarray of {0, 1}
        Neutral cells, ``1 - |F|``.
    """

    U: np.ndarray
    D: np.ndarray
    F: np.ndarray
    P: np.ndarray
    asset_labels: tuple = ()
    c: float = float("nan")

    def __post_init__(self):
        for name in "UDFP":
            object.__setattr__(self, name, _frozen(getattr(self, name), INDICATOR_DTYPE))
        shapes = {getattr(self, name).shape for name in "UDFP"}
        if len(shapes) != 1 or self.U.ndim != 2:
            raise DimensionError(f"indicator matrices disagree in shape: {sorted(shapes)}")
        if not self.asset_labels:
            object.__setattr__(self, "asset_labels", tuple(f"A{i + 1}" for i in range(self.K)))
        assert not np.any(self.U & self.D), "up and down indicators overlap"
        assert np.array_equal(self.F, self.U - self.D)
        assert np.array_equal(self.P, 1 - np.abs(self.F))

    @classmethod
    def from_updown(cls, U, D, asset_labels=(), c=float("nan")):
        U = np.asarray(U, dtype=INDICATOR_DTYPE)
        D = np.asarray(D, dtype=INDICATOR_DTYPE)
        F = U - D
        return cls(U, D, F, 1 - np.abs(F), tuple(asset_labels), c)

    @property
    def T(self):
        return self.U.shape[0]

    @property
    def K(self):
        return self.U.shape[1]


def build_indicators(r: ReturnMatrix, th: ThresholdVector) -> IndicatorSet:
    """Classify every return against its asset's threshold."""
    if len(th) != r.K:
        raise DimensionError(f"{len(th)} thresholds for {r.K} assets")
    up = r.values >= th.h
    down = r.values <= -th.h
    return IndicatorSet.from_updown(up, down, r.asset_labels, th.c)
