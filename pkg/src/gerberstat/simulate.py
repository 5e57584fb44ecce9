"""Seeded synthetic return panels.

Kinds
-----
``gaussian``
    i.i.d. standard normal columns.
``student_t``
    i.i.d. Student-t columns with 3 degrees of freedom (heavy tails).
``regime_flip``
    One common factor; every asset loads on it with a random magnitude and
    sign, and a random subset of assets reverses its sign after a random
    break period.  Pairwise co-movement then disagrees between regimes,
    which is what pushes the original statistic away from a consistent
    (PSD) correlation structure.
``mixture``
    Each draw picks ``gaussian`` or ``regime_flip`` with equal probability.
"""

import numpy as np

from .ingest import ReturnMatrix

KINDS = ("gaussian", "student_t", "regime_flip", "mixture")


def trial_rng(seed, trial_index):
    """Independent generator for one trial; trials can run in any order."""
    return np.random.default_rng([int(seed), int(trial_index)])


def random_returns(rng, T, K, kind="mixture", scale=0.01):
    if kind == "mixture":
        kind = "gaussian" if rng.random() < 0.5 else "regime_flip"
    if kind == "gaussian":
        x = rng.standard_normal((T, K))
    elif kind == "student_t":
        x = rng.standard_t(3, size=(T, K))
    elif kind == "regime_flip":
        factor = rng.standard_normal(T)
        loading = rng.uniform(0.5, 1.5, K) * rng.choice([-1.0, 1.0], K)
        brk = rng.integers(1, T)
        flips = rng.random(K) < 0.5
        sign = np.ones((T, K))
        sign[brk:, flips] = -1.0
        x = sign * loading * factor[:, None] + 0.5 * rng.standard_normal((T, K))
    else:
        raise ValueError(f"unknown kind {kind!r}; expected one of {KINDS}")
    return ReturnMatrix(scale * x)
