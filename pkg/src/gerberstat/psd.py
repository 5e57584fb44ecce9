"""Positive semidefiniteness checks for Gerber matrices.

Includes the numerical counterparts of the two structural facts behind
GS1/GS2 being PSD: the numerator is a Gram matrix ``(U - D)^T (U - D)``,
and GS2 expands elementwise as a geometric series of Schur products of
Gram matrices.  Also searches for return panels on which the original
statistic fails to be PSD.
"""

import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .exceptions import AsymmetricMatrixError, DimensionError, PreconditionError
from .gerber import CountMatrices, GerberMatrix, _gram, gerber_original
from .indicators import IndicatorSet
from .ingest import ReturnMatrix, load_returns, save_returns
from .pipeline import analyze
from .simulate import random_returns, trial_rng

DEFAULT_TOL = 1e-10
SYMMETRY_TOL = 1e-12
WITNESS_LAMBDA = -1e-8
# failures within this multiple of the tolerance are reported as borderline
BORDERLINE_FACTOR = 100.0


def _as_symmetric(m, sym_tol=SYMMETRY_TOL):
    m = np.asarray(m.values if isinstance(m, GerberMatrix) else m, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
        raise DimensionError(f"expected a non-empty square matrix, got shape {m.shape}")
    scale = max(1.0, float(np.max(np.abs(m))))
    gap = float(np.max(np.abs(m - m.T)))
    if gap > sym_tol * scale:
        raise AsymmetricMatrixError(f"matrix is not symmetric (max |m - m.T| = {gap:.3e})")
    return (m + m.T) / 2


def symmetric_eigen_extremes(m, sym_tol=SYMMETRY_TOL):
    """Smallest and largest eigenvalue of a symmetric matrix.

    The input is symmetrized after the symmetry check. Uses LAPACK's
    symmetric solver, which is deterministic for a fixed input.
    """
    w = np.linalg.eigvalsh(_as_symmetric(m, sym_tol))
    return float(w[0]), float(w[-1])


@dataclass(frozen=True)
class PsdReport:
    lambda_min: float
    lambda_max: float
    cholesky_ok: bool
    cholesky_shift: Optional[float]
    tolerance: float
    verdict: str

    def to_dict(self):
        return asdict(self)


def _cholesky_ok(m):
    try:
        np.linalg.cholesky(m)
    except np.linalg.LinAlgError:
        return False
    return True


def check_psd(m, tolerance=DEFAULT_TOL) -> PsdReport:
    """Classify a symmetric matrix as ``psd``, ``borderline`` or ``not_psd``.

    ``psd`` iff ``lambda_min >= -tolerance * max(1, |lambda_max|)``.  A
    failure is ``borderline`` when ``lambda_min`` is within
    ``BORDERLINE_FACTOR`` times that bound, or when a Cholesky factorization
    still succeeds with a diagonal shift of 0 or ``tolerance``.

    Parameters
    ----------
    m : array_like or GerberMatrix
    tolerance : float
        Relative eigenvalue tolerance; also the Cholesky shift tried.
    """
    if not tolerance > 0:
        raise ValueError("tolerance must be positive")
    sym = _as_symmetric(m)
    lo, hi = symmetric_eigen_extremes(sym)
    shift = None
    eye = np.eye(sym.shape[0])
    for s in (0.0, tolerance):
        if _cholesky_ok(sym + s * eye):
            shift = s
            break
    bound = tolerance * max(1.0, abs(hi))
    if lo >= -bound:
        verdict = "psd"
    elif shift is not None or lo >= -BORDERLINE_FACTOR * bound:
        verdict = "borderline"
    else:
        verdict = "not_psd"
    return PsdReport(lo, hi, shift is not None, shift, tolerance, verdict)


def squared_form_identity(U, D, H):
    """True iff ``H == (U - D)^T (U - D)`` exactly, on raw integer arrays."""
    U = np.asarray(U, dtype=np.int64)
    D = np.asarray(D, dtype=np.int64)
    F = U - D
    return bool(np.array_equal(np.asarray(H, dtype=np.int64), F.T @ F))


def verify_squared_form(ind: IndicatorSet, cm: CountMatrices, n_vectors=64, seed=0):
    """Check ``H = (U-D)^T (U-D) = F^T F`` and ``x^T H x >= 0`` on random ``x``.

    A ``False`` result means an implementation fault, not bad data.
    """
    if cm.H.shape != (ind.K, ind.K):
        raise DimensionError(f"H shape {cm.H.shape} does not match K={ind.K}")
    if not squared_form_identity(ind.U, ind.D, cm.H):
        return False
    if not np.array_equal(_gram(ind.F, ind.F), cm.H):
        return False
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n_vectors, ind.K))
    H = cm.H.astype(np.float64)
    quad = np.einsum("ni,ij,nj->n", X, H, X)
    # |x^T H x - |Fx|^2| is pure rounding, bounded by a few ulps of |x|^2 |H|
    slack = 1e-12 * np.sum(X * X, axis=1) * max(1.0, float(np.abs(H).sum()))
    return bool(np.all(quad >= -slack))


@dataclass(frozen=True)
class SeriesCheck:
    """Outcome of rebuilding GS2 from its geometric series.

    ``errors[n - 1]`` is ``max |S_n - G2|`` for the partial sum of ``n``
    terms; ``terms_used`` is the first ``n`` within tolerance.
    ``cell_terms[i, j]`` is the first ``n`` at which cell (i, j) alone was
    within tolerance.
    """

    terms_used: int
    max_abs_error: float
    x_max: float
    errors: tuple
    partial_sums_psd: bool
    min_partial_lambda: float
    cell_terms: np.ndarray


def series_term_bound(x_max, tol):
    """Upper bound on the terms needed for the geometric tail to fall below ``tol``."""
    if x_max <= 0:
        return 1
    return math.ceil(math.log(tol * (1 - x_max)) / math.log(x_max)) + 1


def verify_series_construction(
    ind: IndicatorSet, g2: GerberMatrix, T=None, tol=1e-10, psd_tol=DEFAULT_TOL,
    max_terms=1_000_000,
) -> SeriesCheck:
    """Rebuild GS2 as ``(F^T F / T) * (1 + X + X*X + ...)`` with ``X = P^T P / T``.

    Products are elementwise.  Partial sums are accumulated until they are
    within ``tol`` of ``g2``; every partial sum is checked for PSD.

    Raises
    ------
    PreconditionError
        If some pair is jointly neutral in every period (``x_ij = 1``).
    """
    T = ind.T if T is None else int(T)
    if g2.values.shape != (ind.K, ind.K):
        raise DimensionError(f"G2 shape {g2.values.shape} does not match K={ind.K}")
    n_nn = _gram(ind.P, ind.P)
    if np.any(n_nn >= T):
        raise PreconditionError("series undefined: some pair is neutral in every period")
    A = _gram(ind.F, ind.F) / T
    X = n_nn / T
    x_max = float(X.max())

    target = g2.values
    total = A.copy()
    term = A.copy()
    errors = []
    cell_terms = np.zeros(target.shape, dtype=np.int64)
    all_psd = True
    min_lam = math.inf
    for n in range(1, max_terms + 1):
        gap = np.abs(total - target)
        err = float(gap.max())
        errors.append(err)
        cell_terms[(cell_terms == 0) & (gap <= tol)] = n
        rep = check_psd(total, psd_tol)
        all_psd &= rep.verdict == "psd"
        min_lam = min(min_lam, rep.lambda_min)
        if err <= tol:
            break
        term = term * X
        total = total + term
    else:
        raise ArithmeticError(f"series did not reach tolerance {tol} in {max_terms} terms")
    return SeriesCheck(n, err, x_max, tuple(errors), all_psd, min_lam, cell_terms)


@dataclass(frozen=True)
class Witness:
    """A return panel whose original Gerber matrix is not PSD."""

    returns: ReturnMatrix
    report: PsdReport
    seed: int
    trial_index: int
    c: float

    @property
    def lambda_min(self):
        return self.report.lambda_min

    def metadata(self):
        return {
            "seed": self.seed,
            "trial_index": self.trial_index,
            "lambda_min": self.report.lambda_min,
            "c": self.c,
            "T": self.returns.T,
            "K": self.returns.K,
            "generator": "mixture",
        }


@dataclass(frozen=True)
class SearchResult:
    witness: Optional[Witness]
    trials_run: int

    @property
    def found(self):
        return self.witness is not None


def original_report(r: ReturnMatrix, c, tolerance=DEFAULT_TOL) -> PsdReport:
    """PSD report of the original statistic computed from ``r``."""
    return check_psd(gerber_original(analyze(r, c).counts), tolerance)


def find_non_psd_original(trials, T, K, c=0.5, seed=0, threshold=WITNESS_LAMBDA) -> SearchResult:
    """Search seeded random panels for a non-PSD original Gerber matrix.

    Trial ``i`` draws from the ``mixture`` generator of ``simulate`` with
    ``trial_rng(seed, i)``, so any trial can be replayed on its own.
    Returns the first panel whose smallest eigenvalue is below
    ``threshold``.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    for i in range(trials):
        r = random_returns(trial_rng(seed, i), T, K, "mixture")
        rep = original_report(r, c)
        if rep.lambda_min < threshold:
            return SearchResult(Witness(r, rep, seed, i, c), i + 1)
    return SearchResult(None, trials)


def non_psd_rate(trials, T, K, c=0.5, seed=0, threshold=WITNESS_LAMBDA):
    """Fraction of generator draws whose original Gerber matrix is not PSD."""
    hits = sum(
        original_report(random_returns(trial_rng(seed, i), T, K, "mixture"), c).lambda_min
        < threshold
        for i in range(trials)
    )
    return hits / trials


def save_witness(w: Witness, stem):
    """Write ``<stem>.csv`` (returns) and ``<stem>.json`` (metadata)."""
    stem = Path(stem)
    save_returns(w.returns, stem.with_suffix(".csv"))
    stem.with_suffix(".json").write_text(
        json.dumps(w.metadata(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return stem.with_suffix(".csv"), stem.with_suffix(".json")


def load_witness(stem):
    """Read a saved witness back and recompute its PSD report."""
    stem = Path(stem)
    meta = json.loads(stem.with_suffix(".json").read_text(encoding="utf-8"))
    r = load_returns(stem.with_suffix(".csv"))
    rep = original_report(r, meta["c"])
    return Witness(r, rep, meta["seed"], meta["trial_index"], meta["c"]), meta
