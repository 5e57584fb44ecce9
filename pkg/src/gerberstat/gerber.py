"""Gerber co-movement matrices.

Three variants are provided, all built from the nine-region counts of each
asset pair:

``original``
    (concordant - discordant) / (concordant + discordant)
``gs1``
    (concordant - discordant) / sqrt(piercings_i * piercings_j)
``gs2``
    (concordant - discordant) / (T - jointly neutral periods)

Every count is an exact integer; the only floating step is the final
division.  Each variant has a matrix-product route (``gerber_original``,
``gerber_gs1``, ``gerber_gs2``) and a per-pair loop (``gerber_oracle``) that
exists to check it.
"""

import io
import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import DimensionError, InputError, PreconditionError
from .indicators import IndicatorSet, ThresholdVector, build_indicators
from .ingest import ReturnMatrix

VARIANTS = ("original", "gs1", "gs2")

# Agreement required between the two GS1 matrix forms.
GS1_FORM_TOL = 1e-12


def joint_observation(r_ti, r_tj, h_i, h_j):
    """+1 for a same-direction joint piercing, -1 for opposite, else 0."""
    if not (h_i > 0 and h_j > 0):
        raise InputError("thresholds must be positive")
    i_up, i_down = r_ti >= h_i, r_ti <= -h_i
    j_up, j_down = r_tj >= h_j, r_tj <= -h_j
    if (i_up and j_up) or (i_down and j_down):
        return 1
    if (i_up and j_down) or (i_down and j_up):
        return -1
    return 0


@dataclass(frozen=True)
class PairCounts:
    """Observations of one asset pair in each cell of the 3 x 3 grid.

    The first letter is asset i's state and the second asset j's:
    u (up), n (neutral), d (down).
    """

    n_uu: int = 0
    n_un: int = 0
    n_ud: int = 0
    n_nu: int = 0
    n_nn: int = 0
    n_nd: int = 0
    n_du: int = 0
    n_dn: int = 0
    n_dd: int = 0

    @property
    def total(self):
        return sum(self.as_grid().ravel().tolist())

    @property
    def concordant(self):
        return self.n_uu + self.n_dd

    @property
    def discordant(self):
        return self.n_ud + self.n_du

    @property
    def piercings_i(self):
        return self.n_uu + self.n_un + self.n_ud + self.n_du + self.n_dn + self.n_dd

    @property
    def piercings_j(self):
        return self.n_uu + self.n_nu + self.n_ud + self.n_du + self.n_nd + self.n_dd

    def as_grid(self):
        """Counts laid out with asset i's state on rows (U, N, D)."""
        return np.array(
            [
                [self.n_uu, self.n_un, self.n_ud],
                [self.n_nu, self.n_nn, self.n_nd],
                [self.n_du, self.n_dn, self.n_dd],
            ],
            dtype=np.int64,
        )

    def transposed(self):
        return PairCounts(
            n_uu=self.n_uu, n_un=self.n_nu, n_ud=self.n_du,
            n_nu=self.n_un, n_nn=self.n_nn, n_nd=self.n_dn,
            n_du=self.n_ud, n_dn=self.n_nd, n_dd=self.n_dd,
        )


def _state(ind, t, k):
    if ind.U[t, k]:
        return "u"
    if ind.D[t, k]:
        return "d"
    return "n"


def pair_counts(ind: IndicatorSet, i: int, j: int) -> PairCounts:
    """Count the periods falling in each region for assets ``i`` and ``j``.

    A plain loop over periods; this is the reference the matrix products
    are tested against.
    """
    for idx in (i, j):
        if not 0 <= idx < ind.K:
            raise IndexError(f"asset index {idx} out of range for K={ind.K}")
    counts = dict.fromkeys(
        ("n_uu", "n_un", "n_ud", "n_nu", "n_nn", "n_nd", "n_du", "n_dn", "n_dd"), 0
    )
    for t in range(ind.T):
        counts["n_" + _state(ind, t, i) + _state(ind, t, j)] += 1
    return PairCounts(**counts)


def _gram(A, B):
    """Exact ``A.T @ B`` for small-integer matrices.

    Goes through float64 BLAS; every partial sum is an integer well below
    2**53 so the product is exact.
    """
    prod = np.asarray(A, dtype=np.float64).T @ np.asarray(B, dtype=np.float64)
    return np.rint(prod).astype(np.int64)


@dataclass(frozen=True)
class CountMatrices:
    """K x K integer count matrices for every asset pair.

    ``H = N_conc - N_disc`` is the shared numerator of all three variants
    and ``N_nn`` counts jointly neutral periods.
    """

    N_uu: np.ndarray
    N_dd: np.ndarray
    N_conc: np.ndarray
    N_disc: np.ndarray
    H: np.ndarray
    N_nn: np.ndarray
    T: int
    asset_labels: tuple = ()
    c: float = float("nan")

    @property
    def K(self):
        return self.H.shape[0]

    @property
    def piercings(self):
        return np.diag(self.H).copy()


def count_matrices(ind: IndicatorSet) -> CountMatrices:
    """All pairwise counts as integer matrix products of the indicators."""
    n_uu = _gram(ind.U, ind.U)
    n_dd = _gram(ind.D, ind.D)
    ud = _gram(ind.U, ind.D)
    n_conc = n_uu + n_dd
    n_disc = ud + ud.T
    mats = dict(
        N_uu=n_uu,
        N_dd=n_dd,
        N_conc=n_conc,
        N_disc=n_disc,
        H=n_conc - n_disc,
        N_nn=_gram(ind.P, ind.P),
    )
    for m in mats.values():
        m.setflags(write=False)
    return CountMatrices(**mats, T=ind.T, asset_labels=ind.asset_labels, c=ind.c)


@dataclass(frozen=True)
class GerberMatrix:
    """A K x K Gerber matrix with its provenance.

    ``convention_cells`` lists the (i, j), i <= j, cells of the original
    statistic whose value came from the 0/0 convention rather than data.
    """

    variant: str
    values: np.ndarray
    c: float
    T: int
    asset_labels: tuple
    convention_cells: tuple = field(default=())

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}; expected one of {VARIANTS}")
        values = np.array(self.values, dtype=np.float64)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def K(self):
        return self.values.shape[0]


def _labels_of(cm, idx):
    labels = cm.asset_labels or tuple(f"A{i + 1}" for i in range(cm.K))
    return [labels[i] for i in idx]


def gerber_original(cm: CountMatrices) -> GerberMatrix:
    """(N_conc - N_disc) / (N_conc + N_disc), elementwise.

    Pairs that never pierce together (0/0) are set to 0 off the diagonal
    and 1 on it, and reported in ``convention_cells``.
    """
    num = cm.N_conc - cm.N_disc
    den = cm.N_conc + cm.N_disc
    empty = den == 0
    with np.errstate(divide="ignore", invalid="ignore"):
        g = np.where(empty, 0.0, num / np.where(empty, 1, den))
    np.fill_diagonal(g, np.where(np.diag(empty), 1.0, np.diag(g)))
    cells = tuple((int(i), int(j)) for i, j in zip(*np.nonzero(np.triu(empty))))
    return GerberMatrix("original", g, cm.c, cm.T, cm.asset_labels, cells)


def gerber_gs1(cm: CountMatrices) -> GerberMatrix:
    """H / (h h^T) with ``h = sqrt(diag(H))``, cross-checked against J^T H J.

    Raises
    ------
    PreconditionError
        If any asset never pierces its threshold (zero diagonal of H).
    """
    pierce = np.diag(cm.H)
    dead = np.flatnonzero(pierce == 0)
    if len(dead):
        names = _labels_of(cm, dead)
        raise PreconditionError(
            "gs1 undefined: asset(s) never pierce their threshold: " + ", ".join(names),
            labels=names,
        )
    # sqrt of the exact integer product keeps |g| <= 1 and diag == 1 exactly
    g = cm.H / np.sqrt(np.outer(pierce, pierce).astype(np.float64))

    J = np.diag(1.0 / np.sqrt(pierce.astype(np.float64)))
    g_alt = J.T @ cm.H.astype(np.float64) @ J
    gap = float(np.max(np.abs(g - g_alt)))
    if gap > GS1_FORM_TOL:
        raise ArithmeticError(f"gs1 matrix forms disagree by {gap:.3e}")
    return GerberMatrix("gs1", g, cm.c, cm.T, cm.asset_labels)


def gerber_gs2(cm: CountMatrices, n_nn=None, T=None) -> GerberMatrix:
    """H / (T - N_nn), elementwise.

    ``n_nn`` and ``T`` default to the jointly-neutral counts and period
    count carried by ``cm``.

    Raises
    ------
    PreconditionError
        If some pair is jointly neutral in every period.
    """
    n_nn = cm.N_nn if n_nn is None else np.asarray(n_nn, dtype=np.int64)
    T = cm.T if T is None else int(T)
    if n_nn.shape != cm.H.shape:
        raise DimensionError(f"N_nn shape {n_nn.shape} does not match {cm.H.shape}")
    den = T - n_nn
    bad = np.argwhere(np.triu(den <= 0))
    if len(bad):
        pairs = [tuple(_labels_of(cm, (i, j))) for i, j in bad]
        shown = ", ".join(f"({a}, {b})" for a, b in pairs[:10])
        more = f" and {len(pairs) - 10} more" if len(pairs) > 10 else ""
        raise PreconditionError(
            f"gs2 undefined: pair(s) neutral in all {T} periods: {shown}{more}",
            labels=sorted({a for p in pairs for a in p}),
            pairs=pairs,
        )
    return GerberMatrix("gs2", cm.H / den, cm.c, T, cm.asset_labels)


def gerber_matrix(cm: CountMatrices, variant: str) -> GerberMatrix:
    if variant == "original":
        return gerber_original(cm)
    if variant == "gs1":
        return gerber_gs1(cm)
    if variant == "gs2":
        return gerber_gs2(cm)
    raise ValueError(f"unknown variant {variant!r}; expected one of {VARIANTS}")


def gerber_oracle(r: ReturnMatrix, th: ThresholdVector, variant: str) -> GerberMatrix:
    """Per-pair, per-period evaluation of a variant straight from its definition.

    Numerators are sums of joint observations taken from the raw returns,
    denominators come from ``pair_counts``.  No matrix products are used.
    Slow (K^2 T Python steps); meant as a reference.
    """
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}; expected one of {VARIANTS}")
    if len(th) != r.K:
        raise DimensionError(f"{len(th)} thresholds for {r.K} assets")
    ind = build_indicators(r, th)
    K, T = r.K, r.T
    x = r.values.tolist()
    h = th.h.tolist()
    g = np.zeros((K, K))
    cells = []
    never = []
    all_neutral = []
    for i in range(K):
        for j in range(i, K):
            m = [joint_observation(x[t][i], x[t][j], h[i], h[j]) for t in range(T)]
            m_sum = sum(m)
            pc = pair_counts(ind, i, j)
            if variant == "original":
                den = sum(abs(v) for v in m)
                if den == 0:
                    val = 1.0 if i == j else 0.0
                    cells.append((i, j))
                else:
                    val = m_sum / den
            elif variant == "gs1":
                n_a, n_b = pc.piercings_i, pc.piercings_j
                if n_a == 0 or n_b == 0:
                    if i == j:
                        never.append(r.asset_labels[i])
                    continue
                val = m_sum / math.sqrt(n_a * n_b)
            else:
                den = T - pc.n_nn
                if den == 0:
                    all_neutral.append((r.asset_labels[i], r.asset_labels[j]))
                    continue
                val = m_sum / den
            g[i, j] = g[j, i] = val
    if never:
        raise PreconditionError(
            "gs1 undefined: asset(s) never pierce their threshold: " + ", ".join(never),
            labels=never,
        )
    if all_neutral:
        raise PreconditionError(
            f"gs2 undefined: pair(s) neutral in all {T} periods: "
            + ", ".join(f"({a}, {b})" for a, b in all_neutral),
            labels=sorted({a for p in all_neutral for a in p}),
            pairs=all_neutral,
        )
    return GerberMatrix(variant, g, th.c, T, r.asset_labels, tuple(cells))


def covariance_from_gerber(g, sigmas) -> np.ndarray:
    """``diag(sigma) @ G @ diag(sigma)``; PSD whenever ``G`` is."""
    G = g.values if isinstance(g, GerberMatrix) else np.asarray(g, dtype=np.float64)
    sigmas = np.asarray(sigmas, dtype=np.float64)
    if G.ndim != 2 or G.shape[0] != G.shape[1] or sigmas.shape != (G.shape[0],):
        raise DimensionError(f"matrix {G.shape} and sigma {sigmas.shape} do not conform")
    if not np.all(sigmas > 0):
        raise InputError("standard deviations must all be positive")
    # the outer product is exactly symmetric, so the result is too
    return G * np.outer(sigmas, sigmas)


def format_matrix_csv(values, labels, corner="asset"):
    """Labelled square matrix as CSV with 17 significant digits."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([corner, *labels])
    for label, row in zip(labels, values):
        w.writerow([label, *("%.17g" % v for v in row)])
    return buf.getvalue()


def to_csv(g: GerberMatrix) -> str:
    return format_matrix_csv(g.values, g.asset_labels)


def to_dict(g: GerberMatrix) -> dict:
    """JSON-ready report of the matrix and its provenance."""
    return {
        "variant": g.variant,
        "c": g.c,
        "T": g.T,
        "K": g.K,
        "labels": list(g.asset_labels),
        "matrix": g.values.tolist(),
        "convention_cells": [
            [g.asset_labels[i], g.asset_labels[j]] for i, j in g.convention_cells
        ],
    }
