"""Loading and validating per-period return panels.

Returns may be simple or log returns; nothing downstream depends on which,
because only threshold exceedances are counted.
"""

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .exceptions import (
    DuplicateLabelError,
    EmptyFileError,
    InvalidCellError,
    RaggedRowsError,
    TooFewPeriodsError,
    ZeroVarianceError,
)

# Denominator offset for the sample standard deviation (T - 1).
SIGMA_DDOF = 1


def default_labels(k):
    return tuple(f"A{i + 1}" for i in range(k))


@dataclass(frozen=True)
class ReturnMatrix:
    """T x K panel of returns with asset (column) labels.

    Parameters
    ----------
    values : array_like, shape (T, K)
        Finite real returns, one row per period.
    asset_labels : sequence of str, optional
        Distinct column identifiers. Defaults to ``A1..AK``.
    period_labels : sequence of str, optional
        Row identifiers, carried through untouched.
    """

    values: np.ndarray
    asset_labels: tuple = ()
    period_labels: Optional[tuple] = None

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise InvalidCellError(f"return matrix must be 2-D, got {values.ndim}-D")
        T, K = values.shape
        if K < 1:
            raise EmptyFileError("return matrix has no columns")
        if T < 2:
            raise TooFewPeriodsError(f"need at least 2 periods, got T={T} (T < 2)")
        bad = np.argwhere(~np.isfinite(values))
        if len(bad):
            t, k = bad[0]
            raise InvalidCellError(
                f"non-finite return at period {t + 1}, column {k + 1}",
                row=int(t) + 1,
                column=int(k) + 1,
            )
        labels = tuple(str(a) for a in self.asset_labels) or default_labels(K)
        if len(labels) != K:
            raise DuplicateLabelError(f"{len(labels)} asset labels for {K} columns")
        _check_distinct(labels)
        periods = None
        if self.period_labels is not None:
            periods = tuple(str(p) for p in self.period_labels)
            if len(periods) != T:
                raise RaggedRowsError(f"{len(periods)} period labels for {T} rows")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "asset_labels", labels)
        object.__setattr__(self, "period_labels", periods)

    @property
    def T(self):
        return self.values.shape[0]

    @property
    def K(self):
        return self.values.shape[1]


def _check_distinct(labels):
    seen = set()
    dupes = []
    for a in labels:
        if a in seen and a not in dupes:
            dupes.append(a)
        seen.add(a)
    if dupes:
        raise DuplicateLabelError("duplicate asset labels: " + ", ".join(dupes))


@dataclass(frozen=True)
class IngestOptions:
    """How to read a returns file.

    ``period_column`` means the first column holds period labels rather
    than returns.
    """

    delimiter: str = ","
    header: bool = True
    period_column: bool = False


def _parse_float(cell):
    s = cell.strip()
    if not s:
        raise ValueError("empty cell")
    x = float(s)
    if not math.isfinite(x):
        raise ValueError("non-finite value")
    return x


def parse_returns(text, options=IngestOptions(), source="<string>"):
    """Parse CSV text into a ``ReturnMatrix``. See ``load_returns``."""
    rows = [
        (lineno, row)
        for lineno, row in enumerate(
            csv.reader(io.StringIO(text), delimiter=options.delimiter), start=1
        )
        if row and any(c.strip() for c in row)
    ]
    if not rows:
        raise EmptyFileError(f"{source}: file is empty")

    labels = None
    if options.header:
        _, head = rows[0]
        rows = rows[1:]
        labels = [c.strip() for c in head]
        if options.period_column:
            labels = labels[1:]
        if not rows:
            raise TooFewPeriodsError(f"{source}: no data rows after header (T < 2)")

    width = len(labels) if labels is not None else len(rows[0][1]) - options.period_column
    offset = 1 if options.period_column else 0
    periods = [] if options.period_column else None
    data = []
    for lineno, row in rows:
        if len(row) - offset != width:
            raise RaggedRowsError(
                f"{source}:{lineno}: expected {width + offset} fields, got {len(row)}"
            )
        if periods is not None:
            periods.append(row[0].strip())
        parsed = []
        for col, cell in enumerate(row[offset:], start=offset + 1):
            try:
                parsed.append(_parse_float(cell))
            except ValueError:
                name = f" ({labels[col - offset - 1]})" if labels else ""
                raise InvalidCellError(
                    f"{source}:{lineno}:{col}: cannot use {cell.strip()!r}{name} "
                    "as a finite return",
                    row=lineno,
                    column=col,
                ) from None
        data.append(parsed)

    if width < 1:
        raise EmptyFileError(f"{source}: no return columns")
    if len(data) < 2:
        raise TooFewPeriodsError(f"{source}: need at least 2 data rows, got {len(data)} (T < 2)")
    if labels is not None and any(not a for a in labels):
        raise DuplicateLabelError(f"{source}: empty asset label in header")
    try:
        return ReturnMatrix(np.array(data), tuple(labels or ()), periods)
    except DuplicateLabelError as exc:
        raise DuplicateLabelError(f"{source}: {exc}") from None


def load_returns(path, options=IngestOptions()):
    """Read a delimited returns file.

    Parameters
    ----------
    path : str or Path
        UTF-8 text file, one row per period.
    options : IngestOptions
        Delimiter, header presence and whether column 1 holds period labels.

    Returns
    -------
    ReturnMatrix
        Columns in file order. Labels come from the header or are
        synthesized as ``A1..AK``.

    Raises
    ------
    InputError
        One subclass per failure (empty file, ragged rows, bad cell,
        duplicate labels, T < 2); messages carry file:line:column.
    """
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    return parse_returns(text, options, source=str(path))


def format_returns(r, delimiter=","):
    """Serialize to CSV text that ``parse_returns`` reads back bit-exactly."""
    buf = io.StringIO()
    w = csv.writer(buf, delimiter=delimiter, lineterminator="\n")
    head = list(r.asset_labels)
    if r.period_labels is not None:
        head = ["period"] + head
    w.writerow(head)
    for t in range(r.T):
        row = [repr(float(x)) for x in r.values[t]]
        if r.period_labels is not None:
            row = [r.period_labels[t]] + row
        w.writerow(row)
    return buf.getvalue()


def save_returns(r, path, delimiter=","):
    Path(path).write_text(format_returns(r, delimiter), encoding="utf-8")


def options_for(r):
    """Ingest options matching what ``format_returns`` wrote for ``r``."""
    return IngestOptions(header=True, period_column=r.period_labels is not None)


def sample_std(values, ddof=SIGMA_DDOF):
    values = np.asarray(values, dtype=np.float64)
    return values.std(axis=0, ddof=ddof)


def validate_for_thresholding(r: ReturnMatrix) -> np.ndarray:
    """Per-column sample standard deviations (denominator T - 1).

    Raises
    ------
    ZeroVarianceError
        If any column is constant; its threshold would be zero and the
        up/down cases would overlap.
    """
    sigmas = sample_std(r.values)
    # constant columns can leave a rounding residue in the floating std
    constant = np.all(r.values == r.values[0], axis=0)
    flat = [a for a, s, k in zip(r.asset_labels, sigmas, constant) if k or not s > 0.0]
    if flat:
        raise ZeroVarianceError(
            "zero-variance (constant) column(s): " + ", ".join(flat), labels=flat
        )
    return sigmas

