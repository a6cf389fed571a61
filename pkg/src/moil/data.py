"""Sensor data model: periods, normalization, symbolization, windowing.

A *period* is one complete work cycle recorded by a multi-axis sensor.  All
downstream stages (motif mining, pretraining, classification) consume periods
through this module.  The on-disk format is a plain CSV:

    worker_id,period_id,t,<axis_0>,...,<axis_{A-1}>[,label]

with rows sorted by (worker_id, period_id, t), ``t`` a 0-based sample index,
and an optional non-negative integer class label per row.  Lines starting
with ``#`` are treated as comments (pipeline commands embed their config
hash and seed this way).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError


@dataclass(eq=False)
class Period:
    """One work cycle: a [T x A] value matrix plus optional per-step labels."""

    worker_id: str
    period_id: str
    values: np.ndarray  # [T, A] float64
    sample_rate_hz: float
    labels: np.ndarray | None = None  # [T] int64 class ids, or None

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2:
            raise DataError(f"period {self.period_id!r}: values must be [T x A]")
        if self.values.shape[0] < 1 or self.values.shape[1] < 1:
            raise DataError(f"period {self.period_id!r}: T and A must be >= 1")
        if not np.isfinite(self.values).all():
            raise DataError(f"period {self.period_id!r}: non-finite sensor value")
        if self.sample_rate_hz <= 0:
            raise DataError(f"period {self.period_id!r}: sample rate must be positive")
        if self.labels is not None:
            self.labels = np.asarray(self.labels, dtype=np.int64)
            if self.labels.shape != (self.values.shape[0],):
                raise DataError(
                    f"period {self.period_id!r}: labels length {self.labels.shape} "
                    f"does not match T={self.values.shape[0]}"
                )
            if (self.labels < 0).any():
                raise DataError(f"period {self.period_id!r}: negative class label")

    @property
    def num_steps(self) -> int:
        return self.values.shape[0]

    @property
    def num_axes(self) -> int:
        return self.values.shape[1]


@dataclass(eq=False)
class Dataset:
    """Ordered collection of periods with an unlabeled/labeled role split.

    ``unlabeled_ids`` and ``labeled_ids`` partition the periods by role.  By
    default the two sets are disjoint; the experiment protocols deliberately
    reuse training periods for both roles and pass ``allow_overlap=True``.
    """

    periods: list[Period]
    unlabeled_ids: list[str] = field(default_factory=list)
    labeled_ids: list[str] = field(default_factory=list)
    allow_overlap: bool = False

    def __post_init__(self) -> None:
        if not self.periods:
            raise DataError("dataset has no periods")
        ids = [p.period_id for p in self.periods]
        if len(set(ids)) != len(ids):
            raise DataError("duplicate period_id in dataset")
        axes = {p.num_axes for p in self.periods}
        if len(axes) != 1:
            raise DataError(f"periods disagree on axis count: {sorted(axes)}")
        rates = {p.sample_rate_hz for p in self.periods}
        if len(rates) != 1:
            raise DataError(f"periods disagree on sample rate: {sorted(rates)}")
        if not self.unlabeled_ids and not self.labeled_ids:
            # Default role assignment: labeled periods form D_l, the rest D_u.
            self.labeled_ids = [p.period_id for p in self.periods if p.labels is not None]
            self.unlabeled_ids = [p.period_id for p in self.periods if p.labels is None]
            if not self.unlabeled_ids:
                self.unlabeled_ids = list(self.labeled_ids)
                self.allow_overlap = True
        known = set(ids)
        for pid in list(self.unlabeled_ids) + list(self.labeled_ids):
            if pid not in known:
                raise DataError(f"role partition references unknown period {pid!r}")
        if set(self.unlabeled_ids) | set(self.labeled_ids) != known:
            raise DataError("role partition does not cover all periods")
        overlap = set(self.unlabeled_ids) & set(self.labeled_ids)
        if overlap and not self.allow_overlap:
            raise DataError(f"unlabeled/labeled sets overlap: {sorted(overlap)[:3]}")
        self._by_id = {p.period_id: p for p in self.periods}

    def get(self, period_id: str) -> Period:
        try:
            return self._by_id[period_id]
        except KeyError:
            raise DataError(f"unknown period {period_id!r}") from None

    def unlabeled_periods(self) -> list[Period]:
        return [self.get(pid) for pid in self.unlabeled_ids]

    def labeled_periods(self) -> list[Period]:
        return [self.get(pid) for pid in self.labeled_ids]

    def worker_ids(self) -> list[str]:
        seen: list[str] = []
        for p in self.periods:
            if p.worker_id not in seen:
                seen.append(p.worker_id)
        return seen

    def periods_of_worker(self, worker_id: str) -> list[Period]:
        return [p for p in self.periods if p.worker_id == worker_id]

    @property
    def num_axes(self) -> int:
        return self.periods[0].num_axes

    @property
    def sample_rate_hz(self) -> float:
        return self.periods[0].sample_rate_hz


@dataclass(eq=False)
class SymbolicSeries:
    """Per-axis discrete symbol sequence derived from a normalized period."""

    period_id: str
    symbols: np.ndarray  # [T, A] int64, entries in 0..K-1
    alphabet_size: int

    def __post_init__(self) -> None:
        self.symbols = np.asarray(self.symbols, dtype=np.int64)
        if self.symbols.ndim != 2:
            raise DataError("symbols must be [T x A]")
        if self.alphabet_size < 2:
            raise DataError("alphabet size must be >= 2")
        if self.symbols.size and (
            self.symbols.min() < 0 or self.symbols.max() >= self.alphabet_size
        ):
            raise DataError("symbol outside alphabet range")

    @property
    def num_steps(self) -> int:
        return self.symbols.shape[0]

    @property
    def num_axes(self) -> int:
        return self.symbols.shape[1]


@dataclass(eq=False)
class Window:
    """A view of ``length`` consecutive steps of one period.

    ``targets`` optionally carries the aligned rows of the period's
    similarity-series target matrix.
    """

    period_id: str
    start: int
    length: int
    values: np.ndarray  # [l, A]
    labels: np.ndarray | None = None  # [l]
    targets: np.ndarray | None = None  # [l, n]


# ---------------------------------------------------------------------------
# CSV i/o
# ---------------------------------------------------------------------------

RESERVED_COLUMNS = ("worker_id", "period_id", "t", "label")


def load_csv(path, schema: dict | None = None) -> Dataset:
    """Load a dataset from CSV.

    Parameters
    ----------
    path : str or Path
        CSV file with the schema documented in the module docstring.
    schema : dict, optional
        Column-map overrides.  Recognized keys: ``worker_id``, ``period_id``,
        ``t``, ``label`` (column names), ``axes`` (explicit list of axis
        column names), ``sample_rate_hz`` (float, default 30.0).

    Raises
    ------
    DataError
        On a missing column, a non-numeric cell (the error names the row and
        column), or an empty file.
    """
    schema = dict(schema or {})
    col_worker = schema.pop("worker_id", "worker_id")
    col_period = schema.pop("period_id", "period_id")
    col_t = schema.pop("t", "t")
    col_label = schema.pop("label", "label")
    axes_cols = schema.pop("axes", None)
    sample_rate = float(schema.pop("sample_rate_hz", 30.0))
    if schema:
        raise DataError(f"unknown schema keys: {sorted(schema)}")

    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(row for row in fh if not row.startswith("#"))
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        for col in (col_period, col_t):
            if col not in header:
                raise DataError(f"{path}: missing column {col!r}")
        has_worker = col_worker in header
        has_label = col_label in header
        if axes_cols is None:
            axes_cols = [
                c
                for c in header
                if c not in (col_worker, col_period, col_t, col_label)
            ]
        if not axes_cols:
            raise DataError(f"{path}: no axis columns found")
        for col in axes_cols:
            if col not in header:
                raise DataError(f"{path}: missing axis column {col!r}")
        idx = {c: header.index(c) for c in header}

        groups: dict[tuple[str, str], dict] = {}
        order: list[tuple[str, str]] = []
        for row_num, row in enumerate(reader, start=2):
            if not row:
                continue
            worker = row[idx[col_worker]] if has_worker else "w0"
            pid = row[idx[col_period]]
            key = (worker, pid)
            if key not in groups:
                groups[key] = {"values": [], "labels": [] if has_label else None}
                order.append(key)
            vals = []
            for col in axes_cols:
                cell = row[idx[col]]
                try:
                    vals.append(float(cell))
                except ValueError:
                    raise DataError(
                        f"{path}: non-numeric value {cell!r} at row {row_num}, "
                        f"column {col!r}"
                    ) from None
            groups[key]["values"].append(vals)
            if has_label:
                cell = row[idx[col_label]]
                try:
                    groups[key]["labels"].append(int(cell))
                except ValueError:
                    raise DataError(
                        f"{path}: non-integer label {cell!r} at row {row_num}"
                    ) from None

    if not order:
        raise DataError(f"{path}: no data rows")

    pids = [pid for _, pid in order]
    if len(set(pids)) != len(pids):
        raise DataError(f"{path}: period_id reused across workers")

    periods = [
        Period(
            worker_id=worker,
            period_id=pid,
            values=np.array(groups[(worker, pid)]["values"], dtype=np.float64),
            sample_rate_hz=sample_rate,
            labels=(
                np.array(groups[(worker, pid)]["labels"], dtype=np.int64)
                if has_label
                else None
            ),
        )
        for worker, pid in order
    ]
    return Dataset(periods=periods)


def save_csv(dataset: Dataset, path, header_comment: str | None = None) -> None:
    """Write a dataset in the standard CSV schema.

    Floats are written with ``repr`` so decimal-exact inputs round-trip
    bit-for-bit through :func:`load_csv`.
    """
    has_label = any(p.labels is not None for p in dataset.periods)
    n_axes = dataset.num_axes
    with open(path, "w", newline="", encoding="utf-8") as fh:
        if header_comment:
            fh.write(f"# {header_comment}\n")
        writer = csv.writer(fh)
        cols = ["worker_id", "period_id", "t"] + [f"axis_{a}" for a in range(n_axes)]
        if has_label:
            cols.append("label")
        writer.writerow(cols)
        for p in dataset.periods:
            for t in range(p.num_steps):
                row = [p.worker_id, p.period_id, str(t)]
                row += [repr(float(v)) for v in p.values[t]]
                if has_label:
                    row.append(str(int(p.labels[t])) if p.labels is not None else "")
                writer.writerow(row)


# ---------------------------------------------------------------------------
# Normalization, symbolization, windowing
# ---------------------------------------------------------------------------


def minmax_normalize(period: Period) -> Period:
    """Min-max normalize each axis of a period independently to [0, 1].

    A degenerate axis (max == min) maps to all zeros.  The operation is
    idempotent: normalizing an already-normalized period is a no-op.
    """
    values = period.values
    if not np.isfinite(values).all():
        raise DataError(f"period {period.period_id!r}: non-finite value")
    lo = values.min(axis=0)
    hi = values.max(axis=0)
    span = hi - lo
    out = np.zeros_like(values)
    ok = span > 0
    out[:, ok] = (values[:, ok] - lo[ok]) / span[ok]
    return Period(
        worker_id=period.worker_id,
        period_id=period.period_id,
        values=out,
        sample_rate_hz=period.sample_rate_hz,
        labels=None if period.labels is None else period.labels.copy(),
    )


def symbolize(period: Period, alphabet_size: int) -> SymbolicSeries:
    """Discretize a normalized period into equal-width bins over [0, 1].

    symbol = min(floor(v * K), K - 1), applied per axis.  The caller must
    normalize first; values outside [0, 1] are rejected.
    """
    if alphabet_size < 2:
        raise DataError("alphabet size must be >= 2")
    values = period.values
    if values.min() < 0.0 or values.max() > 1.0:
        raise DataError(
            f"period {period.period_id!r}: values outside [0,1]; normalize first"
        )
    symbols = np.minimum(
        np.floor(values * alphabet_size).astype(np.int64), alphabet_size - 1
    )
    return SymbolicSeries(
        period_id=period.period_id, symbols=symbols, alphabet_size=alphabet_size
    )


def window_segments(num_steps: int, length: int, step: int) -> list[tuple[int, int]]:
    """Sliding-window start offsets: (start, length) pairs.

    Starts at 0, step, 2*step, ... while start + length <= num_steps; a
    trailing remainder shorter than ``length`` is dropped.  Returns an empty
    list when the series is shorter than one window.
    """
    if length < 1 or step < 1:
        raise DataError("window length and step must be >= 1")
    if num_steps < length:
        return []
    return [(start, length) for start in range(0, num_steps - length + 1, step)]


def cut_windows(
    period: Period,
    length: int,
    step: int,
    targets: np.ndarray | None = None,
) -> list[Window]:
    """Cut a period (and optionally its aligned target matrix) into windows."""
    if targets is not None and targets.shape[0] != period.num_steps:
        raise DataError(
            f"period {period.period_id!r}: target rows {targets.shape[0]} "
            f"!= T={period.num_steps}"
        )
    out = []
    for start, l in window_segments(period.num_steps, length, step):
        out.append(
            Window(
                period_id=period.period_id,
                start=start,
                length=l,
                values=period.values[start : start + l],
                labels=None if period.labels is None else period.labels[start : start + l],
                targets=None if targets is None else targets[start : start + l],
            )
        )
    return out
