"""Motif mining and similarity-series construction.

The pretext targets are built in four steps:

1. symbolize one randomly chosen *initial* period and slide fixed-step
   windows of several sizes across it to produce candidate motifs;
2. for a motif and a period, compute the raw similarity series: at every
   offset, the negated count of mismatching symbols between the motif and
   the co-located segment, per axis;
3. average over axes and min-max normalize with the min/max pooled over all
   unlabeled periods, so channel values stay comparable across periods;
4. pick one key motif per temporal segment group of the initial period and
   stack the n finalized series into a [T x n] target per period.
"""

from __future__ import annotations

import hashlib
import json
import warnings
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .data import Dataset, SymbolicSeries, minmax_normalize, symbolize
from .errors import DataError, MotifError


class UninformativeMotifWarning(UserWarning):
    """A motif whose distance is constant over every period carries no signal."""


@dataclass(eq=False)
class Motif:
    """Fixed-length symbolic sub-sequence with provenance."""

    symbols: np.ndarray  # [L, A] int64
    source_period_id: str
    source_offset: int
    segment_group: int

    def __post_init__(self) -> None:
        self.symbols = np.asarray(self.symbols, dtype=np.int64)
        if self.symbols.ndim != 2 or self.symbols.shape[0] < 1:
            raise DataError("motif symbols must be a non-empty [L x A] matrix")

    @property
    def length(self) -> int:
        return self.symbols.shape[0]


@dataclass(eq=False)
class SimilaritySeries:
    """Per-period [T x n] matrix of normalized motif similarities."""

    period_id: str
    values: np.ndarray  # [T, n] float64 in [0, 1]

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2:
            raise DataError("similarity series must be [T x n]")
        if self.values.size and (self.values.min() < 0.0 or self.values.max() > 1.0):
            raise DataError("similarity values outside [0, 1]")


def generate_candidates(
    sym: SymbolicSeries,
    window_sizes: list[int],
    step: int,
    num_groups: int,
) -> list[Motif]:
    """Slide fixed-step windows of each size across the initial period.

    Every candidate is tagged with its segment group
    floor(offset * num_groups / T), clamped to num_groups - 1, so selection
    can later pick one motif per temporal region.
    """
    if not window_sizes:
        raise MotifError("window_sizes must not be empty")
    if step < 1:
        raise MotifError("candidate step must be >= 1")
    if num_groups < 1:
        raise MotifError("number of segment groups must be >= 1")
    T = sym.num_steps
    for w in window_sizes:
        if w < 1 or w > T:
            raise MotifError(f"window size {w} invalid for period of length {T}")
    out: list[Motif] = []
    for w in window_sizes:
        for offset in range(0, T - w + 1, step):
            group = min(offset * num_groups // T, num_groups - 1)
            out.append(
                Motif(
                    symbols=sym.symbols[offset : offset + w].copy(),
                    source_period_id=sym.period_id,
                    source_offset=offset,
                    segment_group=group,
                )
            )
    return out


def symbol_distance(a: np.ndarray, b: np.ndarray, axis: int) -> int:
    """Count positions where two equal-length symbol blocks differ on one axis."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape[0] != b.shape[0]:
        raise DataError(f"length mismatch: {a.shape[0]} vs {b.shape[0]}")
    return int(np.count_nonzero(a[:, axis] != b[:, axis]))


def similarity_series_raw(motif: Motif, sym: SymbolicSeries) -> np.ndarray:
    """Negated per-axis mismatch counts at every offset of one period.

    Returns a [(T - L) x A] float matrix where entry (j, axis) is the negated
    count of symbol mismatches between the motif and the segment starting at
    offset j.  The final L offsets of the period are not covered; the caller
    extends the finalized series back to length T.
    """
    L = motif.length
    T = sym.num_steps
    if T < L + 1:
        raise MotifError(
            f"period {sym.period_id!r} (T={T}) shorter than motif length {L} + 1"
        )
    if motif.symbols.shape[1] != sym.num_axes:
        raise DataError("motif and period axis counts differ")
    # windows: [T - L + 1, A, L]; compare against motif laid out as [A, L]
    windows = sliding_window_view(sym.symbols, L, axis=0)[: T - L]
    mismatches = windows != motif.symbols.T[np.newaxis, :, :]
    return -mismatches.sum(axis=2).astype(np.float64)


def finalize_similarity(
    raw_by_period: dict[str, np.ndarray], motif_length: int
) -> tuple[dict[str, np.ndarray], bool]:
    """Axis-average raw series, normalize with pooled extrema, extend tails.

    Normalization uses the min and max pooled over *all* periods so "how
    strongly this action occurs" stays comparable across periods.  The last
    ``motif_length`` steps of each period repeat the final value.  When the
    pooled extrema coincide the motif is uninformative: every value becomes
    0.5 and a warning is emitted.

    Returns (per-period length-T vectors, uninformative flag).
    """
    if not raw_by_period:
        raise MotifError("no raw similarity series to finalize")
    averaged = {pid: raw.mean(axis=1) for pid, raw in raw_by_period.items()}
    lo = min(float(vec.min()) for vec in averaged.values())
    hi = max(float(vec.max()) for vec in averaged.values())
    degenerate = hi == lo
    if degenerate:
        warnings.warn(
            "motif is equally distant everywhere; emitting constant 0.5 channel",
            UninformativeMotifWarning,
            stacklevel=2,
        )
    out = {}
    for pid, vec in averaged.items():
        if degenerate:
            norm = np.full(vec.shape[0], 0.5)
        else:
            norm = (vec - lo) / (hi - lo)
        tail = np.full(motif_length, norm[-1])
        out[pid] = np.concatenate([norm, tail])
    return out, degenerate


def select_key_motifs(candidates: list[Motif], num_groups: int, rng_seed: int) -> list[Motif]:
    """Pick one motif per segment group, uniformly under a seeded RNG.

    Output is ordered by group index.  Raises if any group has no candidate.
    """
    by_group: dict[int, list[Motif]] = {}
    for m in candidates:
        by_group.setdefault(m.segment_group, []).append(m)
    missing = [g for g in range(num_groups) if g not in by_group]
    if missing:
        raise MotifError(
            f"segment groups {missing} have no candidates; reduce the group "
            "count or the window sizes"
        )
    rng = np.random.default_rng(rng_seed)
    selected = []
    for g in range(num_groups):
        group = by_group[g]
        selected.append(group[int(rng.integers(len(group)))])
    return selected


def build_ssl_targets(
    symbolized: dict[str, SymbolicSeries], key_motifs: list[Motif]
) -> tuple[dict[str, SimilaritySeries], list[bool]]:
    """Stack the finalized similarity series of every key motif per period.

    Returns ({period_id: [T x n] series}, per-motif uninformative flags).
    Channel j corresponds to the key motif of segment group j.
    """
    if not key_motifs:
        raise MotifError("no key motifs")
    if not symbolized:
        raise MotifError("no symbolized periods")
    channels: dict[str, list[np.ndarray]] = {pid: [] for pid in symbolized}
    flags = []
    for motif in key_motifs:
        raw = {pid: similarity_series_raw(motif, sym) for pid, sym in symbolized.items()}
        finalized, degenerate = finalize_similarity(raw, motif.length)
        flags.append(degenerate)
        for pid, vec in finalized.items():
            channels[pid].append(vec)
    targets = {
        pid: SimilaritySeries(period_id=pid, values=np.stack(vecs, axis=1))
        for pid, vecs in channels.items()
    }
    return targets, flags


# ---------------------------------------------------------------------------
# High-level mining entry point
# ---------------------------------------------------------------------------


def symbolize_dataset(
    dataset: Dataset, alphabet_size: int, period_ids: list[str] | None = None
) -> dict[str, SymbolicSeries]:
    """Normalize and symbolize the given periods (default: the unlabeled set)."""
    ids = dataset.unlabeled_ids if period_ids is None else period_ids
    return {
        pid: symbolize(minmax_normalize(dataset.get(pid)), alphabet_size)
        for pid in ids
    }


def mine_key_motifs(
    dataset: Dataset,
    alphabet_size: int,
    window_sizes: list[int],
    step: int,
    num_groups: int,
    seed: int,
) -> tuple[list[Motif], str]:
    """Select key motifs from an initial period drawn uniformly from D_u.

    Returns (key motifs ordered by group, the chosen initial period id).
    """
    if not dataset.unlabeled_ids:
        raise MotifError("dataset has no unlabeled periods to mine from")
    rng = np.random.default_rng(seed)
    initial_id = dataset.unlabeled_ids[int(rng.integers(len(dataset.unlabeled_ids)))]
    sym = symbolize(minmax_normalize(dataset.get(initial_id)), alphabet_size)
    candidates = generate_candidates(sym, window_sizes, step, num_groups)
    key = select_key_motifs(candidates, num_groups, rng_seed=seed)
    return key, initial_id


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def motif_set_to_dict(
    motifs: list[Motif],
    alphabet_size: int,
    seed: int,
    initial_period_id: str,
    config_hash: str | None = None,
) -> dict:
    doc = {
        "version": 1,
        "alphabet_size": alphabet_size,
        "num_groups": len(motifs),
        "seed": seed,
        "initial_period_id": initial_period_id,
        "motifs": [
            {
                "symbols": m.symbols.tolist(),
                "source_period_id": m.source_period_id,
                "source_offset": int(m.source_offset),
                "segment_group": int(m.segment_group),
            }
            for m in motifs
        ],
    }
    if config_hash is not None:
        doc["config_hash"] = config_hash
    doc["motif_set_hash"] = motif_set_hash(motifs, alphabet_size)
    return doc


def motif_set_from_dict(doc: dict) -> tuple[list[Motif], int]:
    """Inverse of :func:`motif_set_to_dict`; returns (motifs, alphabet_size)."""
    try:
        alphabet_size = int(doc["alphabet_size"])
        motifs = [
            Motif(
                symbols=np.array(m["symbols"], dtype=np.int64),
                source_period_id=m["source_period_id"],
                source_offset=int(m["source_offset"]),
                segment_group=int(m["segment_group"]),
            )
            for m in doc["motifs"]
        ]
    except (KeyError, TypeError) as exc:
        raise DataError(f"malformed motif set document: {exc}") from exc
    return motifs, alphabet_size


def motif_set_hash(motifs: list[Motif], alphabet_size: int) -> str:
    """Content hash identifying a motif set (alphabet + ordered symbols)."""
    payload = {
        "alphabet_size": alphabet_size,
        "motifs": [m.symbols.tolist() for m in motifs],
    }
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()


def save_targets_csv(
    targets: dict[str, SimilaritySeries], path, header_comment: str | None = None
) -> None:
    """Write targets as ``period_id,t,s_0,...,s_{n-1}`` rows."""
    n = next(iter(targets.values())).values.shape[1]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        if header_comment:
            fh.write(f"# {header_comment}\n")
        fh.write("period_id,t," + ",".join(f"s_{j}" for j in range(n)) + "\n")
        for pid, series in targets.items():
            for t in range(series.values.shape[0]):
                vals = ",".join(repr(float(v)) for v in series.values[t])
                fh.write(f"{pid},{t},{vals}\n")


def load_targets_csv(path) -> dict[str, SimilaritySeries]:
    rows: dict[str, list[list[float]]] = {}
    with open(path, encoding="utf-8") as fh:
        header = None
        for line in fh:
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            if header is None:
                header = line.split(",")
                if header[:2] != ["period_id", "t"]:
                    raise DataError(f"{path}: unexpected target header {header[:2]}")
                continue
            parts = line.split(",")
            rows.setdefault(parts[0], []).append([float(v) for v in parts[2:]])
    if header is None:
        raise DataError(f"{path}: empty targets file")
    return {
        pid: SimilaritySeries(period_id=pid, values=np.array(vals, dtype=np.float64))
        for pid, vals in rows.items()
    }
