"""Real-world series ingestion: imputation, resampling, windowing, splits.

Input CSV schema: header row with channel names, first column an
ISO-8601 timestamp, missing cells empty or "NaN". All transformations
are pure functions on immutable tables.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace

import numpy as np


@dataclass(frozen=True)
class SeriesTable:
    timestamps: np.ndarray  # ISO-8601 strings, strictly increasing
    values: np.ndarray  # (T, C) f64 with NaN for missing
    channels: tuple
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.timestamps) != len(self.values):
            raise ValueError("timestamps and values must have equal length")
        if self.values.ndim != 2 or self.values.shape[1] != len(self.channels):
            raise ValueError(
                f"values shape {self.values.shape} does not match "
                f"{len(self.channels)} channels"
            )
        ts = np.asarray(self.timestamps)
        if len(ts) > 1 and not np.all(ts[1:] > ts[:-1]):
            raise ValueError("timestamps must be strictly increasing")


@dataclass(frozen=True)
class WindowedDataset:
    """Input windows, following target windows, and sequence-level splits."""

    inputs: np.ndarray  # (N, W_in, d)
    targets: np.ndarray  # (N, W_out, d)
    splits: np.ndarray  # per-window tag: "train" | "val" | "test"
    sequence_ids: np.ndarray  # source sequence per window

    def subset(self, tag: str) -> tuple:
        mask = self.splits == tag
        return self.inputs[mask], self.targets[mask]


def read_series_csv(path) -> SeriesTable:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        channels = tuple(header[1:])
        timestamps, rows = [], []
        for row in reader:
            timestamps.append(row[0])
            rows.append(
                [float(cell) if cell.strip() not in ("", "NaN", "nan") else np.nan
                 for cell in row[1:]]
            )
    return SeriesTable(
        np.asarray(timestamps), np.asarray(rows, dtype=np.float64), channels,
        {"source": str(path)},
    )


def write_series_csv(path, table: SeriesTable):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("timestamp",) + table.channels)
        for ts, row in zip(table.timestamps, table.values):
            writer.writerow(
                [ts] + ["" if np.isnan(v) else repr(float(v)) for v in row]
            )


def impute_cross_sectional(table: SeriesTable) -> tuple:
    """Replace each missing cell by the row mean of non-missing channels.

    Rows with every channel missing are dropped. Returns the imputed
    table and the dropped-row count.
    """
    values = table.values
    any_present = ~np.all(np.isnan(values), axis=1)
    dropped = int(len(values) - any_present.sum())
    values = values[any_present]
    timestamps = np.asarray(table.timestamps)[any_present]
    with np.errstate(invalid="ignore"):
        row_means = np.nanmean(values, axis=1)
    filled = np.where(np.isnan(values), row_means[:, None], values)
    return (
        replace(table, timestamps=timestamps, values=filled),
        dropped,
    )


def resample(table: SeriesTable, factor: int) -> SeriesTable:
    """Decimate by non-overlapping block means of ``factor`` rows.

    Block timestamps come from the block start; a ragged tail is dropped.
    """
    if factor < 1:
        raise ValueError(f"factor must be >= 1, got {factor}")
    if factor == 1:
        return table
    t = (len(table.values) // factor) * factor
    blocks = table.values[:t].reshape(-1, factor, table.values.shape[1])
    return replace(
        table,
        timestamps=np.asarray(table.timestamps)[:t:factor],
        values=blocks.mean(axis=1),
    )


def rotate_augment(sequence: np.ndarray, period: int) -> np.ndarray:
    """Emit floor(len/period) cyclic shifts of the sequence by k*period."""
    if period < 1:
        raise ValueError(f"period must be >= 1, got {period}")
    t = len(sequence)
    copies = max(t // period, 1)
    return np.stack(
        [np.roll(sequence, -k * period, axis=0) for k in range(copies)]
    )


def window_and_split(sequences: np.ndarray, w_in: int, w_out: int,
                     stride: int, seed: int) -> WindowedDataset:
    """Slide (input, target) windows and assign 80/10/10 splits.

    Split membership is decided at the sequence level so no sequence
    contributes windows to more than one split; val/test counts use
    floor(0.1 N) each, the remainder trains.
    """
    sequences = np.asarray(sequences, dtype=np.float64)
    n_seq, seq_len = sequences.shape[0], sequences.shape[1]
    if w_in + w_out > seq_len:
        raise ValueError(
            f"window {w_in}+{w_out} longer than sequence length {seq_len}"
        )
    starts = range(0, seq_len - w_in - w_out + 1, stride)
    inputs, targets, seq_ids = [], [], []
    for i, seq in enumerate(sequences):
        for s in starts:
            inputs.append(seq[s:s + w_in])
            targets.append(seq[s + w_in:s + w_in + w_out])
            seq_ids.append(i)
    inputs = np.asarray(inputs)
    targets = np.asarray(targets)
    seq_ids = np.asarray(seq_ids)

    order = np.random.default_rng(seed).permutation(n_seq)
    n_val = n_test = n_seq // 10
    tags = {}
    for rank, seq in enumerate(order):
        if rank < n_val:
            tags[seq] = "val"
        elif rank < n_val + n_test:
            tags[seq] = "test"
        else:
            tags[seq] = "train"
    splits = np.asarray([tags[i] for i in seq_ids])
    return WindowedDataset(inputs, targets, splits, seq_ids)


@dataclass(frozen=True)
class Normalizer:
    """Per-channel z-score fitted on the training split only."""

    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def fit(cls, data: np.ndarray) -> "Normalizer":
        flat = data.reshape(-1, data.shape[-1])
        std = flat.std(axis=0)
        return cls(flat.mean(axis=0), np.where(std > 0, std, 1.0))

    def transform(self, data: np.ndarray) -> np.ndarray:
        return (data - self.mean) / self.std

    def inverse(self, data: np.ndarray) -> np.ndarray:
        return data * self.std + self.mean

    def to_dict(self) -> dict:
        return {"mean": self.mean.tolist(), "std": self.std.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "Normalizer":
        return cls(np.asarray(d["mean"]), np.asarray(d["std"]))
