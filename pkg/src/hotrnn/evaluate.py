"""Forecast evaluation: RMSE by horizon and hyperparameter sweeps."""

from __future__ import annotations

import csv

import numpy as np

from .training import TrainConfig, apply_overrides, train_model


def rmse_by_horizon(model, test_inputs, test_targets, horizons,
                    normalizer=None, max_batch: int = 256) -> dict:
    """RMSE over all steps <= h for each horizon h, in original units.

    Predictions and targets are denormalized before the error is taken
    when a normalizer is supplied (targets are assumed normalized too).
    """
    horizons = sorted(int(h) for h in horizons)
    max_h = horizons[-1]
    if max_h > test_targets.shape[1]:
        raise ValueError(
            f"horizon {max_h} exceeds decoded length {test_targets.shape[1]}"
        )
    sq_err = np.zeros(max_h)
    count = np.zeros(max_h)
    for start in range(0, len(test_inputs), max_batch):
        chunk_in = test_inputs[start:start + max_batch]
        chunk_tg = test_targets[start:start + max_batch]
        preds = model.forecast(chunk_in, max_h)
        truth = chunk_tg[:, :max_h]
        if normalizer is not None:
            preds = normalizer.inverse(preds)
            truth = normalizer.inverse(truth)
        err = (preds - truth) ** 2
        sq_err += err.sum(axis=(0, 2))
        count += err.shape[0] * err.shape[2]
    cum_err = np.cumsum(sq_err)
    cum_count = np.cumsum(count)
    return {h: float(np.sqrt(cum_err[h - 1] / cum_count[h - 1])) for h in horizons}


def sensitivity_sweep(axis: str, values, base_config: TrainConfig,
                      train_data, val_data, test_data, horizons,
                      normalizer=None, seeds=(1, 2, 3)) -> list:
    """Train one model per axis value and seed; RMSE rows per horizon.

    Returns rows of dicts: {axis, value, seed, horizon, rmse, error}.
    Training failures are recorded per cell instead of aborting the sweep.
    """
    if axis not in ("rank", "lags"):
        raise ValueError(f"sweep axis must be 'rank' or 'lags', got {axis!r}")
    rows = []
    for value in values:
        for seed in seeds:
            config = apply_overrides(base_config, {axis: int(value), "seed": seed})
            try:
                result = train_model(config, train_data, val_data)
                table = rmse_by_horizon(
                    result.model, test_data[0], test_data[1], horizons, normalizer
                )
                for h, rmse in table.items():
                    rows.append({"axis": axis, "value": value, "seed": seed,
                                 "horizon": h, "rmse": rmse, "error": None})
            except FloatingPointError as exc:
                rows.append({"axis": axis, "value": value, "seed": seed,
                             "horizon": None, "rmse": None, "error": str(exc)})
    return rows


def write_rmse_csv(path, table: dict):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["horizon", "rmse"])
        for h in sorted(table):
            writer.writerow([h, repr(table[h])])


def read_rmse_csv(path) -> dict:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        return {int(row[0]): float(row[1]) for row in reader}


def write_sweep_csv(path, rows: list):
    fields = ["axis", "value", "seed", "horizon", "rmse", "error"]
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        for row in rows:
            writer.writerow(row)
