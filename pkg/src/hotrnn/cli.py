"""Command-line entry point.

Subcommands:

    gen         generate a synthetic dataset (Genz or Lorenz) -> CSV + manifest
    prep        ingest a raw series CSV -> windowed npz + manifest
    train       train a forecaster -> checkpoint + training log CSV
    eval        RMSE-by-horizon table for a checkpoint -> CSV
    sweep       rank/lag sensitivity sweep -> CSV
    gridsearch  exhaustive hyperparameter grid -> best checkpoint + CSV

Every subcommand accepts --config <json>, --seed <int>, --out <dir>.
Exit codes: 0 success, 1 configuration error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from . import checkpoint as ckpt
from . import dynamics, evaluate, pipeline
from .training import (
    ModelConfig,
    TrainConfig,
    grid_search,
    train_model,
)


class ConfigError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigError(message)


def _load_config(path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc


def _pick(config: dict, keys: dict) -> dict:
    """Validate keys against {name: default}; unknown keys are errors."""
    unknown = set(config) - set(keys)
    if unknown:
        raise ConfigError(f"unknown config fields: {sorted(unknown)}")
    out = dict(keys)
    out.update(config)
    return out


def _train_config(config: dict, seed: int) -> TrainConfig:
    model_fields = {f.name: f.default for f in dataclasses.fields(ModelConfig)}
    model = _pick(config.get("model", {}), model_fields)
    train_fields = {
        f.name: f.default for f in dataclasses.fields(TrainConfig)
        if f.name != "model"
    }
    known = dict(train_fields)
    train = {k: v for k, v in config.items() if k in known}
    train["seed"] = seed
    try:
        return TrainConfig(model=ModelConfig(**model), **{**train_fields, **train})
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


# -- dataset plumbing ------------------------------------------------------


def _load_windows(config: dict, seed: int):
    """Split + normalize data referenced by a train/eval/sweep config.

    "data" may be a sequence CSV from ``gen`` or a windowed npz from
    ``prep``. Returns ((train, val, test) as (inputs, targets) pairs,
    normalizer or None).
    """
    path = Path(config.get("data", ""))
    if not path.exists():
        raise ConfigError(f"data file not found: {path}")
    if path.suffix == ".npz":
        blob = np.load(path, allow_pickle=False)
        ds = pipeline.WindowedDataset(
            blob["inputs"], blob["targets"], blob["splits"], blob["sequence_ids"]
        )
        norm = None
        manifest = path.with_suffix(".json")
        if manifest.exists():
            with open(manifest) as fh:
                meta = json.load(fh)
            if "normalizer" in meta:
                norm = pipeline.Normalizer.from_dict(meta["normalizer"])
        return tuple(ds.subset(tag) for tag in ("train", "val", "test")), norm

    sequences = dynamics.read_dataset_csv(path)
    w_in = int(config.get("w_in", 5))
    w_out = int(config.get("w_out", 80))
    stride = int(config.get("stride", w_in + w_out))
    limit = config.get("max_sequences")
    if limit:
        sequences = sequences[: int(limit)]
    ds = pipeline.window_and_split(sequences, w_in, w_out, stride, seed)
    norm = None
    if config.get("normalize", True):
        train_in, train_tg = ds.subset("train")
        norm = pipeline.Normalizer.fit(np.concatenate(
            [train_in.reshape(-1, train_in.shape[-1]),
             train_tg.reshape(-1, train_tg.shape[-1])]
        ))
        ds = pipeline.WindowedDataset(
            norm.transform(ds.inputs), norm.transform(ds.targets),
            ds.splits, ds.sequence_ids,
        )
    return tuple(ds.subset(tag) for tag in ("train", "val", "test")), norm


_DATA_KEYS = ("data", "w_in", "w_out", "stride", "normalize", "max_sequences")


def _strip_data_keys(config: dict) -> dict:
    return {k: v for k, v in config.items() if k not in _DATA_KEYS}


# -- subcommands -----------------------------------------------------------


def cmd_gen(config: dict, seed: int, out: Path) -> int:
    family = config.get("family", "genz")
    spec_dict = {k: v for k, v in config.items() if k != "family"}
    if "init_range" in spec_dict:
        spec_dict["init_range"] = tuple(spec_dict["init_range"])
    try:
        if family == "genz":
            spec = dynamics.GenzSpec(**spec_dict)
            sequences = dynamics.gen_genz_dataset(spec, seed)
        elif family == "lorenz":
            spec = dynamics.LorenzSpec(**spec_dict)
            sequences = dynamics.gen_lorenz_dataset(spec, seed)
        else:
            raise ConfigError(f"unknown dataset family {family!r}")
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    dynamics.write_dataset_csv(out / "data.csv", sequences)
    manifest = dynamics.spec_to_dict(spec)
    manifest["seed"] = seed
    manifest["n_sequences"] = int(sequences.shape[0])
    with open(out / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2)
    print(f"wrote {sequences.shape[0]} sequences to {out / 'data.csv'}")
    return 0


def cmd_prep(config: dict, seed: int, out: Path) -> int:
    config = _pick(config, {
        "csv": None, "resample_factor": 1, "rotate_period": None,
        "chunk_len": None, "w_in": 5, "w_out": 80, "stride": None,
        "normalize": True,
    })
    if not config["csv"]:
        raise ConfigError("prep config requires 'csv'")
    table = pipeline.read_series_csv(config["csv"])
    table, dropped = pipeline.impute_cross_sectional(table)
    table = pipeline.resample(table, int(config["resample_factor"]))
    chunk = int(config["chunk_len"] or len(table.values))
    usable = (len(table.values) // chunk) * chunk
    sequences = table.values[:usable].reshape(-1, chunk, table.values.shape[1])
    if config["rotate_period"]:
        sequences = np.concatenate(
            [pipeline.rotate_augment(seq, int(config["rotate_period"]))
             for seq in sequences]
        )
    w_in, w_out = int(config["w_in"]), int(config["w_out"])
    stride = int(config["stride"] or (w_in + w_out))
    ds = pipeline.window_and_split(sequences, w_in, w_out, stride, seed)
    manifest = {"seed": seed, "dropped_rows": dropped,
                "n_sequences": int(sequences.shape[0]),
                "split_counts": {tag: int(np.sum(ds.splits == tag))
                                 for tag in ("train", "val", "test")}}
    if config["normalize"]:
        train_in, train_tg = ds.subset("train")
        norm = pipeline.Normalizer.fit(np.concatenate(
            [train_in.reshape(-1, train_in.shape[-1]),
             train_tg.reshape(-1, train_tg.shape[-1])]
        ))
        ds = pipeline.WindowedDataset(
            norm.transform(ds.inputs), norm.transform(ds.targets),
            ds.splits, ds.sequence_ids,
        )
        manifest["normalizer"] = norm.to_dict()
    np.savez(out / "windows.npz", inputs=ds.inputs, targets=ds.targets,
             splits=ds.splits, sequence_ids=ds.sequence_ids)
    with open(out / "windows.json", "w") as fh:
        json.dump(manifest, fh, indent=2)
    print(f"wrote {len(ds.inputs)} windows to {out / 'windows.npz'}"
          f" (dropped {dropped} all-missing rows)")
    return 0


def cmd_train(config: dict, seed: int, out: Path) -> int:
    splits, norm = _load_windows(config, seed)
    tc = _train_config(_strip_data_keys(config), seed)
    d = splits[0][0].shape[-1]
    tc.model.input_size = d
    result = train_model(tc, splits[0], splits[1])
    extra = {"val_loss": result.val_loss, "steps_run": result.steps_run}
    if norm is not None:
        extra["normalizer"] = norm.to_dict()
    ckpt.save_model(out / "model.ckpt", result.model, tc.model, extra)
    with open(out / "train_log.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step", "train_loss", "val_loss", "lr"])
        for row in result.log:
            writer.writerow([row[0]] + [repr(v) for v in row[1:]])
    print(f"trained {result.steps_run} steps, val loss {result.val_loss:.6g}; "
          f"checkpoint at {out / 'model.ckpt'}")
    return 0


def cmd_eval(config: dict, seed: int, out: Path, horizons=None) -> int:
    checkpoint = config.get("checkpoint") or str(Path(out) / "model.ckpt")
    if not Path(checkpoint).exists():
        raise ConfigError(f"checkpoint not found: {checkpoint}")
    model, _, extra = ckpt.load_model(checkpoint)
    splits, norm = _load_windows(config, seed)
    if norm is None and "normalizer" in extra:
        norm = pipeline.Normalizer.from_dict(extra["normalizer"])
    if horizons is None:
        horizons = config.get("horizons", [splits[2][1].shape[1]])
    test_in, test_tg = splits[2]
    table = evaluate.rmse_by_horizon(model, test_in, test_tg, horizons, norm)
    evaluate.write_rmse_csv(out / "rmse.csv", table)
    for h in sorted(table):
        print(f"horizon {h}: rmse {table[h]:.6g}")
    return 0


def cmd_sweep(config: dict, seed: int, out: Path) -> int:
    axis = config.get("axis")
    values = config.get("values")
    if axis not in ("rank", "lags") or not values:
        raise ConfigError("sweep config requires axis ('rank'|'lags') and values")
    splits, norm = _load_windows(config, seed)
    overrides = {k: v for k, v in config.items()
                 if k not in ("axis", "values", "horizons", "seeds")}
    tc = _train_config(_strip_data_keys(overrides), seed)
    tc.model.input_size = splits[0][0].shape[-1]
    horizons = config.get("horizons", [splits[2][1].shape[1]])
    seeds = tuple(config.get("seeds", (1, 2, 3)))
    rows = evaluate.sensitivity_sweep(
        axis, values, tc, splits[0], splits[1], splits[2], horizons, norm, seeds
    )
    evaluate.write_sweep_csv(out / "sweep.csv", rows)
    print(f"wrote {len(rows)} sweep rows to {out / 'sweep.csv'}")
    return 0


def cmd_gridsearch(config: dict, seed: int, out: Path) -> int:
    grid = config.get("grid")
    if not grid:
        raise ConfigError("gridsearch config requires a non-empty 'grid'")
    splits, norm = _load_windows(config, seed)
    base = _train_config(
        {k: v for k, v in _strip_data_keys(config).items()
         if k not in ("grid", "budget")},
        seed,
    )
    base.model.input_size = splits[0][0].shape[-1]
    result = grid_search(base, grid, splits[0], splits[1],
                         budget=config.get("budget"))
    extra = {"val_loss": result.best.val_loss}
    if norm is not None:
        extra["normalizer"] = norm.to_dict()
    ckpt.save_model(out / "model.ckpt", result.best.model,
                    result.best.config.model, extra)
    with open(out / "gridsearch.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["overrides", "val_loss", "error"])
        for overrides, res, err in result.runs:
            writer.writerow([json.dumps(overrides),
                             "" if res is None else repr(res.val_loss),
                             err or ""])
    print(f"best config: {json.dumps(result.best.config.model.__dict__)} "
          f"val loss {result.best.val_loss:.6g}")
    return 0


COMMANDS = {
    "gen": cmd_gen,
    "prep": cmd_prep,
    "train": cmd_train,
    "eval": cmd_eval,
    "sweep": cmd_sweep,
    "gridsearch": cmd_gridsearch,
}


def build_parser() -> _Parser:
    parser = _Parser(prog="hotrnn", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON config file")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", default=".", help="output directory")
        if name == "eval":
            p.add_argument("--horizons", default=None,
                           help="comma-separated horizon list")
    return parser


def cli_main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        config = _load_config(args.config)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        kwargs = {}
        if args.command == "eval" and args.horizons:
            kwargs["horizons"] = [int(h) for h in args.horizons.split(",")]
        return COMMANDS[args.command](config, args.seed, out, **kwargs)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # runtime failure
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 2


def main():
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
