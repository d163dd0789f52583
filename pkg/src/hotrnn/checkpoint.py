"""Binary checkpoints with bit-exact round-trips.

Layout: 8-byte magic, little-endian u64 header length, JSON header
(UTF-8), then each array's raw row-major little-endian f64 data in the
order listed in the header. TTWeight checkpoints store (H, L, P, rank
chain); model checkpoints extend the header with the full model config
and named parameter blocks.
"""

from __future__ import annotations

import dataclasses
import json
import struct

import numpy as np

from .autodiff import Tensor
from .tt import TTWeight
from .training import ModelConfig

MAGIC = b"HOTRNN01"


def _write(path, header: dict, arrays: list):
    header = dict(header)
    header["arrays"] = [
        {"name": name, "shape": list(arr.shape)} for name, arr in arrays
    ]
    blob = json.dumps(header).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<Q", len(blob)))
        fh.write(blob)
        for _, arr in arrays:
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def _read(path) -> tuple:
    with open(path, "rb") as fh:
        magic = fh.read(len(MAGIC))
        if magic != MAGIC:
            raise ValueError(f"{path}: not a checkpoint file")
        (size,) = struct.unpack("<Q", fh.read(8))
        header = json.loads(fh.read(size).decode("utf-8"))
        arrays = {}
        for entry in header["arrays"]:
            shape = tuple(entry["shape"])
            count = int(np.prod(shape)) if shape else 1
            data = np.frombuffer(fh.read(count * 8), dtype="<f8", count=count)
            arrays[entry["name"]] = data.reshape(shape).astype(np.float64)
    return header, arrays


def save_ttweight(path, tt: TTWeight):
    header = {
        "kind": "ttweight",
        "hidden_size": tt.hidden_size,
        "lags": tt.lags,
        "order": tt.order,
        "rank_chain": list(tt.rank_chain),
    }
    _write(path, header, [(f"core{i}", c) for i, c in enumerate(tt.core_arrays())])


def load_ttweight(path) -> TTWeight:
    header, arrays = _read(path)
    if header.get("kind") != "ttweight":
        raise ValueError(f"{path}: not a TTWeight checkpoint")
    cores = [Tensor(arrays[f"core{i}"]) for i in range(header["order"] + 1)]
    tt = TTWeight(header["hidden_size"], header["lags"], header["order"], cores)
    tt.validate()
    return tt


def save_model(path, model, config: ModelConfig, extra: dict = None):
    header = {
        "kind": "seq2seq",
        "model": dataclasses.asdict(config),
        "extra": extra or {},
    }
    arrays = [(name, p.data) for name, p in model.parameters().items()]
    _write(path, header, arrays)


def load_model(path):
    """Rebuild the model from its config and overwrite parameters in place."""
    header, arrays = _read(path)
    if header.get("kind") != "seq2seq":
        raise ValueError(f"{path}: not a model checkpoint")
    config = ModelConfig(**header["model"])
    model = config.build(np.random.default_rng(0))
    params = model.parameters()
    if set(params) != set(arrays):
        raise ValueError(f"{path}: parameter names do not match config")
    for name, p in params.items():
        if p.data.shape != arrays[name].shape:
            raise ValueError(f"{path}: shape mismatch for {name}")
        p.data[...] = arrays[name]
    return model, config, header.get("extra", {})
