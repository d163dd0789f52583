"""Sequence-loss training: RMSProp, decay schedule, early stopping, grids.

The regression loss is the plain sum over steps and dimensions of the
squared prediction error; reporting converts to RMSE elsewhere. RMSProp
uses rho=0.9 and eps=1e-8, the learning rate decays by 0.8 on a fixed
step interval, and early stopping watches a moving average of the
validation loss.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .autodiff import ShapeError, Tensor
from .seq2seq import Seq2SeqModel
from .tt import param_count


@dataclass
class ModelConfig:
    kind: str = "hotlstm"
    input_size: int = 1
    hidden_size: int = 16
    layers: int = 1
    lags: int = 2
    order: int = 2
    rank: int = 2

    def build(self, rng) -> Seq2SeqModel:
        return Seq2SeqModel.build(
            self.kind, self.input_size, self.hidden_size, rng,
            layers=self.layers, lags=self.lags, order=self.order,
            ranks=self.rank,
        )

    def transition_param_count(self) -> int:
        if self.kind in ("hotrnn", "hotlstm"):
            gates = 4 if self.kind == "hotlstm" else 1
            return gates * param_count(
                self.hidden_size, self.lags, self.order, self.rank
            )
        return 0


@dataclass
class TrainConfig:
    model: ModelConfig = field(default_factory=ModelConfig)
    learning_rate: float = 1e-3
    lr_decay: float = 0.8
    decay_interval: int = 1000
    max_steps: int = 10_000
    batch_size: int = 32
    eval_interval: int = 100
    ma_window: int = 5
    patience: int = 10
    clip_norm: float = 5.0
    seed: int = 0


def sequence_loss(predictions: Tensor, targets) -> Tensor:
    """Sum over all steps and dimensions of the squared error."""
    targets = targets if isinstance(targets, Tensor) else Tensor(targets)
    if predictions.shape != targets.shape:
        raise ShapeError(
            f"prediction shape {predictions.shape} != target shape {targets.shape}"
        )
    diff = predictions - targets
    return ad.tensor_sum(diff * diff)


class RMSProp:
    """RMSProp with learning-rate decay and global-norm gradient clipping."""

    def __init__(self, params: dict, lr: float, rho: float = 0.9,
                 eps: float = 1e-8, lr_decay: float = 0.8,
                 decay_interval: int = 1000, clip_norm: float = 5.0):
        self.params = params
        self.lr = lr
        self.rho = rho
        self.eps = eps
        self.lr_decay = lr_decay
        self.decay_interval = decay_interval
        self.clip_norm = clip_norm
        self.v = {name: np.zeros_like(p.data) for name, p in params.items()}
        self.steps = 0
        self.skipped = 0

    def _clip(self, grads: dict) -> dict:
        if self.clip_norm is None:
            return grads
        total = np.sqrt(sum(float(np.sum(g * g)) for g in grads.values()))
        if total > self.clip_norm:
            scale = self.clip_norm / total
            grads = {name: g * scale for name, g in grads.items()}
        return grads

    def step(self, grads: dict = None):
        """Apply one update from ``.grad`` fields (or an explicit map)."""
        if grads is None:
            grads = {name: p.grad for name, p in self.params.items()}
        if any(g is None or not np.all(np.isfinite(g)) for g in grads.values()):
            self.skipped += 1
            self._advance()
            return
        grads = self._clip(grads)
        for name, p in self.params.items():
            g = grads[name]
            v = self.v[name]
            v *= self.rho
            v += (1.0 - self.rho) * g * g
            p.data -= self.lr * g / np.sqrt(v + self.eps)
        self._advance()

    def _advance(self):
        self.steps += 1
        if self.decay_interval and self.steps % self.decay_interval == 0:
            self.lr *= self.lr_decay


class EarlyStopper:
    """Stop when the moving-average validation loss stalls.

    The moving average over the last ``ma_window`` evaluations must
    improve on its running best within ``patience`` consecutive
    evaluations, else ``update`` returns False.
    """

    def __init__(self, ma_window: int, patience: int):
        if ma_window < 1:
            raise ValueError(f"ma_window must be >= 1, got {ma_window}")
        self.ma_window = ma_window
        self.patience = patience
        self.losses = []
        self.best = np.inf
        self.stale = 0

    def moving_average(self) -> float:
        window = self.losses[-self.ma_window:]
        return float(np.mean(window))

    def update(self, val_loss: float) -> bool:
        """Record one evaluation; returns True to continue training."""
        self.losses.append(float(val_loss))
        ma = self.moving_average()
        if ma < self.best:
            self.best = ma
            self.stale = 0
        else:
            self.stale += 1
        return self.stale < self.patience


def early_stop_check(val_losses, ma_window: int, patience: int) -> bool:
    """True if training should stop given the evaluation trace so far."""
    stopper = EarlyStopper(ma_window, patience)
    for loss in val_losses:
        if not stopper.update(loss):
            return True
    return False


@dataclass
class TrainResult:
    model: Seq2SeqModel
    config: TrainConfig
    log: list  # rows of (step, train_loss, val_loss, lr)
    val_loss: float  # final moving-average validation loss
    steps_run: int


def _batch_loss(model: Seq2SeqModel, inputs, targets) -> Tensor:
    preds = model.rollout(inputs, targets.shape[1])
    return sequence_loss(preds, targets) * (1.0 / inputs.shape[0])


def evaluate_loss(model: Seq2SeqModel, inputs, targets,
                  max_batch: int = 256) -> float:
    """Mean per-sequence sequence loss over a dataset, without grads."""
    total, n = 0.0, 0
    for start in range(0, len(inputs), max_batch):
        chunk_in = inputs[start:start + max_batch]
        chunk_tg = targets[start:start + max_batch]
        preds = model.forecast(chunk_in, chunk_tg.shape[1])
        total += float(np.sum((preds - chunk_tg) ** 2))
        n += len(chunk_in)
    return total / n


def train_model(config: TrainConfig, train_data, val_data) -> TrainResult:
    """Train one model to convergence or budget on (inputs, targets) pairs."""
    rng = np.random.default_rng(config.seed)
    model = config.model.build(rng)
    params = model.parameters()
    opt = RMSProp(
        params, config.learning_rate, lr_decay=config.lr_decay,
        decay_interval=config.decay_interval, clip_norm=config.clip_norm,
    )
    stopper = EarlyStopper(config.ma_window, config.patience)
    train_in, train_tg = train_data
    val_in, val_tg = val_data
    log = []
    step = 0
    for step in range(1, config.max_steps + 1):
        idx = rng.choice(len(train_in), size=min(config.batch_size, len(train_in)),
                         replace=False)
        loss = _batch_loss(model, train_in[idx], train_tg[idx])
        loss.backward()
        opt.step()
        if step % config.eval_interval == 0 or step == config.max_steps:
            val_loss = evaluate_loss(model, val_in, val_tg)
            log.append((step, float(loss.data) / train_tg.shape[1],
                        val_loss / val_tg.shape[1], opt.lr))
            if not stopper.update(val_loss):
                break
    final = stopper.moving_average() if stopper.losses else np.inf
    return TrainResult(model, config, log, float(final), step)


def expand_grid(grid: dict) -> list:
    """Cartesian product of {field: [values]} into flat override dicts."""
    if not grid:
        raise ValueError("grid must not be empty")
    keys = sorted(grid)
    return [dict(zip(keys, combo))
            for combo in itertools.product(*(grid[k] for k in keys))]


def apply_overrides(base: TrainConfig, overrides: dict) -> TrainConfig:
    import dataclasses

    model_fields = {f.name for f in dataclasses.fields(ModelConfig)}
    model_kwargs = dataclasses.asdict(base.model)
    train_kwargs = dataclasses.asdict(base)
    del train_kwargs["model"]
    for key, value in overrides.items():
        if key in model_fields:
            model_kwargs[key] = value
        elif key in train_kwargs:
            train_kwargs[key] = value
        else:
            raise ValueError(f"unknown config field {key!r}")
    return TrainConfig(model=ModelConfig(**model_kwargs), **train_kwargs)


@dataclass
class GridResult:
    best: TrainResult
    runs: list  # (overrides, TrainResult | None, error message | None)


def grid_search(base: TrainConfig, grid: dict, train_data, val_data,
                budget: int = None, seed: int = None) -> GridResult:
    """Train every grid candidate; return the argmin validation loss.

    Ties break toward fewer transition parameters, then grid order.
    Under a budget, a seeded random subset of candidates is used.
    """
    candidates = expand_grid(grid)
    if budget is not None and budget < len(candidates):
        rng = np.random.default_rng(base.seed if seed is None else seed)
        picks = rng.choice(len(candidates), size=budget, replace=False)
        candidates = [candidates[i] for i in sorted(picks)]
    runs = []
    for overrides in candidates:
        config = apply_overrides(base, overrides)
        try:
            result = train_model(config, train_data, val_data)
            if not np.isfinite(result.val_loss):
                raise FloatingPointError("validation loss diverged")
            runs.append((overrides, result, None))
        except FloatingPointError as exc:
            runs.append((overrides, None, str(exc)))
    finished = [
        (res.val_loss, res.config.model.transition_param_count(), i, res)
        for i, (_, res, _) in enumerate(runs)
        if res is not None
    ]
    if not finished:
        raise RuntimeError(
            "all grid candidates diverged: "
            + "; ".join(f"{o} -> {e}" for o, _, e in runs)
        )
    finished.sort(key=lambda item: item[:3])
    return GridResult(finished[0][3], runs)
