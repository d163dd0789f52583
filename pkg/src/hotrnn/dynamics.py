"""Synthetic dataset generation: Genz difference dynamics and Lorenz flow.

The six Genz transition maps (parameters c, w in [0, 1]):

    oscillatory    cos(2*pi*w + c*x)
    product_peak   (c^-2 + (x + w)^2)^-1
    corner_peak    (1 + c*x)^-2
    gaussian       exp(-c^2 * pi * (x - w)^2)
    continuous     exp(-c^2 * pi * |x - w|)
    discontinuous  0 if x > w else exp(c*x)

Each is iterated as a difference equation x_{t+1} = g(x_t) from random
initial points. The Lorenz system (sigma=10, rho=28, beta=2.667) is
integrated with fixed-step RK4 and resampled along accumulated Euclidean
arc length.
"""

from __future__ import annotations

from dataclasses import dataclass, asdict

import numpy as np

GENZ_KINDS = (
    "oscillatory",
    "product_peak",
    "corner_peak",
    "gaussian",
    "continuous",
    "discontinuous",
)


@dataclass
class GenzSpec:
    kind: str = "product_peak"
    w: float = 0.5
    c: float = 1.0
    n_samples: int = 10_000
    seq_len: int = 100
    init_range: tuple = (-0.1, 0.1)

    def __post_init__(self):
        if self.kind not in GENZ_KINDS:
            raise ValueError(f"unknown Genz kind {self.kind!r}; one of {GENZ_KINDS}")
        if not (0.0 <= self.w <= 1.0 and 0.0 <= self.c <= 1.0):
            raise ValueError(f"w and c must lie in [0, 1], got w={self.w}, c={self.c}")


@dataclass
class LorenzSpec:
    sigma: float = 10.0
    rho: float = 28.0
    beta: float = 2.667
    dt: float = 0.01
    n_traj: int = 10_000
    seq_len: int = 50
    init_range: tuple = (-0.1, 0.1)
    resample_distance: float = 10.0
    max_steps: int = 20_000

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.n_traj < 1:
            raise ValueError(f"n_traj must be >= 1, got {self.n_traj}")


def genz_step(kind: str, w: float, c: float, x):
    """Apply the selected Genz map elementwise. x may be scalar or array."""
    x = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise ValueError("genz_step requires finite input")
    if kind == "oscillatory":
        return np.cos(2.0 * np.pi * w + c * x)
    if kind == "product_peak":
        denom = c**-2 + (x + w) ** 2
        if np.any(denom == 0.0):
            raise ValueError("product_peak: denominator vanished")
        return 1.0 / denom
    if kind == "corner_peak":
        base = 1.0 + c * x
        if np.any(base == 0.0):
            raise ValueError("corner_peak: denominator vanished")
        return base**-2
    if kind == "gaussian":
        return np.exp(-(c**2) * np.pi * (x - w) ** 2)
    if kind == "continuous":
        return np.exp(-(c**2) * np.pi * np.abs(x - w))
    if kind == "discontinuous":
        return np.where(x > w, 0.0, np.exp(c * x))
    raise ValueError(f"unknown Genz kind {kind!r}")


def gen_genz_dataset(spec: GenzSpec, seed: int) -> np.ndarray:
    """Iterate the difference map from uniform initial points.

    Returns sequences of shape (n_samples, seq_len, 1), deterministic
    per seed.
    """
    rng = np.random.default_rng(seed)
    lo, hi = spec.init_range
    x = rng.uniform(lo, hi, size=spec.n_samples)
    out = np.empty((spec.n_samples, spec.seq_len), dtype=np.float64)
    out[:, 0] = x
    for t in range(1, spec.seq_len):
        x = genz_step(spec.kind, spec.w, spec.c, x)
        out[:, t] = x
    return out[:, :, None]


def lorenz_deriv(spec: LorenzSpec, state: np.ndarray) -> np.ndarray:
    """Right-hand side of the Lorenz system; state has trailing dim 3."""
    x, y, z = state[..., 0], state[..., 1], state[..., 2]
    return np.stack(
        [
            spec.sigma * (y - x),
            x * (spec.rho - z) - y,
            x * y - spec.beta * z,
        ],
        axis=-1,
    )


def _rk4_step(spec: LorenzSpec, state: np.ndarray) -> np.ndarray:
    dt = spec.dt
    k1 = lorenz_deriv(spec, state)
    k2 = lorenz_deriv(spec, state + 0.5 * dt * k1)
    k3 = lorenz_deriv(spec, state + 0.5 * dt * k2)
    k4 = lorenz_deriv(spec, state + dt * k3)
    return state + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def lorenz_integrate(spec: LorenzSpec, x0) -> np.ndarray:
    """Integrate one trajectory and resample by Euclidean arc length.

    Emits the first integration point past each multiple of
    ``resample_distance`` in accumulated arc length, up to ``seq_len``
    points. Aborts on numerical divergence.
    """
    state = np.asarray(x0, dtype=np.float64)
    if state.shape != (3,) or not np.all(np.isfinite(state)):
        raise ValueError(f"initial state must be a finite 3-vector, got {x0!r}")
    samples = []
    arc = 0.0
    threshold = spec.resample_distance
    for _ in range(spec.max_steps):
        nxt = _rk4_step(spec, state)
        if not np.all(np.isfinite(nxt)):
            raise FloatingPointError("Lorenz integration diverged")
        arc += float(np.linalg.norm(nxt - state))
        state = nxt
        if arc >= threshold:
            samples.append(state.copy())
            threshold += spec.resample_distance
            if len(samples) >= spec.seq_len:
                break
    return np.asarray(samples)


def gen_lorenz_dataset(spec: LorenzSpec, seed: int) -> np.ndarray:
    """Vectorized version of lorenz_integrate over n_traj trajectories.

    Returns (n_traj, seq_len, 3); trajectories that fail to accumulate
    enough arc length within max_steps are dropped.
    """
    rng = np.random.default_rng(seed)
    lo, hi = spec.init_range
    state = rng.uniform(lo, hi, size=(spec.n_traj, 3))
    samples = np.zeros((spec.n_traj, spec.seq_len, 3))
    counts = np.zeros(spec.n_traj, dtype=np.int64)
    arc = np.zeros(spec.n_traj)
    threshold = np.full(spec.n_traj, spec.resample_distance)
    for _ in range(spec.max_steps):
        nxt = _rk4_step(spec, state)
        arc += np.linalg.norm(nxt - state, axis=1)
        state = nxt
        hit = (arc >= threshold) & (counts < spec.seq_len)
        if np.any(hit):
            samples[hit, counts[hit]] = state[hit]
            counts[hit] += 1
            threshold[hit] += spec.resample_distance
        if np.all(counts >= spec.seq_len):
            break
    full = counts >= spec.seq_len
    return samples[full]


def write_dataset_csv(path, sequences: np.ndarray):
    """CSV rows: sequence id, step index, then one column per feature."""
    n, t, d = sequences.shape
    seq_ids = np.repeat(np.arange(n), t)
    steps = np.tile(np.arange(t), n)
    flat = sequences.reshape(n * t, d)
    table = np.column_stack([seq_ids, steps, flat])
    header = "sequence,step," + ",".join(f"x{i}" for i in range(d))
    np.savetxt(path, table, delimiter=",", header=header, comments="",
               fmt=["%d", "%d"] + ["%.17g"] * d)


def read_dataset_csv(path) -> np.ndarray:
    """Inverse of write_dataset_csv; returns (n, t, d)."""
    table = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    seq_ids = table[:, 0].astype(np.int64)
    n = seq_ids.max() + 1
    t = len(seq_ids) // n
    return table[:, 2:].reshape(n, t, -1)


def spec_to_dict(spec) -> dict:
    out = asdict(spec)
    out["family"] = "genz" if isinstance(spec, GenzSpec) else "lorenz"
    return out
