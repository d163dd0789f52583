"""Tensor-train factorization of the higher-order transition tensor.

The transition tensor has one output mode of extent H (hidden size) and
P state modes of extent n = H*L + 1, where L is the number of hidden
lags and the leading entry of the augmented state is a bias unit. It is
stored as a chain of P+1 rank-3 cores:

    core 0:        (1, H, r_1)          -- output mode
    core p (1..P): (r_p, n, r_{p+1})    -- state modes, r_{P+1} = 1

Contraction against the augmented state never materializes the dense
tensor; cost is O(P * n * R^2) per forward pass.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .autodiff import ShapeError, Tensor, bmm, matmul, matvec, reshape, transpose

DENSE_CAP = 10_000_000


@dataclass
class TTWeight:
    """Tensor-train cores for one transition tensor."""

    hidden_size: int
    lags: int
    order: int
    cores: list = field(default_factory=list)

    @property
    def state_len(self) -> int:
        """Extent of every state mode: H*L + 1 (bias unit included)."""
        return self.hidden_size * self.lags + 1

    @property
    def rank_chain(self) -> tuple:
        chain = [c.shape[0] for c in self.cores]
        chain.append(self.cores[-1].shape[2])
        return tuple(chain)

    def validate(self):
        h, p, n = self.hidden_size, self.order, self.state_len
        if len(self.cores) != p + 1:
            raise ShapeError(f"expected {p + 1} cores, got {len(self.cores)}")
        if self.cores[0].shape[:2] != (1, h):
            raise ShapeError(f"output core shape {self.cores[0].shape} != (1, {h}, r)")
        for i in range(p):
            core = self.cores[i + 1]
            if core.shape[1] != n:
                raise ShapeError(f"state core {i + 1} mode extent {core.shape[1]} != {n}")
            if core.shape[0] != self.cores[i].shape[2]:
                raise ShapeError(
                    f"rank chain broken between cores {i} and {i + 1}: "
                    f"{self.cores[i].shape} vs {core.shape}"
                )
        if self.cores[-1].shape[2] != 1:
            raise ShapeError(f"trailing rank must be 1, got {self.cores[-1].shape[2]}")

    def parameters(self) -> dict:
        return {f"core{i}": c for i, c in enumerate(self.cores)}

    def core_arrays(self) -> list:
        return [c.data for c in self.cores]


def normalize_ranks(order: int, ranks) -> tuple:
    """Expand a rank spec into the full boundary-1 chain of length P+2.

    Accepts a single int (uniform interior rank), a sequence of interior
    ranks of length P, or a full chain of length P+2.
    """
    if isinstance(ranks, (int, np.integer)):
        chain = (1,) + (int(ranks),) * order + (1,)
    else:
        ranks = tuple(int(r) for r in ranks)
        if len(ranks) == order + 2:
            chain = ranks
        elif len(ranks) == order:
            chain = (1,) + ranks + (1,)
        else:
            raise ShapeError(
                f"rank spec of length {len(ranks)} for order {order}: "
                f"need {order} interior ranks or full chain of {order + 2}"
            )
    if chain[0] != 1 or chain[-1] != 1:
        raise ShapeError(f"boundary ranks must be 1, got chain {chain}")
    if any(r < 1 for r in chain):
        raise ShapeError(f"ranks must be positive, got chain {chain}")
    return chain


def core_shapes(hidden_size: int, lags: int, order: int, ranks) -> list:
    chain = normalize_ranks(order, ranks)
    n = hidden_size * lags + 1
    shapes = [(1, hidden_size, chain[1])]
    for p in range(1, order + 1):
        shapes.append((chain[p], n, chain[p + 1]))
    return shapes


def param_count(hidden_size: int, lags: int, order: int, ranks) -> int:
    """Exact number of entries across all cores."""
    return int(sum(np.prod(s) for s in core_shapes(hidden_size, lags, order, ranks)))


def dense_param_count(hidden_size: int, lags: int, order: int) -> int:
    """Entry count of the unfactorized transition tensor H * n^P."""
    n = hidden_size * lags + 1
    return hidden_size * n**order


def init_tt(hidden_size: int, lags: int, order: int, ranks, rng) -> TTWeight:
    """Gaussian cores with std (n * R)^(-1/2).

    Keeps the contraction output at O(1) scale for O(1) states at
    initialization. Deterministic given the generator state.
    """
    shapes = core_shapes(hidden_size, lags, order, ranks)
    n = hidden_size * lags + 1
    rmax = max(normalize_ranks(order, ranks))
    std = 1.0 / np.sqrt(n * rmax)
    cores = [Tensor(rng.normal(0.0, std, size=s)) for s in shapes]
    tt = TTWeight(hidden_size, lags, order, cores)
    tt.validate()
    return tt


def tt_contract(w: TTWeight, s: Tensor) -> Tensor:
    """Contract the train against the augmented state on all P modes.

    ``s`` may be a single state of shape (n,) or a batch (B, n); the
    result has shape (H,) or (B, H) respectively. Differentiable with
    respect to every core and to ``s``.
    """
    n = w.state_len
    if s.shape[-1] != n:
        raise ShapeError(f"state length {s.shape[-1]} != expected {n}")
    batched = s.ndim == 2
    if s.ndim > 2:
        raise ShapeError(f"state must be rank-1 or rank-2, got shape {s.shape}")

    # Fold each state core with s: (r_p, n, r_q) -> (r_p, r_q) matrices,
    # then chain-multiply left to right; intermediates never exceed R^2.
    if not batched:
        chain = None
        for core in w.cores[1:]:
            rp, _, rq = core.shape
            mat = reshape(
                matvec(reshape(transpose(core, (0, 2, 1)), (rp * rq, n)), s),
                (rp, rq),
            )
            chain = mat if chain is None else matmul(chain, mat)
        head = reshape(w.cores[0], (w.hidden_size, w.cores[0].shape[2]))
        # chain is (r_1, 1); fold the output core last
        return reshape(matmul(head, chain), (w.hidden_size,))

    b = s.shape[0]
    chain = None
    for core in w.cores[1:]:
        rp, _, rq = core.shape
        folded = reshape(
            matmul(s, reshape(transpose(core, (1, 0, 2)), (n, rp * rq))),
            (b, rp, rq),
        )
        chain = folded if chain is None else bmm(chain, folded)
    head = reshape(w.cores[0], (w.hidden_size, w.cores[0].shape[2]))
    return matmul(reshape(chain, (b, w.cores[0].shape[2])), transpose(head))


def to_dense(w: TTWeight, cap: int = DENSE_CAP) -> np.ndarray:
    """Reconstruct the full (H, n, ..., n) tensor. Small instances only."""
    n = w.state_len
    total = w.hidden_size * n**w.order
    if total > cap:
        raise ShapeError(
            f"dense reconstruction of {total} entries exceeds cap {cap}"
        )
    arrays = w.core_arrays()
    dense = arrays[0]  # (1, H, r1)
    for core in arrays[1:]:
        dense = np.tensordot(dense, core, axes=([-1], [0]))
    # (1, H, n, ..., n, 1) -> (H, n, ..., n)
    return dense.reshape(dense.shape[1:-1])


def dense_contract(dense: np.ndarray, s: np.ndarray) -> np.ndarray:
    """Contract a dense transition tensor with a state vector, mode by mode."""
    out = dense
    while out.ndim > 1:
        out = out @ s
    return out
