"""Higher-order tensor RNN forecasting engine."""

from .autodiff import Tensor, ShapeError
from .tt import TTWeight, init_tt, param_count, tt_contract, to_dense
from .cells import CellState, make_cell
from .seq2seq import Seq2SeqModel
from .training import ModelConfig, TrainConfig, sequence_loss, train_model

__all__ = [
    "Tensor",
    "ShapeError",
    "TTWeight",
    "init_tt",
    "param_count",
    "tt_contract",
    "to_dense",
    "CellState",
    "make_cell",
    "Seq2SeqModel",
    "ModelConfig",
    "TrainConfig",
    "sequence_loss",
    "train_model",
]
