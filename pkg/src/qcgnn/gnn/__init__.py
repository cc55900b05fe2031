"""Graph-attention expectation predictor and pair comparator."""
from .batch import Batch, EmptyKeySetError, make_batch, make_pair_batch
from .checkpoint import load_checkpoint, save_checkpoint
from .model import ARCHITECTURES, GnnModel, ModelConfig, attention_forward, init_params, loss_mse
from .optim import AdamState, adam_step

__all__ = [
    "ARCHITECTURES",
    "AdamState",
    "Batch",
    "EmptyKeySetError",
    "GnnModel",
    "ModelConfig",
    "adam_step",
    "attention_forward",
    "init_params",
    "load_checkpoint",
    "loss_mse",
    "make_batch",
    "make_pair_batch",
    "save_checkpoint",
]
