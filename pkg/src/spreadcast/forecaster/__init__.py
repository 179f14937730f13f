from .checkpoint import load_checkpoint, save_checkpoint
from .model import (
    N_CLASSES,
    N_HOURS,
    ModelConfig,
    ModelParams,
    ShapeError,
    batch_loss,
    forward,
    grad,
    init_model,
    loss,
    loss_and_grad,
    positional_encoding,
    predict_proba,
)
from .training import AdamW, TrainConfig, TrainHistory, train

__all__ = [
    "N_CLASSES",
    "N_HOURS",
    "AdamW",
    "ModelConfig",
    "ModelParams",
    "ShapeError",
    "TrainConfig",
    "TrainHistory",
    "batch_loss",
    "forward",
    "grad",
    "init_model",
    "load_checkpoint",
    "loss",
    "loss_and_grad",
    "positional_encoding",
    "predict_proba",
    "save_checkpoint",
    "train",
]
