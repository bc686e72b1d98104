from .autodiff import (
    GradTape,
    Node,
    TapeStateError,
    backward,
    conv2d,
    dense,
    flatten,
    maxpool2x2,
    relu,
    soft_cross_entropy,
)
from .checkpoint import FormatError, load_tensors, save_tensors
from .model import PARAM_NAMES, Geometry, init_params, predict, small_cnn_forward
from .optim import LRSchedule, OptimizerState, lr_at_epoch, sgd_step

__all__ = [
    "FormatError",
    "Geometry",
    "GradTape",
    "LRSchedule",
    "Node",
    "OptimizerState",
    "PARAM_NAMES",
    "TapeStateError",
    "backward",
    "conv2d",
    "dense",
    "flatten",
    "init_params",
    "load_tensors",
    "lr_at_epoch",
    "maxpool2x2",
    "predict",
    "relu",
    "save_tensors",
    "sgd_step",
    "small_cnn_forward",
    "soft_cross_entropy",
]
