"""Minimal reverse-mode autodiff engine used by every model in the package."""
from .checkpoint import CheckpointError, assign_params, decode_params, encode_params, load_params, save_params
from .functional import (conv2d, conv_transpose2d, cross_entropy, dense, flatten, l2_recon_loss,
                         max_pool2d, relu, sigmoid, softmax)
from .layers import (Conv2d, ConvTranspose2d, Dense, Flatten, Layer, MaxPool2d, ReLU, Sequential,
                     ShapeError, Sigmoid, Softmax)
from .optim import SGD, Adam, TrainConfig, make_optimizer
from .tensor import Tensor, no_grad

__all__ = [
    "Tensor", "no_grad", "TrainConfig", "Adam", "SGD", "make_optimizer",
    "Sequential", "Layer", "Dense", "Conv2d", "ConvTranspose2d", "MaxPool2d", "ReLU", "Sigmoid",
    "Softmax", "Flatten", "ShapeError",
    "dense", "conv2d", "conv_transpose2d", "max_pool2d", "relu", "sigmoid", "softmax", "flatten",
    "cross_entropy", "l2_recon_loss",
    "encode_params", "decode_params", "save_params", "load_params", "assign_params", "CheckpointError",
]
