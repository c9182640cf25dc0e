"""Layer objects and the ``Sequential`` stack.

A layer owns its parameters and knows how to map a per-sample input shape
to its output shape; ``Sequential`` uses that to reject bad inputs before
any arithmetic happens.
"""
from __future__ import annotations

import math

import numpy as np

from . import functional as F
from .tensor import Tensor


class ShapeError(ValueError):
    pass


def kaiming_uniform(rng, shape, fan_in):
    bound = math.sqrt(6.0 / fan_in)
    return rng.uniform(-bound, bound, size=shape)


class Layer:
    def params(self):
        """(local_name, Tensor) pairs in a fixed order."""
        return []

    def output_shape(self, shape):
        return shape

    def __call__(self, x):
        return self.forward(x)

    def __repr__(self):
        return type(self).__name__ + "()"


class Dense(Layer):
    def __init__(self, n_in, n_out, rng):
        self.n_in, self.n_out = n_in, n_out
        self.weight = Tensor(kaiming_uniform(rng, (n_out, n_in), n_in), requires_grad=True)
        self.bias = Tensor(np.zeros(n_out), requires_grad=True)

    def params(self):
        return [("weight", self.weight), ("bias", self.bias)]

    def output_shape(self, shape):
        if shape != (self.n_in,):
            raise ShapeError(f"expected ({self.n_in},), got {shape}")
        return (self.n_out,)

    def forward(self, x):
        return F.dense(x, self.weight, self.bias)

    def __repr__(self):
        return f"Dense({self.n_in}, {self.n_out})"


class Conv2d(Layer):
    """Stride-1 convolution; ``padding=k//2`` keeps the spatial size."""

    def __init__(self, c_in, c_out, rng, kernel=3, padding=None):
        self.c_in, self.c_out, self.kernel = c_in, c_out, kernel
        self.padding = kernel // 2 if padding is None else padding
        fan_in = c_in * kernel * kernel
        self.weight = Tensor(kaiming_uniform(rng, (c_out, c_in, kernel, kernel), fan_in), requires_grad=True)
        self.bias = Tensor(np.zeros(c_out), requires_grad=True)

    def params(self):
        return [("weight", self.weight), ("bias", self.bias)]

    def output_shape(self, shape):
        if len(shape) != 3 or shape[0] != self.c_in:
            raise ShapeError(f"expected ({self.c_in}, H, W), got {shape}")
        grow = 2 * self.padding - self.kernel + 1
        h, w = shape[1] + grow, shape[2] + grow
        if h < 1 or w < 1:
            raise ShapeError(f"input {shape} too small for kernel {self.kernel}")
        return (self.c_out, h, w)

    def forward(self, x):
        return F.conv2d(x, self.weight, self.bias, padding=self.padding)

    def __repr__(self):
        return f"Conv2d({self.c_in}, {self.c_out}, kernel={self.kernel})"


class ConvTranspose2d(Layer):
    def __init__(self, c_in, c_out, rng, kernel=4, stride=2, padding=1):
        self.c_in, self.c_out = c_in, c_out
        self.kernel, self.stride, self.padding = kernel, stride, padding
        # each output pixel sees about (k/stride)^2 input taps per channel
        fan_in = max(1, c_in * (kernel // stride) ** 2)
        self.weight = Tensor(kaiming_uniform(rng, (c_in, c_out, kernel, kernel), fan_in), requires_grad=True)
        self.bias = Tensor(np.zeros(c_out), requires_grad=True)

    def params(self):
        return [("weight", self.weight), ("bias", self.bias)]

    def output_shape(self, shape):
        if len(shape) != 3 or shape[0] != self.c_in:
            raise ShapeError(f"expected ({self.c_in}, H, W), got {shape}")
        grow = lambda s: (s - 1) * self.stride - 2 * self.padding + self.kernel  # noqa: E731
        return (self.c_out, grow(shape[1]), grow(shape[2]))

    def forward(self, x):
        return F.conv_transpose2d(x, self.weight, self.bias, self.stride, self.padding)

    def __repr__(self):
        return f"ConvTranspose2d({self.c_in}, {self.c_out}, kernel={self.kernel}, stride={self.stride})"


class MaxPool2d(Layer):
    def __init__(self, size=2):
        self.size = size

    def output_shape(self, shape):
        if len(shape) != 3 or shape[1] % self.size or shape[2] % self.size:
            raise ShapeError(f"expected (C, H, W) with H, W divisible by {self.size}, got {shape}")
        return (shape[0], shape[1] // self.size, shape[2] // self.size)

    def forward(self, x):
        return F.max_pool2d(x, self.size)

    def __repr__(self):
        return f"MaxPool2d({self.size})"


class ReLU(Layer):
    def forward(self, x):
        return F.relu(x)


class Sigmoid(Layer):
    def forward(self, x):
        return F.sigmoid(x)


class Softmax(Layer):
    def output_shape(self, shape):
        if len(shape) != 1:
            raise ShapeError(f"expected a flat vector, got {shape}")
        return shape

    def forward(self, x):
        return F.softmax(x)


class Flatten(Layer):
    def output_shape(self, shape):
        return (int(np.prod(shape)),)

    def forward(self, x):
        return F.flatten(x)


class Sequential:
    """Ordered layer stack with a declared per-sample input shape.

    ``offset`` shifts the numeric prefix of parameter names, so the two
    halves of a split model keep the names they have in the whole model.
    """

    def __init__(self, layers, input_shape, offset=0):
        self.layers = list(layers)
        self.input_shape = tuple(input_shape)
        self.offset = offset
        self.output_shape = self._infer_shapes()

    def _infer_shapes(self):
        shape = self.input_shape
        for i, layer in enumerate(self.layers):
            try:
                shape = layer.output_shape(shape)
            except ShapeError as e:
                raise ShapeError(f"layer {i + self.offset} ({layer!r}): {e}") from None
        return shape

    def params(self):
        """ParamSet: ``{"<index>.<name>": Tensor}`` in construction order."""
        out = {}
        for i, layer in enumerate(self.layers):
            for name, t in layer.params():
                out[f"{i + self.offset}.{name}"] = t
        return out

    def n_params(self):
        return sum(t.size for t in self.params().values())

    def zero_grad(self):
        for t in self.params().values():
            t.grad = None

    def forward(self, x):
        if not isinstance(x, Tensor):
            x = Tensor(x)
        if x.shape[1:] != self.input_shape:
            raise ShapeError(f"layer {self.offset} ({self.layers[0]!r}): expected per-sample input "
                             f"{self.input_shape}, got {x.shape[1:]}")
        for layer in self.layers:
            x = layer(x)
        return x

    __call__ = forward

    def __len__(self):
        return len(self.layers)

    def __repr__(self):
        inner = ", ".join(repr(layer) for layer in self.layers)
        return f"Sequential(input_shape={self.input_shape}, [{inner}])"
