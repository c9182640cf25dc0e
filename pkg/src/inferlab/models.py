"""Architectures: tabular MLP, splittable CNN and the inversion decoder."""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .nn import (Conv2d, ConvTranspose2d, Dense, Flatten, MaxPool2d, ReLU, Sequential, ShapeError,
                 Sigmoid, Softmax, Tensor, TrainConfig, cross_entropy, make_optimizer, no_grad)
from .nn.checkpoint import assign_params, load_params, save_params

CUT_POINTS = (2, 4, 6)
CNN_CHANNELS = 32


class Classifier(Sequential):
    """A Sequential ending in softmax, plus dataset-to-array plumbing."""

    def prepare(self, data):
        raise NotImplementedError

    def predict_proba(self, data, batch_size=512):
        x = self.prepare(data)
        with no_grad():
            outs = [self.forward(Tensor(x[i:i + batch_size])).data for i in range(0, len(x), batch_size)]
        return np.concatenate(outs) if outs else np.zeros((0,) + self.output_shape)

    def predict(self, data):
        return self.predict_proba(data).argmax(axis=1)


class MlpClassifier(Classifier):
    """Two hidden ReLU layers of width 100 and a softmax head.

    Inputs are attribute level indices; they are z-scored with statistics
    captured by :meth:`fit_standardizer` (identity until then).
    """

    HIDDEN = 100

    def __init__(self, d_in, n_classes, rng):
        h = self.HIDDEN
        layers = [Dense(d_in, h, rng), ReLU(), Dense(h, h, rng), ReLU(), Dense(h, n_classes, rng), Softmax()]
        super().__init__(layers, (d_in,))
        self.d_in, self.n_classes = d_in, n_classes
        self.input_mean = np.zeros(d_in)
        self.input_std = np.ones(d_in)

    def fit_standardizer(self, records):
        r = np.asarray(records, dtype=np.float64)
        self.input_mean = r.mean(axis=0)
        std = r.std(axis=0)
        self.input_std = np.where(std > 0, std, 1.0)

    def prepare(self, data):
        records = getattr(data, "records", data)
        r = np.asarray(records, dtype=np.float64)
        if r.ndim == 1:
            r = r[None, :]
        return (r - self.input_mean) / self.input_std

    def arch(self):
        return {"kind": "mlp", "d_in": self.d_in, "classes": self.n_classes,
                "input_mean": self.input_mean.tolist(), "input_std": self.input_std.tolist()}


def build_mlp(d_in, n_classes, seed):
    if d_in < 1 or n_classes < 2:
        raise ValueError("build_mlp needs d_in >= 1 and at least 2 classes")
    return MlpClassifier(d_in, n_classes, np.random.default_rng(seed))


def _images_nchw(data):
    images = getattr(data, "images", data)
    x = np.asarray(images, dtype=np.float64)
    if x.ndim == 2:
        x = x[None, None]
    elif x.ndim == 3:
        x = x[:, None]
    return x


class SplitCnn(Classifier):
    """Six 3x3 conv layers (32 channels), a 2x2 maxpool after every second
    conv, then FC(hidden) + ReLU and FC(C) + softmax.

    ``party_a`` ends with the activation right after the maxpool that
    follows conv ``cut_point``; ``party_b`` is everything after it. Both
    halves share layer objects with the full stack.
    """

    def __init__(self, image_side, n_classes, cut_point, hidden_width, rng):
        if image_side % 8:
            raise ValueError(f"image_side must be divisible by 8, got {image_side}")
        c = CNN_CHANNELS
        layers = []
        c_in = 1
        for block in range(3):
            layers += [Conv2d(c_in, c, rng), ReLU(), Conv2d(c, c, rng), ReLU(), MaxPool2d(2)]
            c_in = c
        flat = c * (image_side // 8) ** 2
        layers += [Flatten(), Dense(flat, hidden_width, rng), ReLU(), Dense(hidden_width, n_classes, rng), Softmax()]
        super().__init__(layers, (1, image_side, image_side))
        self.image_side, self.n_classes, self.hidden_width = image_side, n_classes, hidden_width
        self.cut_point = cut_point
        self.party_a, self.party_b = self.split_at(cut_point)

    @staticmethod
    def cut_index(cut_point):
        if cut_point not in CUT_POINTS:
            raise ValueError(f"cut_point must be one of {{2, 4, 6}}, got {cut_point!r}")
        return 5 * (cut_point // 2)

    def split_at(self, cut_point):
        i = self.cut_index(cut_point)
        a = Sequential(self.layers[:i], self.input_shape)
        b = Sequential(self.layers[i:], a.output_shape, offset=i)
        return a, b

    def activation_shape(self, cut_point=None):
        return self.split_at(self.cut_point if cut_point is None else cut_point)[0].output_shape

    def prepare(self, data):
        return _images_nchw(data)

    def arch(self):
        return {"kind": "split_cnn", "image_side": self.image_side, "classes": self.n_classes,
                "cut_point": self.cut_point, "hidden_width": self.hidden_width}


def build_split_cnn(image_side, n_classes, cut_point, hidden_width=128, seed=0):
    SplitCnn.cut_index(cut_point)
    return SplitCnn(image_side, n_classes, cut_point, hidden_width, np.random.default_rng(seed))


class InverseNet(Sequential):
    """Decoder from a cut-layer activation back to a (1, side, side) image.

    One stride-2 transposed conv (kernel 4) + ReLU per halving between the
    image and the activation, then a 3x3 conv to one channel and a sigmoid.
    """

    def __init__(self, activation_shape, image_side, rng, channels=CNN_CHANNELS):
        c, h, w = activation_shape
        if h != w or image_side % h:
            raise ShapeError(f"unrecognized activation shape {activation_shape} for image side {image_side}")
        ratio = image_side // h
        if ratio not in (1, 2, 4, 8):
            raise ShapeError(f"unrecognized activation shape {activation_shape} for image side {image_side}")
        self.n_upsample = int(np.log2(ratio))
        layers = []
        c_in = c
        for _ in range(self.n_upsample):
            layers += [ConvTranspose2d(c_in, channels, rng), ReLU()]
            c_in = channels
        layers += [Conv2d(c_in, 1, rng), Sigmoid()]
        super().__init__(layers, tuple(activation_shape))
        self.image_side = image_side

    def arch(self):
        return {"kind": "inverse", "activation_shape": list(self.input_shape), "image_side": self.image_side}


def build_inverse_net(activation_shape, image_side, seed=0, strict=True):
    """Build the decoder for one of the legal cut shapes of ``image_side``.

    With ``strict=False`` any (C, side / 2**k, side / 2**k) shape with
    k <= 3 is accepted.
    """
    shape = tuple(int(s) for s in activation_shape)
    if strict:
        legal = {(CNN_CHANNELS, image_side // 2 ** k, image_side // 2 ** k) for k in (1, 2, 3)}
        if image_side % 8 or shape not in legal:
            raise ShapeError(f"unrecognized activation shape {shape}; legal shapes for side "
                             f"{image_side} are {sorted(legal, reverse=True)}")
    return InverseNet(shape, image_side, np.random.default_rng(seed))


def batch_slices(n, batch_size, rng):
    """Shuffled minibatch index arrays for one epoch; the last may be short."""
    perm = rng.permutation(n)
    return [perm[i:i + batch_size] for i in range(0, n, batch_size)]


def train_classifier(model: Classifier, dataset, config: TrainConfig):
    """Minibatch cross-entropy training. Returns ``(model, trace)``.

    ``trace`` has one ``{"epoch", "loss", "accuracy"}`` entry per epoch,
    measured on the training batches as they are visited.
    """
    labels = np.asarray(dataset.labels)
    config.check_dataset_size(len(labels))
    trace = []
    if config.epochs == 0:
        return model, trace
    if isinstance(model, MlpClassifier):
        model.fit_standardizer(dataset.records)
    x = model.prepare(dataset)
    rng = np.random.default_rng(config.rng_seed)
    opt = make_optimizer(model.params(), config)
    for epoch in range(config.epochs):
        total, correct = 0.0, 0
        for idx in batch_slices(len(labels), config.batch_size, rng):
            probs = model.forward(Tensor(x[idx]))
            loss = cross_entropy(probs, labels[idx])
            loss.backward()
            opt.step()
            total += float(loss.data) * len(idx)
            correct += int((probs.data.argmax(axis=1) == labels[idx]).sum())
        trace.append({"epoch": epoch, "loss": total / len(labels), "accuracy": correct / len(labels)})
    return model, trace


def save_model(model, path):
    """Write ``<path>.nnck`` (parameters) and ``<path>.json`` (architecture)."""
    path = Path(path)
    save_params(model.params(), path.with_suffix(".nnck"))
    path.with_suffix(".json").write_text(json.dumps(model.arch(), indent=2))


def load_model(path):
    path = Path(path)
    arch = json.loads(path.with_suffix(".json").read_text())
    kind = arch["kind"]
    if kind == "mlp":
        model = build_mlp(arch["d_in"], arch["classes"], 0)
        model.input_mean = np.array(arch["input_mean"])
        model.input_std = np.array(arch["input_std"])
    elif kind == "split_cnn":
        model = build_split_cnn(arch["image_side"], arch["classes"], arch["cut_point"], arch["hidden_width"], 0)
    elif kind == "inverse":
        model = build_inverse_net(arch["activation_shape"], arch["image_side"], 0, strict=False)
    else:
        raise ValueError(f"unknown model kind {kind!r}")
    assign_params(model.params(), load_params(path.with_suffix(".nnck")))
    return model
