"""Output and parameter perturbation defenses."""
from __future__ import annotations

import copy
from dataclasses import dataclass

import numpy as np

from .nn import Tensor


@dataclass(frozen=True)
class LabelPerturbConfig:
    """Randomized response: keep the label with prob. ``1 - p``, otherwise
    replace it by one of the other ``classes - 1`` labels uniformly."""

    p: float
    classes: int = 2
    stream: int = 0

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"flip probability must lie in [0, 1], got {self.p}")
        if self.classes < 2:
            raise ValueError("need at least 2 classes")


@dataclass(frozen=True)
class ModelPerturbConfig:
    sigma: float
    stream: int = 0

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError(f"sigma must be >= 0, got {self.sigma}")


def perturb_labels(y, cfg: LabelPerturbConfig, rng: np.random.Generator) -> np.ndarray:
    y = np.asarray(y, dtype=np.int64)
    if np.any(y < 0) or np.any(y >= cfg.classes):
        raise ValueError(f"labels must lie in [0, {cfg.classes})")
    flip = rng.random(y.shape) < cfg.p
    # uniform over the C-1 other classes: draw from [0, C-1) and skip y
    alt = rng.integers(0, cfg.classes - 1, size=y.shape)
    alt = alt + (alt >= y)
    return np.where(flip, alt, y)


def perturb_label(y, cfg: LabelPerturbConfig, rng: np.random.Generator) -> int:
    return int(perturb_labels(np.array([y]), cfg, rng)[0])


def expected_perturbed_accuracy(a, p, classes) -> float:
    """Accuracy of randomized-response labels given clean accuracy ``a``."""
    if not 0 <= a <= 1:
        raise ValueError("accuracy must lie in [0, 1]")
    return a * (1 - p) + (1 - a) * p / (classes - 1)


def perturb_params(params, cfg: ModelPerturbConfig, rng: np.random.Generator) -> dict:
    """New ParamSet with ``N(0, sigma^2)`` added to every scalar, drawn in
    ParamSet order. The input is left untouched."""
    out = {}
    for name, t in params.items():
        data = t.data.copy()
        if cfg.sigma > 0:
            data += cfg.sigma * rng.standard_normal(t.shape)
        out[name] = Tensor(data, requires_grad=t.requires_grad)
    return out


def perturb_model(model, cfg: ModelPerturbConfig, rng: np.random.Generator):
    """Deep copy of ``model`` with perturbed parameters, ready to deploy once."""
    clone = copy.deepcopy(model)
    noisy = perturb_params(clone.params(), cfg, rng)
    for name, t in clone.params().items():
        t.data = noisy[name].data
    return clone
