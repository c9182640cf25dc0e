"""Reconstruction quality (MSE, PSNR, SSIM) and classification metrics.

Image inputs are on the unit scale and are rescaled to [0, 255] before any
differencing, so MSE is reported in squared 8-bit units.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

PEAK = 255.0
SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_C1 = (0.01 * PEAK) ** 2
SSIM_C2 = (0.03 * PEAK) ** 2


@dataclass
class MetricsRecord:
    mse: float
    psnr: float
    ssim: float
    n_images: int

    def as_dict(self):
        return asdict(self)


def _pair(x, y):
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise ValueError(f"shape mismatch: {x.shape} vs {y.shape}")
    return x * PEAK, y * PEAK


def mse(x, y) -> float:
    a, b = _pair(x, y)
    d = a - b
    return float(np.mean(d * d))


def psnr_from_mse(m) -> float:
    """``10 log10(255^2 / mse)``; identical images give ``math.inf``."""
    if m == 0:
        return math.inf
    return 10.0 * math.log10(PEAK * PEAK / m)


def psnr(x, y) -> float:
    return psnr_from_mse(mse(x, y))


def _gaussian_window():
    r = np.arange(SSIM_WINDOW) - SSIM_WINDOW // 2
    g = np.exp(-(r * r) / (2 * SSIM_SIGMA ** 2))
    g /= g.sum()
    return np.outer(g, g)


_WINDOW = _gaussian_window()


def _filter(img):
    # weighted mean over every full 11x11 window position
    return np.tensordot(sliding_window_view(img, _WINDOW.shape), _WINDOW, axes=([2, 3], [0, 1]))


def ssim(x, y) -> float:
    """Mean SSIM over all valid 11x11 Gaussian-window positions (sigma 1.5)."""
    a, b = _pair(x, y)
    a, b = np.squeeze(a), np.squeeze(b)
    if a.ndim != 2:
        raise ValueError(f"ssim expects a single grayscale image, got shape {a.shape}")
    if min(a.shape) < SSIM_WINDOW:
        raise ValueError(f"image {a.shape} smaller than the {SSIM_WINDOW}x{SSIM_WINDOW} window")
    mu_a, mu_b = _filter(a), _filter(b)
    var_a = _filter(a * a) - mu_a * mu_a
    var_b = _filter(b * b) - mu_b * mu_b
    cov = _filter(a * b) - mu_a * mu_b
    num = (2 * mu_a * mu_b + SSIM_C1) * (2 * cov + SSIM_C2)
    den = (mu_a * mu_a + mu_b * mu_b + SSIM_C1) * (var_a + var_b + SSIM_C2)
    return float(np.mean(num / den))


def batch_metrics(originals, recovered) -> MetricsRecord:
    """Per-image MSE / PSNR / SSIM, each averaged arithmetically over the batch."""
    originals, recovered = np.asarray(originals), np.asarray(recovered)
    if len(originals) != len(recovered):
        raise ValueError(f"count mismatch: {len(originals)} vs {len(recovered)}")
    if len(originals) == 0:
        raise ValueError("empty batch")
    per = [(mse(o, r), ssim(o, r)) for o, r in zip(originals, recovered)]
    mses = [m for m, _ in per]
    return MetricsRecord(
        mse=float(np.mean(mses)),
        psnr=float(np.mean([psnr_from_mse(m) for m in mses])),
        ssim=float(np.mean([s for _, s in per])),
        n_images=len(per),
    )


def accuracy(model, dataset) -> float:
    """Top-1 accuracy of ``model.predict`` on ``dataset``."""
    if len(dataset) == 0:
        raise ValueError("empty dataset")
    return float(np.mean(model.predict(dataset) == np.asarray(dataset.labels)))


def mean_std(values):
    """Mean and sample standard deviation (n - 1 denominator, 0 for one value)."""
    v = np.asarray(values, dtype=np.float64)
    if v.size == 0:
        raise ValueError("mean_std of an empty sequence")
    std = float(v.std(ddof=1)) if v.size > 1 else 0.0
    return float(v.mean()), std
