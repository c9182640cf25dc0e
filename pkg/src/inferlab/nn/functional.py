"""Differentiable ops on :class:`Tensor`.

Image tensors are NCHW. Convolutions are cross-correlations, matching the
usual deep-learning convention.
"""
from __future__ import annotations

import numpy as np

from .tensor import Tensor, _record

PROB_FLOOR = 1e-12


def dense(x: Tensor, w: Tensor, b: Tensor | None = None) -> Tensor:
    """``x @ w.T + b`` with ``w`` of shape (out, in)."""
    xd, wd = x.data, w.data
    out = xd @ wd.T
    if b is not None:
        out = out + b.data

    def backward(g):
        gx = g @ wd if x.requires_grad else None
        gw = g.T @ xd
        gb = g.sum(axis=0) if b is not None else None
        return gx, gw, gb

    parents = (x, w) if b is None else (x, w, b)
    return _record(out, parents, backward)


def _pad(a, p):
    if p == 0:
        return a
    return np.pad(a, ((0, 0), (0, 0), (p, p), (p, p)))


def _im2col(xp, k, ho, wo, stride=1):
    """(N, C, Hp, Wp) -> (C*k*k, N*ho*wo) with rows in (c, a, b) order.

    Built from k*k slice copies; each slice keeps W contiguous, which is far
    cheaper than materialising a channel-last window view.
    """
    n, c = xp.shape[:2]
    cols = np.empty((c, k, k, n, ho, wo))
    xt = xp.transpose(1, 0, 2, 3)
    for a in range(k):
        for b in range(k):
            cols[:, a, b] = xt[:, :, a:a + stride * (ho - 1) + 1:stride, b:b + stride * (wo - 1) + 1:stride]
    return cols.reshape(c * k * k, n * ho * wo)


def _conv_raw(x, w, pad):
    n, _, h, wd = x.shape
    o, _, k, _ = w.shape
    ho, wo = h + 2 * pad - k + 1, wd + 2 * pad - k + 1
    cols = _im2col(_pad(x, pad), k, ho, wo)
    out = w.reshape(o, -1) @ cols
    return np.ascontiguousarray(out.reshape(o, n, ho, wo).transpose(1, 0, 2, 3)), cols


def conv2d(x: Tensor, w: Tensor, b: Tensor | None = None, padding: int = 1) -> Tensor:
    """Stride-1 2-D convolution, weight shape (out, in, k, k)."""
    wd = w.data
    o, c, k, _ = wd.shape
    out, cols = _conv_raw(x.data, wd, padding)
    if b is not None:
        out += b.data[None, :, None, None]

    def backward(g):
        gmat = g.transpose(1, 0, 2, 3).reshape(o, -1)
        gw = (gmat @ cols.T).reshape(wd.shape)
        gb = g.sum(axis=(0, 2, 3)) if b is not None else None
        gx = None
        if x.requires_grad:
            # stride-1 input grad is a full correlation with the flipped kernel
            wflip = np.ascontiguousarray(wd[:, :, ::-1, ::-1].transpose(1, 0, 2, 3))
            gx, _ = _conv_raw(g, wflip, k - 1 - padding)
        return gx, gw, gb

    parents = (x, w) if b is None else (x, w, b)
    return _record(out, parents, backward)


def conv_transpose2d(x: Tensor, w: Tensor, b: Tensor | None = None,
                     stride: int = 2, padding: int = 1) -> Tensor:
    """Fractionally-strided convolution, weight shape (in, out, k, k).

    Output side is ``(H - 1) * stride - 2 * padding + k``; kernel 4, stride 2,
    padding 1 gives an exact 2x upsampling.
    """
    xd, wd = x.data, w.data
    n, ci, h, wdt = xd.shape
    _, co, k, _ = wd.shape
    hf, wf = (h - 1) * stride + k, (wdt - 1) * stride + k
    ho, wo = hf - 2 * padding, wf - 2 * padding
    xm = xd.transpose(1, 0, 2, 3).reshape(ci, -1)
    wm = wd.reshape(ci, -1)
    cols = (wm.T @ xm).reshape(co, k, k, n, h, wdt)
    full = np.zeros((co, n, hf, wf))
    for a in range(k):
        for c in range(k):
            full[:, :, a:a + stride * (h - 1) + 1:stride, c:c + stride * (wdt - 1) + 1:stride] += cols[:, a, c]
    out = np.ascontiguousarray(full[:, :, padding:padding + ho, padding:padding + wo].transpose(1, 0, 2, 3))
    if b is not None:
        out += b.data[None, :, None, None]

    def backward(g):
        gfull = np.zeros((n, co, hf, wf))
        gfull[:, :, padding:padding + ho, padding:padding + wo] = g
        gcols = _im2col(gfull, k, h, wdt, stride)
        gw = (xm @ gcols.T).reshape(wd.shape)
        gb = g.sum(axis=(0, 2, 3)) if b is not None else None
        gx = None
        if x.requires_grad:
            gx = (wm @ gcols).reshape(ci, n, h, wdt).transpose(1, 0, 2, 3)
            gx = np.ascontiguousarray(gx)
        return gx, gw, gb

    parents = (x, w) if b is None else (x, w, b)
    return _record(out, parents, backward)


def max_pool2d(x: Tensor, size: int = 2) -> Tensor:
    """Non-overlapping max pooling. Ties go to the first element in row-major order."""
    xd = x.data
    n, c, h, w = xd.shape
    if h % size or w % size:
        raise ValueError(f"max_pool2d: spatial shape {(h, w)} not divisible by {size}")
    hs, ws = h // size, w // size
    win = xd.reshape(n, c, hs, size, ws, size).transpose(0, 1, 2, 4, 3, 5).reshape(n, c, hs, ws, size * size)
    idx = win.argmax(axis=-1)[..., None]
    out = np.take_along_axis(win, idx, axis=-1)[..., 0]

    def backward(g):
        gwin = np.zeros_like(win)
        np.put_along_axis(gwin, idx, g[..., None], axis=-1)
        gx = gwin.reshape(n, c, hs, ws, size, size).transpose(0, 1, 2, 4, 3, 5).reshape(n, c, h, w)
        return (gx,)

    return _record(out, (x,), backward)


def relu(x: Tensor) -> Tensor:
    mask = x.data > 0
    return _record(np.where(mask, x.data, 0.0), (x,), lambda g: (g * mask,))


def sigmoid(x: Tensor) -> Tensor:
    out = 0.5 * (1.0 + np.tanh(0.5 * x.data))
    return _record(out, (x,), lambda g: (g * out * (1.0 - out),))


def softmax(x: Tensor) -> Tensor:
    """Softmax over the last axis."""
    z = x.data - x.data.max(axis=-1, keepdims=True)
    e = np.exp(z)
    s = e / e.sum(axis=-1, keepdims=True)

    def backward(g):
        return (s * (g - (g * s).sum(axis=-1, keepdims=True)),)

    return _record(s, (x,), backward)


def flatten(x: Tensor) -> Tensor:
    shape = x.shape
    return _record(x.data.reshape(shape[0], -1), (x,), lambda g: (g.reshape(shape),))


def cross_entropy(probs, labels) -> Tensor:
    """Mean of ``-ln p[label]`` with probabilities floored at 1e-12.

    ``probs`` is one probability vector with an int label, or a (N, C) batch
    with N labels.
    """
    p = probs if isinstance(probs, Tensor) else Tensor(probs)
    single = p.data.ndim == 1
    pd = p.data[None, :] if single else p.data
    lab = np.atleast_1d(np.asarray(labels))
    if not np.issubdtype(lab.dtype, np.integer):
        raise TypeError("class labels must be integers")
    n, c = pd.shape
    if lab.shape != (n,):
        raise ValueError(f"expected {n} labels, got shape {lab.shape}")
    if np.any(lab < 0) or np.any(lab >= c):
        raise IndexError(f"class index out of range [0, {c})")
    if np.any(pd < 0) or np.any(np.abs(pd.sum(axis=1) - 1.0) > 1e-9):
        raise ValueError("probabilities must be non-negative and sum to 1")
    rows = np.arange(n)
    picked = pd[rows, lab]
    clipped = np.maximum(picked, PROB_FLOOR)
    loss = np.array(-np.log(clipped).mean())

    def backward(g):
        gp = np.zeros_like(pd)
        gp[rows, lab] = np.where(picked >= PROB_FLOOR, -g / (n * clipped), 0.0)
        return (gp[0] if single else gp,)

    return _record(loss, (p,), backward)


def l2_recon_loss(pred: Tensor, target) -> Tensor:
    """``(1/n) * sum_i ||pred_i - target_i||^2`` over the leading batch axis."""
    t = target.data if isinstance(target, Tensor) else np.asarray(target, dtype=np.float64)
    if pred.shape != t.shape:
        raise ValueError(f"l2_recon_loss: shape mismatch {pred.shape} vs {t.shape}")
    n = pred.shape[0]
    diff = pred.data - t
    loss = np.array(np.sum(diff * diff) / n)
    return _record(loss, (pred,), lambda g: (g * 2.0 * diff / n,))
