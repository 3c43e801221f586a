"""Minimal float32 inference primitives for the residual-density network.

Single-image, channels-first layout. Convolutions use edge-replicate
padding; accumulation order is fixed (tap-by-tap, channel contraction via
one matmul per tap) so repeated runs of the same graph are bit-identical.
"""

from __future__ import annotations

import numpy as np

from .errors import ModelError


def conv2d(x: np.ndarray, w: np.ndarray, b: np.ndarray, stride: int = 1) -> np.ndarray:
    """3x3 or 1x1 correlation, edge-replicate padding, stride 1 or 2."""
    cin, H, W = x.shape
    cout, cin_w, kh, kw = w.shape
    if cin_w != cin:
        raise ModelError(f"conv expects {cin_w} input channels, got {cin}")
    if stride not in (1, 2):
        raise ModelError("stride must be 1 or 2")
    ph, pw = kh // 2, kw // 2
    if ph or pw:
        x = np.pad(x, ((0, 0), (ph, ph), (pw, pw)), mode="edge")
    Ho = (H + 2 * ph - kh) // stride + 1
    Wo = (W + 2 * pw - kw) // stride + 1
    out = np.zeros((cout, Ho, Wo), dtype=np.float32)
    for i in range(kh):
        for j in range(kw):
            tap = x[:, i : i + (Ho - 1) * stride + 1 : stride,
                    j : j + (Wo - 1) * stride + 1 : stride]
            out += np.tensordot(w[:, :, i, j], tap, axes=(1, 0))
    return out + b[:, None, None].astype(np.float32)


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, np.float32(0))


def sigmoid(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float32)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    e = np.exp(x[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def pixel_shuffle(x: np.ndarray, r: int = 2) -> np.ndarray:
    """(C*r*r, h, w) -> (C, h*r, w*r); channel c*r*r + dy*r + dx lands at
    spatial offset (dy, dx)."""
    crr, h, w = x.shape
    if crr % (r * r):
        raise ModelError(f"cannot shuffle {crr} channels by r={r}")
    c = crr // (r * r)
    return (
        x.reshape(c, r, r, h, w)
        .transpose(0, 3, 1, 4, 2)
        .reshape(c, h * r, w * r)
    )


def residual_block(x, w1, b1, w2, b2):
    h = relu(conv2d(x, w1, b1))
    return relu(x + conv2d(h, w2, b2))
