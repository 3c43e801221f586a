"""Inference-only residual-density network.

The encoder maps the original image to a latent grid at half resolution,
each latent vector is replaced by the index of its nearest codebook entry,
and the decoder maps the selected codebook vectors to per-pixel location and
scale parameters of the residual logistic. Decompression only ever needs the
decoder half: indices are decoded from the stream first, so the density is
reconstructible without the image.

Odd image sizes are handled by edge-replicating to even dimensions before
the strided stage; the parameter planes are cropped back to H x W at the
output. The latent grid is therefore always ceil(H/2) x ceil(W/2).
"""

from __future__ import annotations

import numpy as np

from . import nn
from .errors import ModelError
from .logistic import default_grid
from .pmf import QuantizedPmf, quantize_pmf
from .predictor import validate_image
from .weights import ModelWeights

# mu logits are clipped so 255*sigmoid stays strictly inside (0, 255) even
# after float32 saturation; s is pinned to the default scale-grid span
_MU_LOGIT_LIMIT = np.float32(15.0)
_LOG_S_MIN = np.float32(np.log(default_grid().s_min))
_LOG_S_MAX = np.float32(np.log(default_grid().s_max))


def _even_pad(image: np.ndarray) -> np.ndarray:
    ph = image.shape[0] & 1
    pw = image.shape[1] & 1
    if ph or pw:
        image = np.pad(image, ((0, ph), (0, pw), (0, 0)), mode="edge")
    return image


def _normalize(image: np.ndarray) -> np.ndarray:
    x = image.astype(np.float32) / np.float32(127.5) - np.float32(1.0)
    return np.ascontiguousarray(x.transpose(2, 0, 1))


def _require_network(weights: ModelWeights) -> None:
    if not weights.has_network:
        raise ModelError("model has no network tensors")


def encode_to_indices(image: np.ndarray, weights: ModelWeights) -> np.ndarray:
    """Nearest-codebook index per latent vector; ties take the smaller index."""
    validate_image(image)
    _require_network(weights)
    t = weights.tensors
    x = _normalize(_even_pad(image))
    h = nn.relu(nn.conv2d(x, t["enc.stem.w"], t["enc.stem.b"]))
    h = nn.relu(nn.conv2d(h, t["enc.down.w"], t["enc.down.b"], stride=2))
    for i in range(weights.config.blocks):
        h = nn.residual_block(
            h,
            t[f"enc.block{i}.conv1.w"], t[f"enc.block{i}.conv1.b"],
            t[f"enc.block{i}.conv2.w"], t[f"enc.block{i}.conv2.b"],
        )
    z = nn.conv2d(h, t["enc.proj.w"], t["enc.proj.b"])  # (Dc, h, w)
    dc, gh, gw = z.shape
    zf = z.reshape(dc, gh * gw).T.astype(np.float64)
    cb = t["codebook"].astype(np.float64)  # (K, Dc)
    # accumulate squared distances one component at a time so the float64
    # rounding matches a plain per-vector scan exactly (argmin tie stability)
    dist = np.zeros((zf.shape[0], cb.shape[0]), dtype=np.float64)
    for c in range(dc):
        diff = zf[:, c, None] - cb[None, :, c]
        dist += diff * diff
    idx = np.argmin(dist, axis=1)
    return idx.reshape(gh, gw).astype(np.uint8)


def decode_to_params(
    indices: np.ndarray,
    weights: ModelWeights,
    out_shape: tuple[int, int],
) -> tuple[np.ndarray, np.ndarray]:
    """Per-pixel (mu, s) planes of shape H x W x 3, float32."""
    _require_network(weights)
    t = weights.tensors
    H, W = out_shape
    gh, gw = (H + 1) // 2, (W + 1) // 2
    indices = np.asarray(indices)
    if indices.shape != (gh, gw):
        raise ModelError(f"index grid {indices.shape}, expected {(gh, gw)}")
    if indices.min() < 0 or indices.max() >= weights.config.K:
        raise ModelError("codebook index out of range")
    zq = t["codebook"][indices.astype(np.int64)]  # (gh, gw, Dc)
    h = np.ascontiguousarray(zq.transpose(2, 0, 1))
    h = nn.relu(nn.conv2d(h, t["dec.proj.w"], t["dec.proj.b"]))
    for i in range(weights.config.blocks):
        h = nn.residual_block(
            h,
            t[f"dec.block{i}.conv1.w"], t[f"dec.block{i}.conv1.b"],
            t[f"dec.block{i}.conv2.w"], t[f"dec.block{i}.conv2.b"],
        )
    u = nn.conv2d(h, t["dec.up.w"], t["dec.up.b"])
    u = nn.relu(nn.pixel_shuffle(u, 2))
    a = nn.conv2d(u, t["dec.mu.w"], t["dec.mu.b"])
    braw = nn.conv2d(u, t["dec.s.w"], t["dec.s.b"])
    a = np.clip(a, -_MU_LOGIT_LIMIT, _MU_LOGIT_LIMIT)
    mu = np.float32(255.0) * nn.sigmoid(a)
    s = np.exp(np.clip(braw, _LOG_S_MIN, _LOG_S_MAX))
    s = np.clip(s, np.float32(default_grid().s_min), np.float32(default_grid().s_max))
    mu = mu[:, :H, :W].transpose(1, 2, 0)
    s = s[:, :H, :W].transpose(1, 2, 0)
    return np.ascontiguousarray(mu), np.ascontiguousarray(s)


def index_histogram_pmf(weights: ModelWeights, M: int) -> QuantizedPmf:
    """Coding distribution for the index stream: stored usage counts with
    add-one smoothing; an absent (all-zero) histogram degrades to uniform."""
    return quantize_pmf(weights.histogram.astype(np.float64) + 1.0, M)
