"""Causal three-neighbour pixel predictor and its residual transform.

Each channel's prediction is an affine combination of three already-known
values: the red channel uses its upper-left, up and left neighbours, while
green and blue each use their own left neighbour plus the previous channel's
left and co-located values. The coded quantity is the prediction error
recentred at 128 and reduced mod 256, so reconstruction is exact for any
finite parameter set.

Out-of-image context values read as 0 (one virtual row above, one virtual
column left for the stock layout). Predictions accumulate left-to-right in
float32 with the bias added last, are rounded half away from zero, and
reduced mod 256; this exact convention is shared with the compiled decode
kernels and is part of the format contract.

Decoding is available in two schedules that produce bit-identical output:
raster order, and the wavefront schedule (anti-diagonals for red, then
column-by-column for green and blue) whose intra-wave cells are mutually
independent and may run concurrently.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import FitError, ParameterError, UnsupportedConfigurationError

_CHANNELS = {"r": 0, "g": 1, "b": 2, 0: 0, 1: 1, 2: 2}

# (plane, du, dv) per context slot; plane 0 = same channel, 1 = previous one
_BASE_LAYOUT = {
    0: [(0, -1, -1), (0, -1, 0), (0, 0, -1)],
    1: [(0, 0, -1), (1, 0, -1), (1, 0, 0)],
    2: [(0, 0, -1), (1, 0, -1), (1, 0, 0)],
}
# appended per channel, in order, for receptive fields 4..7
_EXTRA_OFFSETS = [(0, -1, 1), (0, 0, -2), (0, -2, 0), (0, -1, -2)]


@dataclass(frozen=True)
class PredictorParams:
    """Per-channel context weights and biases, float32."""

    weights: np.ndarray  # (3, k)
    bias: np.ndarray  # (3,)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float32)
        b = np.asarray(self.bias, dtype=np.float32)
        if w.ndim != 2 or w.shape[0] != 3 or b.shape != (3,):
            raise ParameterError("weights must be (3, k), bias (3,)")
        if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
            raise ParameterError("predictor parameters must be finite")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "bias", b)

    @property
    def k(self) -> int:
        return int(self.weights.shape[1])

    def to_bytes(self) -> bytes:
        """12 float32 LE values: (W_r, b_r, W_g, b_g, W_b, b_b)."""
        if self.k != 3:
            raise ParameterError("only 3-context parameters serialize")
        out = b""
        for c in range(3):
            out += struct.pack("<3f", *self.weights[c])
            out += struct.pack("<f", self.bias[c])
        return out

    @classmethod
    def from_bytes(cls, data: bytes) -> "PredictorParams":
        if len(data) != 48:
            raise ParameterError("expected 48 bytes of predictor parameters")
        vals = struct.unpack("<12f", data)
        w = np.array([vals[0:3], vals[4:7], vals[8:11]], dtype=np.float32)
        b = np.array([vals[3], vals[7], vals[11]], dtype=np.float32)
        return cls(w, b)

    def hash8(self) -> bytes:
        return hashlib.sha256(self.to_bytes()).digest()[:8]


def default_params() -> PredictorParams:
    """Gradient predictor: exact on planar ramps, parameter-free baseline."""
    w = np.array([[-1, 1, 1], [1, -1, 1], [1, -1, 1]], dtype=np.float32)
    return PredictorParams(w, np.zeros(3, dtype=np.float32))


def validate_image(image: np.ndarray) -> np.ndarray:
    image = np.asarray(image)
    if image.dtype != np.uint8:
        raise ParameterError("image must be uint8")
    if image.ndim != 3 or image.shape[2] != 3:
        raise ParameterError("image must be H x W x 3")
    if image.shape[0] < 1 or image.shape[1] < 1:
        raise ParameterError("image dimensions must be >= 1")
    return image


def _round_mod256(p: np.ndarray) -> np.ndarray:
    p = p.astype(np.float64)
    r = np.where(p >= 0.0, np.floor(p + 0.5), np.ceil(p - 0.5))
    m = np.fmod(r, 256.0)
    m = np.where(m < 0.0, m + 256.0, m)
    return m.astype(np.int64)


def _shifted(plane: np.ndarray, du: int, dv: int) -> np.ndarray:
    """plane sampled at (u+du, v+dv) on the last two axes, zero-filled
    outside the image."""
    H, W = plane.shape[-2:]
    out = np.zeros_like(plane)
    u0, u1 = max(0, -du), min(H, H - du)
    v0, v1 = max(0, -dv), min(W, W - dv)
    if u0 < u1 and v0 < v1:
        out[..., u0:u1, v0:v1] = plane[..., u0 + du : u1 + du, v0 + dv : v1 + dv]
    return out


class ContextPredictor:
    """Predictor over a fixed causal context layout of k neighbours."""

    def __init__(self, k: int = 3):
        if not 3 <= k <= 7:
            raise UnsupportedConfigurationError(f"receptive field {k} not in [3, 7]")
        self.k = k
        plane = np.zeros((3, k), dtype=np.int8)
        du = np.zeros((3, k), dtype=np.int8)
        dv = np.zeros((3, k), dtype=np.int8)
        for c in range(3):
            slots = _BASE_LAYOUT[c] + _EXTRA_OFFSETS[: k - 3]
            for j, (pl, a, b) in enumerate(slots):
                if pl == 1 and c == 0:
                    raise ParameterError("red channel has no previous channel")
                if pl == 0 and not (a < 0 or (a == 0 and b < 0)):
                    raise ParameterError("same-channel context must be causal")
                plane[c, j], du[c, j], dv[c, j] = pl, a, b
        self._plane, self._du, self._dv = plane, du, dv

    def default_params(self) -> PredictorParams:
        w = np.zeros((3, self.k), dtype=np.float32)
        w[:, :3] = default_params().weights
        return PredictorParams(w, np.zeros(3, dtype=np.float32))

    def _check_params(self, params: PredictorParams) -> None:
        if params.k != self.k:
            raise ParameterError(
                f"parameters have {params.k} contexts, layout needs {self.k}"
            )

    def _contexts(self, image_float: np.ndarray, c: int) -> list[np.ndarray]:
        out = []
        for j in range(self.k):
            ch = c if self._plane[c, j] == 0 else c - 1
            out.append(
                _shifted(image_float[..., ch], int(self._du[c, j]), int(self._dv[c, j]))
            )
        return out

    def _valid_region(self, c: int, H: int, W: int):
        """Rows/cols whose full context lies inside the image (used by fit)."""
        du, dv = self._du[c], self._dv[c]
        u0, u1 = max(0, -int(du.min())), H - max(0, int(du.max()))
        v0, v1 = max(0, -int(dv.min())), W - max(0, int(dv.max()))
        return slice(u0, u1), slice(v0, v1)

    def predictions(self, image: np.ndarray, params: PredictorParams) -> np.ndarray:
        """Rounded mod-256 predictions for every pixel, from the true image.

        Accepts a single H x W x 3 image or a batch with extra leading axes.
        """
        if image.ndim == 3:
            validate_image(image)
        self._check_params(params)
        x = image.astype(np.float32)
        pred = np.empty(image.shape, dtype=np.int64)
        for c in range(3):
            ctx = self._contexts(x, c)
            acc = params.weights[c, 0] * ctx[0]
            for j in range(1, self.k):
                acc += params.weights[c, j] * ctx[j]
            acc += params.bias[c]
            pred[..., c] = _round_mod256(acc)
        return pred

    def forward_residual(self, image: np.ndarray, params: PredictorParams) -> np.ndarray:
        pred = self.predictions(image, params)
        t = (image.astype(np.int64) - pred + 128) & 0xFF
        return t.astype(np.uint8)

    def decode_sequential(self, residual: np.ndarray, params: PredictorParams) -> np.ndarray:
        residual = validate_image(residual)
        self._check_params(params)
        out = np.empty_like(residual)
        if self.k == 3:
            _kernels.seq_decode3(residual, params.weights, params.bias, out)
        else:
            _kernels.seq_decode_generic(
                residual, self._plane, self._du, self._dv,
                params.weights, params.bias, out,
            )
        return out

    def decode_parallel(self, residual: np.ndarray, params: PredictorParams) -> np.ndarray:
        if self.k != 3:
            raise UnsupportedConfigurationError(
                f"wavefront decode needs the 3-context layout, not k={self.k}"
            )
        residual = validate_image(residual)
        self._check_params(params)
        out = np.empty_like(residual)
        _kernels.par_decode3(residual, params.weights, params.bias, out)
        return out

    def fit(self, images, ridge: float = 1e-3) -> PredictorParams:
        """Per-channel ridge least squares over (context, pixel) pairs.

        Only pixels whose full context lies inside the image contribute;
        padding zeros are a decode convention, not training data, and would
        bias the fit. The Tikhonov term penalizes the weights, not the bias.
        """
        if ridge < 0:
            raise ParameterError("ridge must be nonnegative")
        images = [validate_image(im) for im in images]
        if not images:
            raise FitError("need at least one image to fit")
        k = self.k
        w = np.zeros((3, k), dtype=np.float32)
        bias = np.zeros(3, dtype=np.float32)
        for c in range(3):
            g = np.zeros((k + 1, k + 1), dtype=np.float64)
            r = np.zeros(k + 1, dtype=np.float64)
            seen = 0
            for im in images:
                us, vs = self._valid_region(c, im.shape[0], im.shape[1])
                ctx = [m[us, vs].ravel() for m in self._contexts(im.astype(np.float64), c)]
                if not ctx[0].size:
                    continue
                seen += ctx[0].size
                a = np.stack(ctx + [np.ones(ctx[0].size)], axis=1)
                y = im[us, vs, c].astype(np.float64).ravel()
                g += a.T @ a
                r += a.T @ y
            if not seen:
                raise FitError("no pixels with a full in-image context")
            reg = np.zeros(k + 1)
            reg[:k] = ridge
            try:
                theta = np.linalg.solve(g + np.diag(reg), r)
            except np.linalg.LinAlgError as e:
                raise FitError(f"normal equations singular for channel {c}: {e}")
            if not np.all(np.isfinite(theta)):
                raise FitError(f"non-finite fit for channel {c}")
            w[c] = theta[:k].astype(np.float32)
            bias[c] = np.float32(theta[k])
        return PredictorParams(w, bias)


_STOCK = ContextPredictor(3)


def receptive_field_variant(k: int) -> ContextPredictor:
    """Predictor configuration with k causal context values, k in [3, 7].

    Only k = 3 supports the wavefront-parallel decode; wider layouts decode
    sequentially.
    """
    return ContextPredictor(k)


def predict_pixel(channel, context, params: PredictorParams) -> int:
    """Single prediction from 3 context values, in layout order."""
    c = _CHANNELS[channel.lower() if isinstance(channel, str) else channel]
    if len(context) != params.k:
        raise ParameterError(f"expected {params.k} context values")
    for v in context:
        if not 0 <= int(v) <= 255:
            raise ParameterError("context values must be in [0, 255]")
    acc = params.weights[c, 0] * np.float32(context[0])
    for j in range(1, params.k):
        acc = acc + params.weights[c, j] * np.float32(context[j])
    acc = acc + params.bias[c]
    return int(_round_mod256(np.asarray(acc))[()])


def forward_residual(image: np.ndarray, params: PredictorParams | None = None) -> np.ndarray:
    """Shifted prediction error (x - x_hat + 128) mod 256, same shape as x."""
    return _STOCK.forward_residual(image, params or default_params())


def forward_residual_batch(images: np.ndarray, params: PredictorParams) -> np.ndarray:
    """forward_residual over a stack of images (N, H, W, 3)."""
    if images.ndim != 4 or images.dtype != np.uint8:
        raise ParameterError("expected a uint8 (N, H, W, 3) stack")
    return _STOCK.forward_residual(images, params)


def decode_sequential(residual: np.ndarray, params: PredictorParams | None = None) -> np.ndarray:
    """Exact inverse of forward_residual, raster order per channel."""
    return _STOCK.decode_sequential(residual, params or default_params())


def decode_parallel(residual: np.ndarray, params: PredictorParams | None = None) -> np.ndarray:
    """Wavefront decode; bit-identical to decode_sequential on every input."""
    return _STOCK.decode_parallel(residual, params or default_params())


def decode_sequential_batch(residuals: np.ndarray, params: PredictorParams) -> np.ndarray:
    """Raster decode of a stack of images (N, H, W, 3)."""
    out = np.empty_like(residuals)
    _kernels.seq_decode3_batch(residuals, params.weights, params.bias, out)
    return out


def decode_parallel_batch(residuals: np.ndarray, params: PredictorParams) -> np.ndarray:
    """Wavefront decode of a stack of images, parallel across images."""
    out = np.empty_like(residuals)
    _kernels.par_decode3_batch(residuals, params.weights, params.bias, out)
    return out


def fit_params(images, ridge: float = 1e-3) -> PredictorParams:
    """Closed-form ridge fit of the 12 stock parameters."""
    return _STOCK.fit(images, ridge)


def residual_entropy(residual: np.ndarray, channel: int | None = None) -> float:
    """Empirical order-0 entropy of residual symbols, bits per symbol."""
    data = residual if channel is None else residual[..., channel]
    counts = np.bincount(np.asarray(data, dtype=np.uint8).ravel(), minlength=256)
    p = counts[counts > 0] / counts.sum()
    return float(-(p * np.log2(p)).sum())
