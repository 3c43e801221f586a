"""Discretized truncated-logistic residual densities and their diagnostics.

Residual symbols live on the 8-bit alphabet. A logistic with location mu and
scale s is discretized into 256 unit bins whose two edge bins absorb the
tails, so the real masses always sum to exactly 1. To keep the number of
coder distributions small, symbols are recentred so that every stream is
modelled by a location-128 logistic and only the scale is quantized, onto a
small geometric grid.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import FormatError, ParameterError
from .pmf import QuantizedPmf, quantize_pmf

ALPHABET = 256
CENTER = 128


def _sigmoid(z: np.ndarray) -> np.ndarray:
    """Numerically stable logistic CDF in float64."""
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    e = np.exp(z[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def round_half_away(x):
    """Round half away from zero; the codec's single rounding convention."""
    x = np.asarray(x, dtype=np.float64)
    r = np.where(x >= 0, np.floor(x + 0.5), np.ceil(x - 0.5))
    return r.astype(np.int64) if r.ndim else int(r)


# --- scale grid -----------------------------------------------------------


@dataclass(frozen=True)
class ScaleGrid:
    """Geometrically spaced scale values shared by encoder and decoder."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 1 or v.size < 1:
            raise ParameterError("grid needs at least one scale")
        if not np.all(np.isfinite(v)) or np.any(v <= 0):
            raise ParameterError("grid scales must be finite and positive")
        if np.any(np.diff(v) <= 0):
            raise ParameterError("grid scales must be strictly increasing")
        if v.size > 2:
            r = v[1:] / v[:-1]
            if np.max(np.abs(r - r[0])) > 1e-9 * r[0]:
                raise ParameterError("grid spacing must be geometric")
        object.__setattr__(self, "values", v)

    @property
    def D(self) -> int:
        return int(self.values.size)

    @property
    def s_min(self) -> float:
        return float(self.values[0])

    @property
    def s_max(self) -> float:
        return float(self.values[-1])

    def to_bytes(self) -> bytes:
        return struct.pack("<H", self.D) + self.values.astype("<f8").tobytes()

    @classmethod
    def from_bytes(cls, data: bytes, offset: int = 0) -> tuple["ScaleGrid", int]:
        if len(data) - offset < 2:
            raise FormatError("scale grid truncated")
        (d,) = struct.unpack_from("<H", data, offset)
        end = offset + 2 + 8 * d
        if len(data) < end:
            raise FormatError("scale grid truncated")
        vals = np.frombuffer(data[offset + 2 : end], dtype="<f8")
        return cls(vals.copy()), end


def default_grid(D: int = 8) -> ScaleGrid:
    """D geometric scales spanning [0.5, 64]; the default 8 have ratio 2."""
    if D < 1:
        raise ParameterError("grid needs at least one scale")
    if D == 1:
        return ScaleGrid(np.array([0.5 * 2.0 ** 3.5]))
    return ScaleGrid(0.5 * 2.0 ** (7.0 * np.arange(D) / (D - 1)))


def scale_to_distribution(s: float, grid: ScaleGrid) -> int:
    """Nearest grid index in log space; ties go to the smaller index."""
    if not np.isfinite(s) or s <= 0:
        raise ParameterError(f"scale must be positive and finite, got {s}")
    return int(np.argmin(np.abs(np.log2(float(s)) - np.log2(grid.values))))


def scales_to_distributions(s: np.ndarray, grid: ScaleGrid) -> np.ndarray:
    s = np.asarray(s, dtype=np.float64)
    if not np.all(np.isfinite(s)) or np.any(s <= 0):
        raise ParameterError("scales must be positive and finite")
    d = np.abs(np.log2(s)[..., None] - np.log2(grid.values))
    return np.argmin(d, axis=-1).astype(np.uint16)


# --- discretized logistic -------------------------------------------------


def discretized_logistic_masses(mu: float, s: float) -> np.ndarray:
    """Real bin masses of L(mu, s) on [0, 255], edge bins absorbing the tails."""
    if not (np.isfinite(mu) and np.isfinite(s)) or s <= 0:
        raise ParameterError(f"bad logistic parameters mu={mu}, s={s}")
    v = np.arange(ALPHABET, dtype=np.float64)
    upper = _sigmoid((v + 0.5 - mu) / s)
    lower = _sigmoid((v - 0.5 - mu) / s)
    m = upper - lower
    m[0] = upper[0]
    m[-1] = 1.0 - lower[-1]
    return m


def discretized_logistic_pmf(mu: float, s: float, M: int) -> QuantizedPmf:
    """Quantized discretized logistic over the 8-bit alphabet."""
    if not 10 <= M <= 12:
        raise ParameterError(f"M={M} outside the supported range [10, 12]")
    if not 0 <= mu <= 255:
        raise ParameterError(f"mu={mu} outside [0, 255]")
    return quantize_pmf(discretized_logistic_masses(mu, s), M)


def residual_distributions(grid: ScaleGrid, M: int) -> list[QuantizedPmf]:
    """The coder's distribution set: one centred logistic per grid scale."""
    return [discretized_logistic_pmf(CENTER, s, M) for s in grid.values]


# --- recentring -----------------------------------------------------------


def recentre_symbol(t: int, mu: float) -> tuple[int, int]:
    """Map symbol t to the location-128 alphabet; returns (coded, shift)."""
    shift = int(round_half_away(float(mu)))
    return (int(t) - shift + CENTER) & 0xFF, shift


def unrecentre_symbol(coded: int, shift: int) -> int:
    return (int(coded) + shift - CENTER) & 0xFF


def recentre_plane(t: np.ndarray, mu: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    shift = round_half_away(mu)
    coded = (t.astype(np.int64) - shift + CENTER) & 0xFF
    return coded.astype(np.uint8), shift


def unrecentre_plane(coded: np.ndarray, shift: np.ndarray) -> np.ndarray:
    t = (coded.astype(np.int64) + shift - CENTER) & 0xFF
    return t.astype(np.uint8)


def recentring_kl(mu: float, s: float) -> float:
    """Bits lost by coding L(mu, s) through the shifted location-128 model.

    KL(true || approx) where the approximation codes
    (t - round(mu) + 128) mod 256 with L(128, s).
    """
    p = discretized_logistic_masses(mu, s)
    base = discretized_logistic_masses(CENTER, s)
    shift = int(round_half_away(float(mu)))
    t = np.arange(ALPHABET)
    q = base[(t - shift + CENTER) & 0xFF]
    nz = p > 0
    if np.any(q[nz] <= 0):
        return float("inf")
    return float(np.sum(p[nz] * np.log2(p[nz] / q[nz])))


# --- code-length accounting ----------------------------------------------


@dataclass(frozen=True)
class CodelengthReport:
    total_bits: float
    bits_per_symbol: float
    entropy: float | None = None
    cross_entropy: float | None = None
    kl: float | None = None


def codelength_report(
    pmf: QuantizedPmf,
    symbols,
    true_masses=None,
) -> CodelengthReport:
    """Ideal code length of `symbols` under `pmf`.

    With `true_masses` given, also reports the expected length decomposition
    cross-entropy = entropy + KL(true || pmf).
    """
    symbols = np.asarray(symbols, dtype=np.int64)
    if symbols.size and (symbols.min() < 0 or symbols.max() >= pmf.X):
        raise ParameterError("symbol outside the pmf alphabet")
    q = pmf.P.astype(np.float64) / (1 << pmf.M)
    total = float(-np.log2(q[symbols]).sum()) if symbols.size else 0.0
    per = total / symbols.size if symbols.size else 0.0
    if true_masses is None:
        return CodelengthReport(total, per)
    p = np.asarray(true_masses, dtype=np.float64)
    p = p / p.sum()
    nz = p > 0
    entropy = float(-(p[nz] * np.log2(p[nz])).sum())
    cross = float(-(p[nz] * np.log2(q[nz])).sum())
    return CodelengthReport(total, per, entropy, cross, cross - entropy)
