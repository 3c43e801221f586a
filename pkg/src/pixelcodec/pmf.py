"""Quantized probability mass functions, the density interface of the coder.

A PMF over an alphabet of X symbols is stored as integer masses P that sum
to exactly 2**M together with their exclusive cumulative sums C. The coder
additionally requires 1 <= P[x] <= 2**(M-1) - 1 for every symbol; the
quantizer aims for that window but only the sum and the lower bound are hard
guarantees (two-symbol alphabets cannot satisfy the cap, see quantize_pmf).
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigError, ParameterError


class QuantizedPmf:
    """Integer masses P summing to 2**M, with exclusive cumulative sums C."""

    __slots__ = ("M", "P", "C")

    def __init__(self, M: int, P: np.ndarray):
        P = np.asarray(P, dtype=np.int64)
        if P.ndim != 1 or P.size < 1:
            raise ParameterError("P must be a non-empty 1-d array")
        if int(P.sum()) != (1 << M):
            raise ParameterError(f"masses sum to {int(P.sum())}, expected 2^{M}")
        if int(P.min()) < 1:
            raise ParameterError("every symbol needs mass >= 1")
        self.M = int(M)
        self.P = P.astype(np.uint16) if int(P.max()) < (1 << 16) else P
        c = np.zeros(P.size, dtype=np.int64)
        np.cumsum(P[:-1], out=c[1:])
        self.C = c.astype(np.uint16) if int(c.max()) < (1 << 16) else c

    @property
    def X(self) -> int:
        return int(self.P.size)

    @property
    def is_admissible(self) -> bool:
        cap = (1 << (self.M - 1)) - 1
        return int(self.P.max()) <= cap

    def mass(self, x: int) -> int:
        return int(self.P[x])

    def cum(self, x: int) -> int:
        return int(self.C[x])

    def entropy_bits(self) -> float:
        """Entropy of the quantized distribution, bits per symbol."""
        p = self.P.astype(np.float64) / (1 << self.M)
        return float(-(p * np.log2(p)).sum())

    def __eq__(self, other) -> bool:
        if not isinstance(other, QuantizedPmf):
            return NotImplemented
        return self.M == other.M and np.array_equal(self.P, other.P)

    def __repr__(self) -> str:
        return f"QuantizedPmf(M={self.M}, X={self.X})"


def quantize_pmf(real_masses, M: int) -> QuantizedPmf:
    """Quantize nonnegative real masses so they sum to exactly 2**M.

    Deterministic recipe: floor-scale, largest-remainder fill of the deficit,
    lift zero-mass symbols to 1 (stealing from the currently largest symbol),
    then one clamp pass at 2**(M-1) - 1 that redistributes the clamped excess
    proportionally over the un-clamped symbols, again by largest remainder.
    All remainder ties break toward the smaller symbol index.
    """
    masses = np.asarray(real_masses, dtype=np.float64)
    if masses.ndim != 1 or masses.size < 1:
        raise ParameterError("masses must be a non-empty 1-d array")
    X = masses.size
    if not np.all(np.isfinite(masses)) or np.any(masses < 0):
        raise ParameterError("masses must be finite and nonnegative")
    total = float(masses.sum())
    if not np.isfinite(total) or total <= 0:
        raise ParameterError("masses must have a positive finite sum")
    if X > (1 << (M - 1)):
        raise ConfigError(
            f"alphabet of {X} symbols cannot be admissible at M={M}"
        )

    ideal = masses / total * float(1 << M)
    P = np.floor(ideal).astype(np.int64)
    rem = ideal - P

    deficit = (1 << M) - int(P.sum())
    order = np.lexsort((np.arange(X), -rem))
    P[order[:deficit]] += 1

    for x in np.flatnonzero(P == 0):
        donor = int(np.argmax(P))  # argmax picks the smallest index on ties
        P[donor] -= 1
        P[x] = 1

    cap = (1 << (M - 1)) - 1
    over = P > cap
    if bool(over.any()):
        excess = int((P[over] - cap).sum())
        P[over] = cap
        recv = np.flatnonzero(P < cap)
        if recv.size:
            w = P[recv].astype(np.float64)
            shares = excess * w / w.sum()
            add = np.floor(shares).astype(np.int64)
            left = excess - int(add.sum())
            sorder = np.lexsort((recv, -(shares - add)))
            add[sorder[:left]] += 1
            P[recv] += add

    return QuantizedPmf(M, P)


def uniform_pmf(X: int, M: int) -> QuantizedPmf:
    return quantize_pmf(np.ones(X), M)
