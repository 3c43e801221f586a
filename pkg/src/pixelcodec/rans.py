"""Reference bit-at-a-time rANS coder.

This is the readable, obviously-correct implementation the table-driven fast
path is verified against. The resting state between symbol operations lives
in [2**M, 2**(M+1)): the classic "subtract 2**M, then add it back before the
next symbol" pair of steps is merged into the single cumulative update
S += 2**M - P[x] + C[x], so encode renormalizes first and updates second,
and decode mirrors it exactly.

The coder is last-in-first-out: messages are encoded in reverse so that the
decoder emits symbols in forward order, which lets per-symbol distribution
choices depend on previously decoded content.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .bits import BitStack
from .errors import CoderContractError
from .pmf import QuantizedPmf


def _check_state(state: int, M: int) -> None:
    if not ((1 << M) <= state < (1 << (M + 1))):
        raise CoderContractError(
            f"state {state} outside resting range [2^{M}, 2^{M + 1})"
        )


def _check_mass(pmf: QuantizedPmf, x: int) -> None:
    cap = (1 << (pmf.M - 1)) - 1
    p = pmf.mass(x)
    if not 1 <= p <= cap:
        raise CoderContractError(f"mass {p} of symbol {x} not in [1, {cap}]")


def ref_encode(state: int, pmf: QuantizedPmf, x: int, stream: BitStack) -> int:
    """Encode one symbol; returns the new resting state, mutates the stream."""
    M = pmf.M
    _check_state(state, M)
    _check_mass(pmf, x)
    p = pmf.mass(x)
    while state >= (p << 1):
        stream.push(state & 1)
        state >>= 1
    return state + (1 << M) - p + pmf.cum(x)


def ref_decode(state: int, pmf: QuantizedPmf, stream: BitStack) -> tuple[int, int]:
    """Decode one symbol; returns (symbol, new resting state)."""
    M = pmf.M
    _check_state(state, M)
    t = state - (1 << M)
    x = int(np.searchsorted(pmf.C, t, side="right")) - 1
    state = t - pmf.cum(x) + pmf.mass(x)
    while state < (1 << M):
        state = (state << 1) | stream.pop()
    return x, state


def initial_state(M: int) -> int:
    return 1 << M


def ref_encode_message(
    symbols: Sequence[int],
    pmfs: Sequence[QuantizedPmf],
    M: int,
) -> tuple[int, BitStack]:
    """Encode a whole message; symbols go in reverse so decode runs forward."""
    if len(pmfs) != len(symbols):
        raise CoderContractError("need one pmf per symbol")
    state = initial_state(M)
    stream = BitStack()
    for i in range(len(symbols) - 1, -1, -1):
        state = ref_encode(state, pmfs[i], int(symbols[i]), stream)
    return state, stream


def ref_decode_message(
    state: int,
    stream: BitStack,
    pmfs: Sequence[QuantizedPmf],
) -> tuple[list[int], int]:
    """Decode len(pmfs) symbols in forward order; returns (symbols, state)."""
    out = []
    for pmf in pmfs:
        x, state = ref_decode(state, pmf, stream)
        out.append(x)
    return out, state
