"""Table-driven semi-dynamic rANS: the production fast path.

The per-symbol work is reduced to table reads and shifts. For a set of D
quantized PMFs over X symbols the encoder keeps two D-by-X uint16 tables:

    delta[d, x] = k * 2^M - P[x] * 2^k   with k such that P[x] * 2^k
                                         lands in [2^M, 2^(M+1))
    phi[d, x]   = 2^M - P[x] + C[x]

so one symbol is: b = (delta + S) >> M; push low b bits of S;
S = (S >> b) + phi. The decoder keeps three tables indexed by (d, S - 2^M):
the symbol, the number of bits to pop, and the merged next-state base. Both
directions are bit-identical to the reference coder in `rans`, which is the
correctness oracle for this module.

Encode tables cost exactly 4*D*X bytes, decode tables D * 2^(M+2) bytes.
The uint16 representation of delta is guaranteed for M <= 12 as long as
every mass stays below 2^(M-1).
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _kernels
from .bits import BitStack
from .errors import CoderContractError, CorruptStreamError, TableError
from .pmf import QuantizedPmf
from .rans import initial_state


@dataclass(frozen=True)
class EncodeTables:
    M: int
    delta: np.ndarray  # (D, X) uint16
    phi: np.ndarray  # (D, X) uint16

    @property
    def D(self) -> int:
        return int(self.delta.shape[0])

    @property
    def X(self) -> int:
        return int(self.delta.shape[1])

    @property
    def footprint_bytes(self) -> int:
        return self.delta.nbytes + self.phi.nbytes


@dataclass(frozen=True)
class DecodeTables:
    M: int
    symbol: np.ndarray  # (D, 2^M) uint8
    pop_count: np.ndarray  # (D, 2^M) uint8
    next_base: np.ndarray  # (D, 2^M) uint16

    @property
    def D(self) -> int:
        return int(self.symbol.shape[0])

    @property
    def footprint_bytes(self) -> int:
        return self.symbol.nbytes + self.pop_count.nbytes + self.next_base.nbytes


def build_tables(
    dists: Sequence[QuantizedPmf],
    M: int,
    verify: bool = False,
) -> tuple[EncodeTables, DecodeTables]:
    """Build encode and decode tables for a distribution set.

    With verify=True the renormalization property
    S >> ((delta + S) >> M) in [P, 2P) is checked for every (d, x, S).
    """
    if M > 12:
        raise TableError(
            f"M={M}: delta is only guaranteed to fit unsigned 16 bits for M <= 12"
        )
    if not dists:
        raise TableError("need at least one distribution")
    X = dists[0].X
    if X > 256:
        raise TableError("symbol table is uint8; alphabet must be <= 256")
    cap = (1 << (M - 1)) - 1
    D = len(dists)
    delta = np.zeros((D, X), dtype=np.uint16)
    phi = np.zeros((D, X), dtype=np.uint16)
    symbol = np.zeros((D, 1 << M), dtype=np.uint8)
    pop_count = np.zeros((D, 1 << M), dtype=np.uint8)
    next_base = np.zeros((D, 1 << M), dtype=np.uint16)

    for d, pmf in enumerate(dists):
        if pmf.M != M:
            raise TableError(f"distribution {d} quantized at M={pmf.M}, expected {M}")
        if pmf.X != X:
            raise TableError("all distributions must share one alphabet")
        P = pmf.P.astype(np.int64)
        C = pmf.C.astype(np.int64)
        if P.min() < 1 or P.max() > cap:
            raise CoderContractError(
                f"distribution {d} has masses outside [1, {cap}]"
            )
        # k is the unique shift putting P * 2^k into [2^M, 2^(M+1))
        k = M - np.floor(np.log2(P)).astype(np.int64)
        lo = P << k
        k = np.where(lo >= (1 << (M + 1)), k - 1, k)
        k = np.where((P << k) < (1 << M), k + 1, k)
        dval = (k << M) - (P << k)
        pval = (1 << M) - P + C
        if dval.min() < 0 or dval.max() >= (1 << 16) or pval.max() >= (1 << 16):
            raise TableError("table entry does not fit unsigned 16 bits")
        delta[d] = dval
        phi[d] = pval

        t = np.arange(1 << M, dtype=np.int64)
        x = np.searchsorted(C, t, side="right") - 1
        mid = t - C[x] + P[x]  # in [P[x], 2 P[x])
        b = np.zeros_like(mid)
        v = mid.copy()
        while True:
            small = v < (1 << M)
            if not small.any():
                break
            v[small] <<= 1
            b[small] += 1
        symbol[d] = x
        pop_count[d] = b
        next_base[d] = v  # mid << b, always below 2^(M+1)

    enc = EncodeTables(M, delta, phi)
    dec = DecodeTables(M, symbol, pop_count, next_base)
    assert enc.footprint_bytes == 4 * D * X
    assert dec.footprint_bytes == D * (1 << (M + 2))
    if verify:
        verify_encode_tables(enc, dists)
    return enc, dec


def verify_encode_tables(enc: EncodeTables, dists: Sequence[QuantizedPmf]) -> None:
    """Check S >> ((delta + S) >> M) in [P, 2P) for every (d, x, S);
    raises TableError on the first violation."""
    M = enc.M
    S = np.arange(1 << M, 1 << (M + 1), dtype=np.int64)
    for d, pmf in enumerate(dists):
        P = pmf.P.astype(np.int64)
        dval = enc.delta[d].astype(np.int64)
        shifts = (dval[:, None] + S[None, :]) >> M
        renorm = S[None, :] >> shifts
        bad = (renorm < P[:, None]) | (renorm >= 2 * P[:, None])
        if bad.any():
            xi, si = np.argwhere(bad)[0]
            raise TableError(
                f"renormalization violated at d={d}, x={xi}, S={(1 << M) + si}"
            )
        expect_phi = (1 << M) - P + pmf.C.astype(np.int64)
        if not np.array_equal(enc.phi[d].astype(np.int64), expect_phi):
            raise TableError(f"phi table mismatch for distribution {d}")


# --- single-symbol path (mirrors the reference API) ------------------------


def fast_encode(state: int, tables: EncodeTables, d: int, x: int, stream: BitStack) -> int:
    M = tables.M
    b = (int(tables.delta[d, x]) + state) >> M
    stream.push_bits(state, b)
    return (state >> b) + int(tables.phi[d, x])


def fast_decode(state: int, tables: DecodeTables, d: int, stream: BitStack) -> tuple[int, int]:
    M = tables.M
    idx = state - (1 << M)
    if not 0 <= idx < (1 << M):
        raise CorruptStreamError(f"decoder state {state} left the resting range")
    x = int(tables.symbol[d, idx])
    b = int(tables.pop_count[d, idx])
    state = int(tables.next_base[d, idx]) + stream.pop_bits(b)
    return x, state


# --- interleaved multi-lane framing ----------------------------------------


@dataclass
class LaneSet:
    """Independent per-lane coder sessions; symbol i belongs to lane i mod L."""

    states: list[int]
    streams: list[BitStack]

    @property
    def L(self) -> int:
        return len(self.states)


def interleaved_encode(
    symbols: np.ndarray,
    d_schedule: np.ndarray,
    lanes: int,
    tables: EncodeTables,
) -> LaneSet:
    """Encode symbols across `lanes` independent streams."""
    if lanes < 1:
        raise CoderContractError("need at least one lane")
    symbols = np.ascontiguousarray(symbols, dtype=np.uint8)
    d_schedule = np.ascontiguousarray(d_schedule, dtype=np.uint16)
    if d_schedule.shape != symbols.shape:
        raise CoderContractError("need one distribution index per symbol")
    states, streams = [], []
    for lane in range(lanes):
        buf, nbits, state = _kernels.encode_lane(
            symbols[lane::lanes], d_schedule[lane::lanes],
            tables.delta, tables.phi, tables.M,
        )
        states.append(int(state))
        streams.append(BitStack.from_packed(buf, int(nbits)))
    return LaneSet(states, streams)


def interleaved_decode(
    lane_set: LaneSet,
    count: int,
    d_schedule: np.ndarray,
    tables: DecodeTables,
    workers: int = 1,
) -> np.ndarray:
    """Decode `count` symbols; exact inverse of interleaved_encode.

    Lanes are independent; with workers > 1 they are decoded concurrently.
    Raises CorruptStreamError if any lane underflows, finishes away from the
    initial state, or leaves bits unconsumed.
    """
    L = lane_set.L
    d_schedule = np.ascontiguousarray(d_schedule, dtype=np.uint16)
    if d_schedule.shape != (count,):
        raise CoderContractError("need one distribution index per symbol")
    out = np.zeros(count, dtype=np.uint8)
    s0 = initial_state(tables.M)

    def run(lane: int) -> None:
        n_lane = len(range(lane, count, L))
        lane_out = np.zeros(n_lane, dtype=np.uint8)
        state = lane_set.states[lane]
        if not s0 <= state < 2 * s0:
            raise CorruptStreamError(f"lane {lane} initial state out of range")
        buf, nbits = lane_set.streams[lane].to_packed()
        if buf.size == 0:
            buf = np.zeros(1, dtype=np.uint8)
        end_state, rem = _kernels.decode_lane(
            state, buf, nbits, d_schedule[lane::L],
            tables.symbol, tables.pop_count, tables.next_base,
            tables.M, lane_out,
        )
        if end_state < 0:
            raise CorruptStreamError(f"lane {lane} bit stream underflow")
        if end_state != s0 or rem != 0:
            raise CorruptStreamError(
                f"lane {lane} did not return to the initial coder state"
            )
        out[lane::L] = lane_out

    if workers > 1 and L > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(run, range(L)))
    else:
        for lane in range(L):
            run(lane)
    return out


def encode_message(symbols, d_schedule, tables: EncodeTables) -> tuple[int, BitStack]:
    """Single-stream framing: interleaved_encode with one lane."""
    ls = interleaved_encode(symbols, d_schedule, 1, tables)
    return ls.states[0], ls.streams[0]
