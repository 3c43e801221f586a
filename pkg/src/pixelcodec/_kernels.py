"""Compiled hot loops: per-symbol coder lanes and autoregressive decoding.

Everything here is deliberately scalar and allocation-free inside the loops;
the Python wrappers in `tables` and `predictor` own validation and framing.

Numeric contract shared with the numpy forward pass: predictions accumulate
left-to-right in float32 (w0*c0 + w1*c1 + ... + bias last), are rounded half
away from zero in float64, and reduced mod 256 via exact fmod. No fastmath
anywhere, so encoder and decoder see bit-identical arithmetic.
"""

from __future__ import annotations

import numpy as np
from numba import njit, prange

# --- coder lanes ----------------------------------------------------------


@njit(cache=True)
def encode_lane(syms, ds, delta, phi, M):
    """Encode one lane in reverse symbol order.

    Returns (buf, nbits, state); buf is sized for the worst case and the
    caller trims to ceil(nbits/8) bytes.
    """
    n = syms.shape[0]
    buf = np.zeros((n * (M + 1) + 7) // 8 + 8, dtype=np.uint8)
    state = np.int64(1) << M
    pos = np.int64(0)
    for i in range(n - 1, -1, -1):
        d = ds[i]
        x = syms[i]
        b = (np.int64(delta[d, x]) + state) >> M
        for j in range(b):
            bit = (state >> j) & 1
            buf[pos >> 3] |= np.uint8(bit << (pos & 7))
            pos += 1
        state = (state >> b) + np.int64(phi[d, x])
    return buf, pos, state


@njit(cache=True)
def decode_lane(state, buf, nbits, ds, theta, bcnt, nxt, M, out):
    """Decode out.size symbols in forward order.

    Returns (state, remaining_bits); state is -1 on bit underflow.
    """
    base = np.int64(1) << M
    pos = np.int64(nbits)
    for i in range(out.shape[0]):
        idx = state - base
        d = ds[i]
        out[i] = theta[d, idx]
        b = np.int64(bcnt[d, idx])
        if pos < b:
            return np.int64(-1), pos
        v = np.int64(0)
        for _ in range(b):
            pos -= 1
            v = (v << 1) | np.int64((buf[pos >> 3] >> (pos & 7)) & 1)
        state = np.int64(nxt[d, idx]) + v
    return state, pos


# --- three-neighbour predictor --------------------------------------------


@njit(cache=True, inline="always")
def _round_mod256(p32):
    p = np.float64(p32)
    if p >= 0.0:
        r = np.floor(p + 0.5)
    else:
        r = np.ceil(p - 0.5)
    m = np.fmod(r, 256.0)
    if m < 0.0:
        m += 256.0
    return np.int64(m)


@njit(cache=True, inline="always")
def _predict3(c0, c1, c2, w0, w1, w2, bias):
    acc = w0 * c0
    acc = acc + w1 * c1
    acc = acc + w2 * c2
    acc = acc + bias
    return _round_mod256(acc)


@njit(cache=True)
def seq_decode3(res, w, b, out):
    """Raster-order sequential decode for the stock 3-neighbour contexts."""
    H, W = res.shape[0], res.shape[1]
    zero = np.float32(0.0)
    for u in range(H):
        for v in range(W):
            c0 = np.float32(out[u - 1, v - 1, 0]) if (u > 0 and v > 0) else zero
            c1 = np.float32(out[u - 1, v, 0]) if u > 0 else zero
            c2 = np.float32(out[u, v - 1, 0]) if v > 0 else zero
            pred = _predict3(c0, c1, c2, w[0, 0], w[0, 1], w[0, 2], b[0])
            out[u, v, 0] = np.uint8((np.int64(res[u, v, 0]) - 128 + pred) & 0xFF)
    for c in range(1, 3):
        for u in range(H):
            for v in range(W):
                c0 = np.float32(out[u, v - 1, c]) if v > 0 else zero
                c1 = np.float32(out[u, v - 1, c - 1]) if v > 0 else zero
                c2 = np.float32(out[u, v, c - 1])
                pred = _predict3(c0, c1, c2, w[c, 0], w[c, 1], w[c, 2], b[c])
                out[u, v, c] = np.uint8(
                    (np.int64(res[u, v, c]) - 128 + pred) & 0xFF
                )


@njit(cache=True)
def _wavefront_decode3(res, w, b, out):
    """Wavefront-order decode: anti-diagonals for R, then columns for G, B.

    Cells inside one wavefront have no mutual dependency, so any schedule
    over them, including this serial one, produces identical output.
    """
    H, W = res.shape[0], res.shape[1]
    zero = np.float32(0.0)
    for wave in range(H + W - 1):
        lo = wave - W + 1 if wave >= W else 0
        hi = wave if wave < H else H - 1
        for u in range(lo, hi + 1):
            v = wave - u
            c0 = np.float32(out[u - 1, v - 1, 0]) if (u > 0 and v > 0) else zero
            c1 = np.float32(out[u - 1, v, 0]) if u > 0 else zero
            c2 = np.float32(out[u, v - 1, 0]) if v > 0 else zero
            pred = _predict3(c0, c1, c2, w[0, 0], w[0, 1], w[0, 2], b[0])
            out[u, v, 0] = np.uint8((np.int64(res[u, v, 0]) - 128 + pred) & 0xFF)
    for c in range(1, 3):
        for v in range(W):
            for u in range(H):
                c0 = np.float32(out[u, v - 1, c]) if v > 0 else zero
                c1 = np.float32(out[u, v - 1, c - 1]) if v > 0 else zero
                c2 = np.float32(out[u, v, c - 1])
                pred = _predict3(c0, c1, c2, w[c, 0], w[c, 1], w[c, 2], b[c])
                out[u, v, c] = np.uint8(
                    (np.int64(res[u, v, c]) - 128 + pred) & 0xFF
                )


@njit(cache=True, parallel=True)
def par_decode3(res, w, b, out):
    """Thread-parallel wavefront decode of a single image."""
    H, W = res.shape[0], res.shape[1]
    zero = np.float32(0.0)
    for wave in range(H + W - 1):
        lo = wave - W + 1 if wave >= W else 0
        hi = wave if wave < H else H - 1
        for u in prange(lo, hi + 1):
            v = wave - u
            c0 = np.float32(out[u - 1, v - 1, 0]) if (u > 0 and v > 0) else zero
            c1 = np.float32(out[u - 1, v, 0]) if u > 0 else zero
            c2 = np.float32(out[u, v - 1, 0]) if v > 0 else zero
            pred = _predict3(c0, c1, c2, w[0, 0], w[0, 1], w[0, 2], b[0])
            out[u, v, 0] = np.uint8((np.int64(res[u, v, 0]) - 128 + pred) & 0xFF)
    for c in range(1, 3):
        for v in range(W):
            for u in prange(H):
                c0 = np.float32(out[u, v - 1, c]) if v > 0 else zero
                c1 = np.float32(out[u, v - 1, c - 1]) if v > 0 else zero
                c2 = np.float32(out[u, v, c - 1])
                pred = _predict3(c0, c1, c2, w[c, 0], w[c, 1], w[c, 2], b[c])
                out[u, v, c] = np.uint8(
                    (np.int64(res[u, v, c]) - 128 + pred) & 0xFF
                )


@njit(cache=True, parallel=True)
def seq_decode3_batch(res, w, b, out):
    for n in prange(res.shape[0]):
        seq_decode3(res[n], w, b, out[n])


@njit(cache=True, parallel=True)
def par_decode3_batch(res, w, b, out):
    for n in prange(res.shape[0]):
        _wavefront_decode3(res[n], w, b, out[n])


@njit(cache=True)
def seq_decode_generic(res, plane, du, dv, w, b, out):
    """Raster decode for arbitrary causal context layouts (plane 0 = same
    channel, plane 1 = the previous channel, fully decoded beforehand)."""
    H, W = res.shape[0], res.shape[1]
    k = plane.shape[1]
    for c in range(3):
        for u in range(H):
            for v in range(W):
                acc = np.float32(0.0)
                for j in range(k):
                    uu = u + du[c, j]
                    vv = v + dv[c, j]
                    if 0 <= uu < H and 0 <= vv < W:
                        ch = c if plane[c, j] == 0 else c - 1
                        val = np.float32(out[uu, vv, ch])
                    else:
                        val = np.float32(0.0)
                    acc = acc + w[c, j] * val
                acc = acc + b[c]
                pred = _round_mod256(acc)
                out[u, v, c] = np.uint8(
                    (np.int64(res[u, v, c]) - 128 + pred) & 0xFF
                )
