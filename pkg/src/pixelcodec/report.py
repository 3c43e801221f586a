"""Benchmark harness: machine-readable throughput rows plus rendered figures.

Rows are dicts with keys {phase, lanes, mb_per_s, seconds, bytes}; they are
emitted as JSON lines and optionally plotted to PNG files next to the report.
"""

from __future__ import annotations

import json
import os
import time

import numpy as np

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from . import logistic, predictor, rans, tables, vqvae  # noqa: E402
from .weights import random_weights  # noqa: E402


def _row(phase: str, lanes: int, nbytes: int, seconds: float) -> dict:
    return {
        "phase": phase,
        "lanes": lanes,
        "bytes": nbytes,
        "seconds": round(seconds, 6),
        "mb_per_s": round(nbytes / 1e6 / seconds, 3) if seconds > 0 else float("inf"),
    }


def _bench_symbols(M: int, grid: logistic.ScaleGrid, n: int, seed: int = 0):
    """Draw per-symbol distribution ids uniformly, then symbols from them."""
    rng = np.random.default_rng(seed)
    pmfs = logistic.residual_distributions(grid, M)
    d = rng.integers(0, grid.D, n).astype(np.uint16)
    syms = np.empty(n, dtype=np.uint8)
    for i, pmf in enumerate(pmfs):
        sel = d == i
        p = pmf.P.astype(np.float64) / (1 << M)
        syms[sel] = rng.choice(256, int(sel.sum()), p=p)
    return syms, d, pmfs


def run_bench(
    M: int = 12,
    D: int = 8,
    lane_counts=(1, 2, 4, 8),
    n_symbols: int = 1 << 20,
    ref_symbols: int = 40_000,
    image_hw: tuple[int, int] = (96, 96),
    seed: int = 0,
) -> list[dict]:
    grid = logistic.default_grid(D)
    syms, d, pmfs = _bench_symbols(M, grid, n_symbols, seed)
    enc, dec = tables.build_tables(pmfs, M)
    rows = []

    # reference coder, single stream, on a reduced slice (it is slow by design)
    rs, rd = syms[:ref_symbols], d[:ref_symbols]
    rp = [pmfs[i] for i in rd]
    t0 = time.perf_counter()
    state, stream = rans.ref_encode_message(rs, rp, M)
    rows.append(_row("coder-encode-ref", 1, rs.size, time.perf_counter() - t0))
    t0 = time.perf_counter()
    rans.ref_decode_message(state, stream, rp)
    rows.append(_row("coder-decode-ref", 1, rs.size, time.perf_counter() - t0))

    # fast coder across lane counts
    for L in lane_counts:
        t0 = time.perf_counter()
        ls = tables.interleaved_encode(syms, d, L, enc)
        rows.append(_row("coder-encode-fast", L, syms.size, time.perf_counter() - t0))
        t0 = time.perf_counter()
        out = tables.interleaved_decode(ls, syms.size, d, dec, workers=L)
        rows.append(_row("coder-decode-fast", L, syms.size, time.perf_counter() - t0))
        if not np.array_equal(out, syms):
            raise AssertionError("bench round trip failed")

    # model inference and predictor phases on one synthetic image
    rng = np.random.default_rng(seed)
    H, W = image_hw
    img = rng.integers(0, 256, (H, W, 3), dtype=np.uint8)
    weights = random_weights(seed=seed)
    t0 = time.perf_counter()
    idx = vqvae.encode_to_indices(img, weights)
    vqvae.decode_to_params(idx, weights, (H, W))
    rows.append(_row("model-inference", 1, img.size, time.perf_counter() - t0))

    params = predictor.default_params()
    res = predictor.forward_residual(img, params)
    predictor.decode_sequential(res, params)  # warm the jit
    t0 = time.perf_counter()
    predictor.decode_sequential(res, params)
    rows.append(_row("ar-decode-sequential", 1, img.size, time.perf_counter() - t0))
    predictor.decode_parallel(res, params)
    t0 = time.perf_counter()
    predictor.decode_parallel(res, params)
    rows.append(_row("ar-decode-parallel", 1, img.size, time.perf_counter() - t0))
    return rows


def write_rows(rows: list[dict], stream) -> None:
    for row in rows:
        stream.write(json.dumps(row) + "\n")


def render_figures(rows: list[dict], outdir) -> list[str]:
    """Two PNGs: fast-coder throughput vs lanes, and per-phase bars."""
    os.makedirs(outdir, exist_ok=True)
    paths = []

    fig, ax = plt.subplots(figsize=(5, 3.4))
    for phase, marker in (("coder-encode-fast", "o"), ("coder-decode-fast", "s")):
        pts = sorted(
            ((r["lanes"], r["mb_per_s"]) for r in rows if r["phase"] == phase)
        )
        if pts:
            ax.plot(*zip(*pts), marker=marker, label=phase)
    ax.set_xlabel("lanes")
    ax.set_ylabel("MB/s")
    ax.set_title("table-driven coder throughput")
    ax.legend()
    fig.tight_layout()
    p = os.path.join(outdir, "coder_throughput.png")
    fig.savefig(p, dpi=120)
    plt.close(fig)
    paths.append(p)

    fig, ax = plt.subplots(figsize=(6, 3.4))
    singles = [r for r in rows if r["lanes"] == 1]
    ax.barh([r["phase"] for r in singles], [r["mb_per_s"] for r in singles])
    ax.set_xlabel("MB/s (single lane)")
    ax.set_xscale("log")
    ax.set_title("phase throughput")
    fig.tight_layout()
    p = os.path.join(outdir, "phase_throughput.png")
    fig.savefig(p, dpi=120)
    plt.close(fig)
    paths.append(p)
    return paths
