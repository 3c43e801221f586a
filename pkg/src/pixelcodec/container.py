"""End-to-end codec pipeline and the on-disk container format.

Layout (little-endian throughout):

    magic "PILC" | version u8 | backend u8 | M u8 | padding-rule u8
    | flags u8 (bit 0: schedule checksum present)
    | width u32 | height u32 | lanes u16 | static scale index u16
    | scale grid: count u16, then count f64 values
    | predictor-parameter hash 8B
    | model hash 8B                     (vqvae backend only)
    | index stream table:  total u32, per-lane u32 lengths, per-lane u16
      final states          (vqvae backend only)
    | residual stream table: same shape
    | schedule checksum u32             (debug flag only)
    | index stream payload | residual stream payload
    | crc32 u32 over everything above

Each lane payload is a BitStack wire blob. Final coder states are the
decoder's entry points; after decoding, every lane must land back on the
initial state 2^M with zero bits left, which (together with the crc) turns
any corruption into a detected error instead of a wrong image.

The decoder reconstructs every per-symbol distribution choice from the
header and already-decoded content (indices, then parameter planes), so no
distribution ids are ever transmitted.
"""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass, field, replace

import numpy as np

from . import logistic, predictor, tables, vqvae
from .bits import BitStack
from .errors import (
    CorruptStreamError,
    FormatError,
    ModelError,
    ParameterError,
)
from .logistic import ScaleGrid, default_grid
from .weights import ModelWeights

MAGIC = b"PILC"
VERSION = 1
PAD_RULE_ZERO = 0

BACKEND_STATIC = 0
BACKEND_VQVAE = 1
BACKEND_NAMES = {BACKEND_STATIC: "twar-static", BACKEND_VQVAE: "twar-vqvae"}
BACKEND_IDS = {v: k for k, v in BACKEND_NAMES.items()}


FLAG_SCHEDULE_CHECKSUM = 1


@dataclass(frozen=True)
class CodecConfig:
    backend: str = "twar-static"
    M: int = 12
    lanes: int = 1
    grid: ScaleGrid = field(default_factory=default_grid)
    verify_tables: bool = False
    # debug aid: embed a checksum of the per-symbol distribution schedule so
    # the decoder asserts its (mu, s, d) recomputation equals the encoder's
    debug_schedule_check: bool = False

    def __post_init__(self):
        if self.backend not in BACKEND_IDS:
            raise ParameterError(f"unknown backend {self.backend!r}")
        if not 10 <= self.M <= 12:
            raise ParameterError("M must be in [10, 12]")
        if not 1 <= self.lanes <= 65535:
            raise ParameterError("lane count must fit in 16 bits")


@dataclass(frozen=True)
class ContainerHeader:
    backend: int
    M: int
    pad_rule: int
    width: int
    height: int
    lanes: int
    static_d: int
    grid: ScaleGrid
    params_hash: bytes
    model_hash: bytes | None
    index_lane_bytes: tuple[int, ...]
    index_states: tuple[int, ...]
    residual_lane_bytes: tuple[int, ...]
    residual_states: tuple[int, ...]
    schedule_checksum: int | None = None


def _pack_stream_table(lane_blobs: list[bytes], states: list[int]) -> bytes:
    total = sum(len(b) for b in lane_blobs)
    out = struct.pack("<I", total)
    out += struct.pack(f"<{len(lane_blobs)}I", *(len(b) for b in lane_blobs))
    out += struct.pack(f"<{len(states)}H", *states)
    return out


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.off = 0

    def take(self, n: int) -> bytes:
        if self.off + n > len(self.data):
            raise FormatError("container truncated")
        out = self.data[self.off : self.off + n]
        self.off += n
        return out

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def _encode_streams(symbols, d_sched, lanes, enc_tables):
    ls = tables.interleaved_encode(symbols, d_sched, lanes, enc_tables)
    return [s.to_bytes() for s in ls.streams], ls.states


def compress(
    image: np.ndarray,
    model: ModelWeights | None = None,
    config: CodecConfig = CodecConfig(),
) -> bytes:
    """Compress one image to a self-contained blob."""
    image = predictor.validate_image(image)
    H, W = image.shape[:2]
    if W >= (1 << 32) or H >= (1 << 32):
        raise ParameterError("image dimensions do not fit 32 bits")
    backend = BACKEND_IDS[config.backend]
    M, L, grid = config.M, config.lanes, config.grid

    params = model.predictor_params if model is not None else predictor.default_params()
    t = predictor.forward_residual(image, params)

    res_pmfs = logistic.residual_distributions(grid, M)
    res_enc, _ = tables.build_tables(res_pmfs, M, verify=config.verify_tables)

    static_d = 0
    idx_blobs: list[bytes] = []
    idx_states: list[int] = []
    if backend == BACKEND_VQVAE:
        if model is None or not model.has_network:
            raise ModelError("vqvae backend needs model weights")
        indices = vqvae.encode_to_indices(image, model)
        mu, s = vqvae.decode_to_params(indices, model, (H, W))
        coded, _ = logistic.recentre_plane(t, mu)
        d_sched = logistic.scales_to_distributions(s, grid).ravel()
        idx_pmf = vqvae.index_histogram_pmf(model, M)
        idx_enc, _ = tables.build_tables([idx_pmf], M, verify=config.verify_tables)
        idx_syms = indices.ravel()
        idx_blobs, idx_states = _encode_streams(
            idx_syms, np.zeros(idx_syms.size, dtype=np.uint16), L, idx_enc
        )
    else:
        coded = t
        mad = float(np.mean(np.abs(t.astype(np.float64) - 128.0)))
        s_est = mad / np.log(4.0)
        static_d = (
            logistic.scale_to_distribution(s_est, grid) if s_est > 0 else 0
        )
        d_sched = np.full(coded.size, static_d, dtype=np.uint16)

    res_blobs, res_states = _encode_streams(coded.ravel(), d_sched, L, res_enc)

    flags = FLAG_SCHEDULE_CHECKSUM if config.debug_schedule_check else 0
    out = bytearray()
    out += MAGIC
    out += struct.pack("<BBBBB", VERSION, backend, M, PAD_RULE_ZERO, flags)
    out += struct.pack("<IIHH", W, H, L, static_d)
    out += grid.to_bytes()
    out += params.hash8()
    if backend == BACKEND_VQVAE:
        out += model.hash8()
        out += _pack_stream_table(idx_blobs, idx_states)
    out += _pack_stream_table(res_blobs, res_states)
    if flags & FLAG_SCHEDULE_CHECKSUM:
        out += struct.pack("<I", zlib.crc32(d_sched.astype("<u2").tobytes()))
    for b in idx_blobs:
        out += b
    for b in res_blobs:
        out += b
    out += struct.pack("<I", zlib.crc32(bytes(out)))
    return bytes(out)


def parse_header(blob: bytes) -> tuple[ContainerHeader, int]:
    """Validate framing and return (header, payload offset).

    Raises FormatError for structural problems and CorruptStreamError when
    the checksum does not match.
    """
    if len(blob) < 8:
        raise FormatError("container truncated")
    if blob[:4] != MAGIC:
        raise FormatError("not a codec container (bad magic)")
    if blob[4] != VERSION:
        raise FormatError(f"unsupported container version {blob[4]}")
    (crc,) = struct.unpack_from("<I", blob, len(blob) - 4)
    if zlib.crc32(blob[:-4]) != crc:
        raise CorruptStreamError("container checksum mismatch")

    r = _Reader(blob)
    r.take(5)
    (backend, M, pad_rule, flags) = struct.unpack("<BBBB", r.take(4))
    if backend not in BACKEND_NAMES:
        raise FormatError(f"unknown backend id {backend}")
    if not 10 <= M <= 12:
        raise FormatError(f"precision M={M} outside [10, 12]")
    if pad_rule != PAD_RULE_ZERO:
        raise FormatError(f"unknown padding rule {pad_rule}")
    if flags & ~FLAG_SCHEDULE_CHECKSUM:
        raise FormatError(f"unknown header flags {flags:#x}")
    W, H, L, static_d = r.unpack("<IIHH")
    if W < 1 or H < 1 or L < 1:
        raise FormatError("bad dimensions or lane count")
    try:
        grid, end = ScaleGrid.from_bytes(blob, r.off)
    except ParameterError as e:
        raise FormatError(f"bad scale grid: {e}")
    r.off = end
    if static_d >= grid.D:
        raise FormatError("static scale index outside the grid")
    params_hash = r.take(8)
    model_hash = None
    idx_lanes: tuple[int, ...] = ()
    idx_states: tuple[int, ...] = ()
    if backend == BACKEND_VQVAE:
        model_hash = r.take(8)
        (_total,) = r.unpack("<I")
        idx_lanes = r.unpack(f"<{L}I")
        idx_states = r.unpack(f"<{L}H")
        if sum(idx_lanes) != _total:
            raise FormatError("index stream lengths inconsistent")
    (_total,) = r.unpack("<I")
    res_lanes = r.unpack(f"<{L}I")
    res_states = r.unpack(f"<{L}H")
    if sum(res_lanes) != _total:
        raise FormatError("residual stream lengths inconsistent")
    sched_crc = None
    if flags & FLAG_SCHEDULE_CHECKSUM:
        (sched_crc,) = r.unpack("<I")
    header = ContainerHeader(
        backend, M, pad_rule, W, H, L, static_d, grid, params_hash,
        model_hash, idx_lanes, idx_states, res_lanes, res_states, sched_crc,
    )
    expected = r.off + sum(idx_lanes) + sum(res_lanes) + 4
    if expected != len(blob):
        raise FormatError("container payload length mismatch")
    return header, r.off


def _read_lanes(blob: bytes, off: int, lane_bytes, states, M) -> tables.LaneSet:
    streams = []
    for n in lane_bytes:
        streams.append(BitStack.from_bytes(blob[off : off + n]))
        if streams[-1].wire_size() != n:
            raise FormatError("lane length field disagrees with payload")
        off += n
    for s in states:
        if not (1 << M) <= s < (1 << (M + 1)):
            raise CorruptStreamError("recorded coder state out of range")
    return tables.LaneSet(list(states), streams)


def decompress(
    blob: bytes,
    model: ModelWeights | None = None,
    workers: int = 1,
) -> np.ndarray:
    """Exact inverse of compress."""
    header, off = parse_header(blob)
    H, W, M, L = header.height, header.width, header.M, header.lanes
    grid = header.grid

    if model is not None:
        params = model.predictor_params
    else:
        params = predictor.default_params()
    if params.hash8() != header.params_hash:
        raise ModelError(
            "predictor parameters do not match the container"
            + ("" if model is not None else " (a model file is required)")
        )

    res_pmfs = logistic.residual_distributions(grid, M)
    _, res_dec = tables.build_tables(res_pmfs, M)

    idx_off = off
    res_off = off + sum(header.index_lane_bytes)

    if header.backend == BACKEND_VQVAE:
        if model is None or not model.has_network:
            raise ModelError("container needs model weights to decode")
        if model.hash8() != header.model_hash:
            raise ModelError("model hash mismatch")
        gh, gw = (H + 1) // 2, (W + 1) // 2
        idx_pmf = vqvae.index_histogram_pmf(model, M)
        _, idx_dec = tables.build_tables([idx_pmf], M)
        lane_set = _read_lanes(
            blob, idx_off, header.index_lane_bytes, header.index_states, M
        )
        idx_syms = tables.interleaved_decode(
            lane_set, gh * gw, np.zeros(gh * gw, dtype=np.uint16), idx_dec, workers
        )
        indices = idx_syms.reshape(gh, gw)
        mu, s = vqvae.decode_to_params(indices, model, (H, W))
        d_sched = logistic.scales_to_distributions(s, grid).ravel()
        shift = logistic.round_half_away(mu)
    else:
        d_sched = np.full(H * W * 3, header.static_d, dtype=np.uint16)
        shift = None

    if header.schedule_checksum is not None:
        got = zlib.crc32(d_sched.astype("<u2").tobytes())
        if got != header.schedule_checksum:
            raise CorruptStreamError(
                "decoder-side distribution schedule disagrees with the encoder"
            )

    lane_set = _read_lanes(
        blob, res_off, header.residual_lane_bytes, header.residual_states, M
    )
    coded = tables.interleaved_decode(lane_set, H * W * 3, d_sched, res_dec, workers)
    coded = coded.reshape(H, W, 3)
    t = coded if shift is None else logistic.unrecentre_plane(coded, shift)
    return predictor.decode_parallel(t, params)


def bpd_report(blob: bytes, original: np.ndarray) -> float:
    """Real bits per dimension: every container byte counts."""
    original = predictor.validate_image(original)
    return 8.0 * len(blob) / original.size


def inspect(blob: bytes) -> dict:
    header, off = parse_header(blob)
    return {
        "backend": BACKEND_NAMES[header.backend],
        "width": header.width,
        "height": header.height,
        "M": header.M,
        "lanes": header.lanes,
        "padding_rule": header.pad_rule,
        "grid": [float(v) for v in header.grid.values],
        "static_scale_index": header.static_d,
        "params_hash": header.params_hash.hex(),
        "model_hash": header.model_hash.hex() if header.model_hash else None,
        "index_stream_bytes": sum(header.index_lane_bytes),
        "residual_stream_bytes": sum(header.residual_lane_bytes),
        "container_bytes": len(blob),
    }
