"""Model weight bundle and its on-disk format.

File layout (everything little-endian):

    magic "PILW" | version u8 | K u32 | Dc u32 | channels u32 | blocks u32
    | tensor count u32
    | per tensor: name length u32, name bytes, rank u32, dims u32 each,
      float32 payload
    | index histogram: K u64 counts
    | predictor parameters: 12 float32 (see predictor.PredictorParams)
    | digest: first 8 bytes of SHA-256 over everything above

Tensors are written in the canonical architecture order, so the digest is a
stable content hash; the codec container references models by this digest.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import FormatError, ModelError
from .predictor import PredictorParams, default_params

MAGIC = b"PILW"
VERSION = 1


@dataclass(frozen=True)
class ModelConfig:
    K: int = 256  # codebook entries
    Dc: int = 32  # codebook dimension
    channels: int = 32
    blocks: int = 4

    def __post_init__(self):
        if not 1 <= self.K <= 256:
            raise ModelError("codebook size must be in [1, 256]")
        if min(self.Dc, self.channels, self.blocks) < 1:
            raise ModelError("config values must be positive")


def tensor_shapes(cfg: ModelConfig) -> dict[str, tuple[int, ...]]:
    """Canonical tensor names and shapes; iteration order is the file order."""
    C, Dc, K, B = cfg.channels, cfg.Dc, cfg.K, cfg.blocks
    shapes: dict[str, tuple[int, ...]] = {}

    def conv(name, cout, cin, k):
        shapes[f"{name}.w"] = (cout, cin, k, k)
        shapes[f"{name}.b"] = (cout,)

    conv("enc.stem", C, 3, 3)
    conv("enc.down", C, C, 3)
    for i in range(B):
        conv(f"enc.block{i}.conv1", C, C, 3)
        conv(f"enc.block{i}.conv2", C, C, 3)
    conv("enc.proj", Dc, C, 1)
    shapes["codebook"] = (K, Dc)
    conv("dec.proj", C, Dc, 1)
    for i in range(B):
        conv(f"dec.block{i}.conv1", C, C, 3)
        conv(f"dec.block{i}.conv2", C, C, 3)
    conv("dec.up", 4 * C, C, 3)
    conv("dec.mu", 3, C, 3)
    conv("dec.s", 3, C, 3)
    return shapes


@dataclass
class ModelWeights:
    config: ModelConfig
    tensors: dict[str, np.ndarray]
    histogram: np.ndarray = field(default=None)  # (K,) uint64 index usage
    predictor_params: PredictorParams = field(default_factory=default_params)

    def __post_init__(self):
        if self.histogram is None:
            self.histogram = np.zeros(self.config.K, dtype=np.uint64)
        self.histogram = np.asarray(self.histogram, dtype=np.uint64)
        if self.histogram.shape != (self.config.K,):
            raise ModelError("histogram must have one count per codebook entry")
        expect = tensor_shapes(self.config)
        if self.tensors:
            missing = set(expect) - set(self.tensors)
            extra = set(self.tensors) - set(expect)
            if missing or extra:
                raise ModelError(
                    f"tensor set mismatch: missing {sorted(missing)[:3]}, "
                    f"unexpected {sorted(extra)[:3]}"
                )
            for name, shape in expect.items():
                t = np.ascontiguousarray(self.tensors[name], dtype=np.float32)
                if t.shape != shape:
                    raise ModelError(f"{name}: shape {t.shape}, expected {shape}")
                if not np.all(np.isfinite(t)):
                    raise ModelError(f"{name}: non-finite values")
                self.tensors[name] = t

    @property
    def has_network(self) -> bool:
        return bool(self.tensors)

    def to_bytes(self) -> bytes:
        out = bytearray()
        out += MAGIC
        out += struct.pack("<B", VERSION)
        cfg = self.config
        out += struct.pack("<4I", cfg.K, cfg.Dc, cfg.channels, cfg.blocks)
        names = [n for n in tensor_shapes(cfg) if self.tensors]
        out += struct.pack("<I", len(names))
        for name in names:
            t = self.tensors[name]
            nb = name.encode()
            out += struct.pack("<I", len(nb)) + nb
            out += struct.pack("<I", t.ndim)
            out += struct.pack(f"<{t.ndim}I", *t.shape)
            out += t.astype("<f4").tobytes()
        out += self.histogram.astype("<u8").tobytes()
        out += self.predictor_params.to_bytes()
        out += hashlib.sha256(bytes(out)).digest()[:8]
        return bytes(out)

    @classmethod
    def from_bytes(cls, data: bytes) -> "ModelWeights":
        if len(data) < 30:
            raise FormatError("model file truncated")
        if data[:4] != MAGIC:
            raise FormatError("not a model file (bad magic)")
        if data[4] != VERSION:
            raise FormatError(f"unsupported model version {data[4]}")
        if hashlib.sha256(data[:-8]).digest()[:8] != data[-8:]:
            raise ModelError("model digest mismatch (file corrupt)")
        K, Dc, channels, blocks = struct.unpack_from("<4I", data, 5)
        cfg = ModelConfig(K, Dc, channels, blocks)
        (count,) = struct.unpack_from("<I", data, 21)
        off = 25
        tensors: dict[str, np.ndarray] = {}
        for _ in range(count):
            (nlen,) = struct.unpack_from("<I", data, off)
            off += 4
            name = data[off : off + nlen].decode()
            off += nlen
            (rank,) = struct.unpack_from("<I", data, off)
            off += 4
            dims = struct.unpack_from(f"<{rank}I", data, off)
            off += 4 * rank
            n = int(np.prod(dims)) if rank else 1
            t = np.frombuffer(data, dtype="<f4", count=n, offset=off)
            off += 4 * n
            tensors[name] = t.reshape(dims).copy()
        hist = np.frombuffer(data, dtype="<u8", count=K, offset=off).copy()
        off += 8 * K
        params = PredictorParams.from_bytes(data[off : off + 48])
        off += 48
        if off + 8 != len(data):
            raise FormatError("model file has trailing bytes")
        return cls(cfg, tensors, hist, params)

    def hash8(self) -> bytes:
        return self.to_bytes()[-8:]

    def save(self, path) -> None:
        with open(path, "wb") as f:
            f.write(self.to_bytes())

    @classmethod
    def load(cls, path) -> "ModelWeights":
        with open(path, "rb") as f:
            return cls.from_bytes(f.read())


def random_weights(
    config: ModelConfig = ModelConfig(),
    seed: int = 0,
    scale: float = 1.0,
) -> ModelWeights:
    """Randomly initialized weights; the codec stays lossless regardless of
    model quality, so these are enough for every coding-path test."""
    rng = np.random.default_rng(seed)
    tensors = {}
    for name, shape in tensor_shapes(config).items():
        if name.endswith(".b"):
            tensors[name] = np.zeros(shape, dtype=np.float32)
        elif name == "codebook":
            tensors[name] = rng.normal(0, 1, shape).astype(np.float32)
        else:
            fan_in = int(np.prod(shape[1:]))
            std = scale * np.sqrt(2.0 / fan_in)
            tensors[name] = rng.normal(0, std, shape).astype(np.float32)
    return ModelWeights(config, tensors)
