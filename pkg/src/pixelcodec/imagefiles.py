"""Image file ingestion: binary PPM (P6, maxval 255), raw RGB8, and
CIFAR-10-style binary batches for fitting corpora.

Only formats with trivially exact pixel IO are supported, so losslessness
claims never depend on a third-party decoder.
"""

from __future__ import annotations

import os

import numpy as np

from .errors import FormatError


def read_ppm(path) -> np.ndarray:
    with open(path, "rb") as f:
        data = f.read()
    if data[:2] != b"P6":
        raise FormatError(f"{path}: not a binary PPM (P6)")
    # header: three whitespace-separated integers, # comments allowed
    fields = []
    pos = 2
    while len(fields) < 3:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos] != 0x0A:
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise FormatError(f"{path}: truncated PPM header")
        fields.append(int(data[start:pos]))
    pos += 1  # single whitespace byte before the payload
    w, h, maxval = fields
    if maxval != 255:
        raise FormatError(f"{path}: maxval {maxval} unsupported, need 255")
    if w < 1 or h < 1:
        raise FormatError(f"{path}: bad dimensions {w}x{h}")
    need = w * h * 3
    payload = data[pos : pos + need]
    if len(payload) != need:
        raise FormatError(f"{path}: expected {need} payload bytes")
    return np.frombuffer(payload, dtype=np.uint8).reshape(h, w, 3).copy()


def write_ppm(path, image: np.ndarray) -> None:
    h, w = image.shape[:2]
    with open(path, "wb") as f:
        f.write(b"P6\n%d %d\n255\n" % (w, h))
        f.write(np.ascontiguousarray(image, dtype=np.uint8).tobytes())


def read_raw(path, width: int, height: int) -> np.ndarray:
    with open(path, "rb") as f:
        data = f.read()
    need = width * height * 3
    if len(data) != need:
        raise FormatError(f"{path}: raw size {len(data)}, expected {need}")
    return np.frombuffer(data, dtype=np.uint8).reshape(height, width, 3).copy()


def write_raw(path, image: np.ndarray) -> None:
    with open(path, "wb") as f:
        f.write(np.ascontiguousarray(image, dtype=np.uint8).tobytes())


def read_cifar_batch(path) -> list[np.ndarray]:
    """CIFAR-10 binary batch: records of 1 label byte + 3072 planar bytes."""
    with open(path, "rb") as f:
        data = f.read()
    rec = 3073
    if len(data) % rec:
        raise FormatError(f"{path}: not a CIFAR binary batch")
    out = []
    for i in range(len(data) // rec):
        planar = np.frombuffer(data, dtype=np.uint8, count=3072, offset=i * rec + 1)
        out.append(planar.reshape(3, 32, 32).transpose(1, 2, 0).copy())
    return out


def load_corpus(directory) -> list[np.ndarray]:
    """All .ppm files plus any CIFAR .bin batches under `directory`, sorted."""
    images = []
    for name in sorted(os.listdir(directory)):
        path = os.path.join(directory, name)
        if name.endswith(".ppm"):
            images.append(read_ppm(path))
        elif name.endswith(".bin"):
            images.extend(read_cifar_batch(path))
    return images
