"""Last-in-first-out bit container shared by both coder paths.

Bits live in a flat byte buffer, LSB-first within each byte, in push order.
Popping walks backwards from the top, so the wire layout is append-only and
the serialized form is position-independent:

    8 bytes little-endian bit count, then ceil(count/8) payload bytes.

Trailing bits of the final partial byte are zero on the wire.
"""

from __future__ import annotations

import struct

import numpy as np

from .errors import CorruptStreamError, FormatError


class BitStack:
    __slots__ = ("_buf", "_n")

    def __init__(self) -> None:
        self._buf = bytearray()
        self._n = 0

    def __len__(self) -> int:
        return self._n

    def push(self, bit: int) -> None:
        i = self._n
        if (i >> 3) == len(self._buf):
            self._buf.append(0)
        if bit & 1:
            self._buf[i >> 3] |= 1 << (i & 7)
        else:
            self._buf[i >> 3] &= ~(1 << (i & 7)) & 0xFF
        self._n = i + 1

    def push_bits(self, value: int, count: int) -> None:
        """Push the low `count` bits of `value`, lowest bit first."""
        for j in range(count):
            self.push((value >> j) & 1)

    def pop(self) -> int:
        if self._n == 0:
            raise CorruptStreamError("bit stream underflow")
        self._n -= 1
        i = self._n
        return (self._buf[i >> 3] >> (i & 7)) & 1

    def pop_bits(self, count: int) -> int:
        """Pop `count` bits; the first bit popped becomes the MSB."""
        v = 0
        for _ in range(count):
            v = (v << 1) | self.pop()
        return v

    def peek_all(self) -> list[int]:
        """Bits in push order (testing hook)."""
        return [(self._buf[i >> 3] >> (i & 7)) & 1 for i in range(self._n)]

    # wire form ----------------------------------------------------------

    def to_bytes(self) -> bytes:
        payload = bytearray(self._buf[: (self._n + 7) >> 3])
        tail = self._n & 7
        if tail and payload:
            payload[-1] &= (1 << tail) - 1
        return struct.pack("<Q", self._n) + bytes(payload)

    @classmethod
    def from_bytes(cls, data: bytes) -> "BitStack":
        if len(data) < 8:
            raise FormatError("bit stream header truncated")
        (n,) = struct.unpack_from("<Q", data, 0)
        need = 8 + ((n + 7) >> 3)
        if len(data) < need:
            raise FormatError("bit stream payload truncated")
        out = cls()
        out._buf = bytearray(data[8:need])
        out._n = n
        return out

    def wire_size(self) -> int:
        return 8 + ((self._n + 7) >> 3)

    # packed-array form used by the compiled kernels ----------------------

    def to_packed(self) -> tuple[np.ndarray, int]:
        raw = self.to_bytes()[8:]
        return np.frombuffer(raw, dtype=np.uint8).copy(), self._n

    @classmethod
    def from_packed(cls, buf: np.ndarray, nbits: int) -> "BitStack":
        out = cls()
        out._buf = bytearray(buf.tobytes()[: (nbits + 7) >> 3])
        out._n = int(nbits)
        return out

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BitStack):
            return NotImplemented
        return self._n == other._n and self.to_bytes() == other.to_bytes()

    def __repr__(self) -> str:
        return f"BitStack({self._n} bits)"
