import numpy as np
import pytest

from pixelcodec.bits import BitStack
from pixelcodec.errors import CorruptStreamError, FormatError


def test_lifo_order():
    s = BitStack()
    for b in (1, 0, 1, 1, 0):
        s.push(b)
    assert [s.pop() for _ in range(5)] == [0, 1, 1, 0, 1]
    with pytest.raises(CorruptStreamError):
        s.pop()


def test_push_bits_lsb_first_pop_bits_msb_first():
    s = BitStack()
    s.push_bits(0b1011, 4)  # pushes 1, 1, 0, 1
    assert s.peek_all() == [1, 1, 0, 1]
    # first popped bit (the top) becomes the MSB, so pop inverts push
    assert s.pop_bits(4) == 0b1011
    # pop_bits mirrors the bit-by-bit ref loop v = 2 v + pop()
    s.push_bits(0b100110, 6)
    v = 0
    for _ in range(6):
        v = (v << 1) | s.pop()
    assert v == 0b100110


def test_wire_layout_golden():
    s = BitStack()
    for b in (1, 0, 1, 1):
        s.push(b)
    # u64 little-endian count, then LSB-first payload: bits 1,0,1,1 -> 0x0d
    assert s.to_bytes() == bytes([4, 0, 0, 0, 0, 0, 0, 0, 0x0D])


def test_serialization_round_trip(rng):
    for n in [0, 1, 7, 8, 9, 64, 1000]:
        s = BitStack()
        bits = rng.integers(0, 2, n)
        for b in bits:
            s.push(int(b))
        t = BitStack.from_bytes(s.to_bytes())
        assert len(t) == n
        assert t.peek_all() == list(bits)
        assert t.to_bytes() == s.to_bytes()


def test_packed_round_trip(rng):
    s = BitStack()
    for b in rng.integers(0, 2, 37):
        s.push(int(b))
    buf, n = s.to_packed()
    t = BitStack.from_packed(buf, n)
    assert t == s


def test_truncated_wire_raises():
    with pytest.raises(FormatError):
        BitStack.from_bytes(b"\x01\x02")
    with pytest.raises(FormatError):
        BitStack.from_bytes(bytes([200, 0, 0, 0, 0, 0, 0, 0]) + b"\x00")


def test_pop_matches_push_count(rng):
    s = BitStack()
    n = 300
    for b in rng.integers(0, 2, n):
        s.push(int(b))
    popped = 0
    while len(s):
        s.pop()
        popped += 1
    assert popped == n
