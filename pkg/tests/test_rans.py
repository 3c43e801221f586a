import numpy as np
import pytest

from pixelcodec import rans
from pixelcodec.bits import BitStack
from pixelcodec.errors import CoderContractError, CorruptStreamError
from pixelcodec.pmf import QuantizedPmf, quantize_pmf, uniform_pmf


def small_pmf():
    return QuantizedPmf(6, np.array([20, 5, 30, 9]))  # sums to 64, cap 31


# --- textbook unbounded-state recurrences, used as an oracle ---------------


def textbook_encode(msg, pmf, M, s0=1):
    S = s0
    for x in reversed(msg):
        P, C = pmf.mass(x), pmf.cum(x)
        S = (S // P) * (1 << M) + C + S % P
    return S


def textbook_decode(S, n, pmf, M):
    out = []
    for _ in range(n):
        t = S % (1 << M)
        x = 0
        while not (pmf.cum(x) <= t < pmf.cum(x) + pmf.mass(x)):
            x += 1
        out.append(x)
        S = pmf.mass(x) * (S // (1 << M)) + t - pmf.cum(x)
    return out, S


def test_textbook_recurrences_round_trip(rng):
    pmf = small_pmf()
    msg = list(rng.integers(0, 4, 200))
    S = textbook_encode(msg, pmf, 6)
    out, S_end = textbook_decode(S, len(msg), pmf, 6)
    assert out == msg
    assert S_end == 1


def test_symbol_selection_matches_textbook_scan(rng):
    """Our binary search and the textbook linear scan agree for every slot."""
    pmf = quantize_pmf(rng.random(256) + 0.01, 12)
    for t in range(1 << 12):
        x = int(np.searchsorted(pmf.C, t, side="right")) - 1
        assert pmf.cum(x) <= t < pmf.cum(x) + pmf.mass(x)


def test_ref_and_textbook_decode_same_symbols(rng):
    """The renormalized coder and the unbounded coder decode identically."""
    pmf = small_pmf()
    msg = list(rng.integers(0, 4, 64))
    state, stream = rans.ref_encode_message(msg, [pmf] * len(msg), 6)
    ours, _ = rans.ref_decode_message(state, stream, [pmf] * len(msg))
    via_textbook, _ = textbook_decode(textbook_encode(msg, pmf, 6), len(msg), pmf, 6)
    assert ours == via_textbook == msg


# --- single-symbol inverse property -----------------------------------------


def test_exhaustive_inverse_at_m6():
    pmf = small_pmf()
    for S in range(64, 128):
        for x in range(4):
            stream = BitStack()
            s1 = rans.ref_encode(S, pmf, x, stream)
            assert 64 <= s1 < 128
            x2, s2 = rans.ref_decode(s1, pmf, stream)
            assert (x2, s2) == (x, S)
            assert len(stream) == 0


def test_state_validation():
    pmf = small_pmf()
    with pytest.raises(CoderContractError):
        rans.ref_encode(10, pmf, 0, BitStack())  # below resting range
    with pytest.raises(CoderContractError):
        rans.ref_decode(200, pmf, BitStack())


def test_inadmissible_mass_rejected():
    q = quantize_pmf(np.array([3.0, 1.0]), 12)  # mass 2049 breaks the cap
    with pytest.raises(CoderContractError):
        rans.ref_encode(4096, q, 1, BitStack())


def test_stream_underflow_is_reported():
    pmf = small_pmf()
    with pytest.raises(CorruptStreamError):
        rans.ref_decode(64, pmf, BitStack())  # state 64 decodes then pops


# --- bit counts --------------------------------------------------------------


def test_uniform_256_pushes_exactly_eight_bits():
    """Exhaustive over all resting states (the Alg-1 evaluation oracle).

    floor(log2(S / 16)) = 8 for every S in [2^12, 2^13): one byte per
    uniformly distributed byte symbol, matching the entropy exactly.
    """
    q = uniform_pmf(256, 12)
    for S in range(1 << 12, 1 << 13, 7):
        stream = BitStack()
        rans.ref_encode(S, q, 123, stream)
        assert len(stream) == 8
    # edge states too
    for S in (1 << 12, (1 << 13) - 1):
        stream = BitStack()
        rans.ref_encode(S, q, 0, stream)
        assert len(stream) == 8


def test_pushed_bits_match_log_formula(rng):
    pmf = quantize_pmf(rng.random(256) + 0.01, 12)
    for _ in range(500):
        S = int(rng.integers(1 << 12, 1 << 13))
        x = int(rng.integers(0, 256))
        stream = BitStack()
        rans.ref_encode(S, pmf, x, stream)
        assert len(stream) == int(np.floor(np.log2(S / pmf.mass(x))))


# --- message framing ----------------------------------------------------------


def test_empty_message():
    state, stream = rans.ref_encode_message([], [], 12)
    assert state == 1 << 12
    assert len(stream) == 0


def test_single_symbol_message_equals_direct_encode():
    pmf = small_pmf()
    state, stream = rans.ref_encode_message([2], [pmf], 6)
    direct = BitStack()
    s_direct = rans.ref_encode(64, pmf, 2, direct)
    assert state == s_direct
    assert stream == direct


def test_message_round_trip_with_per_symbol_distributions(rng):
    dists = [quantize_pmf(rng.random(256) + 0.01, 12) for _ in range(5)]
    ids = rng.integers(0, 5, 10_000)
    msg = rng.integers(0, 256, 10_000)
    pmfs = [dists[i] for i in ids]
    state, stream = rans.ref_encode_message(msg, pmfs, 12)
    pushed = len(stream)
    out, end_state = rans.ref_decode_message(state, stream, pmfs)
    assert out == list(msg)
    assert end_state == 1 << 12
    assert len(stream) == 0  # popped exactly what was pushed
    assert pushed > 0


def test_overhead_bound_smoke(rng):
    """Per-symbol overhead stays below 2 - log2(e) (full run in acceptance)."""
    bound = 2 - np.log2(np.e)
    for seed in range(3):
        r = np.random.default_rng(seed)
        pmf = quantize_pmf(r.random(256) ** 2 + 1e-4, 12)
        p = pmf.P.astype(np.float64) / 4096
        h_q = -(p * np.log2(p)).sum()
        msg = r.choice(256, 200_000, p=p)
        _, stream = rans.ref_encode_message(msg, [pmf] * msg.size, 12)
        bps = len(stream) / msg.size
        assert bps - h_q <= bound + 0.01
