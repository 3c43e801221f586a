import numpy as np
import pytest

from pixelcodec import nn, vqvae
from pixelcodec.errors import ModelError
from pixelcodec.logistic import default_grid
from pixelcodec.pmf import quantize_pmf
from pixelcodec.weights import ModelConfig, ModelWeights, random_weights, tensor_shapes

SMALL = ModelConfig(K=16, Dc=4, channels=6, blocks=2)


# --- primitive oracles (direct summation, explicit loops) --------------------


def naive_conv(x, w, b, stride=1):
    cin, H, W = x.shape
    cout, _, kh, kw = w.shape
    ph, pw = kh // 2, kw // 2
    xp = np.pad(x, ((0, 0), (ph, ph), (pw, pw)), mode="edge").astype(np.float64)
    Ho = (H + 2 * ph - kh) // stride + 1
    Wo = (W + 2 * pw - kw) // stride + 1
    out = np.zeros((cout, Ho, Wo))
    for co in range(cout):
        for u in range(Ho):
            for v in range(Wo):
                acc = 0.0
                for ci in range(cin):
                    for i in range(kh):
                        for j in range(kw):
                            acc += w[co, ci, i, j] * xp[ci, u * stride + i, v * stride + j]
                out[co, u, v] = acc + b[co]
    return out


def test_conv_matches_naive(rng):
    for stride, hw in [(1, (5, 7)), (2, (6, 8)), (1, (1, 1)), (2, (4, 4))]:
        x = rng.normal(0, 1, (3, *hw)).astype(np.float32)
        w = rng.normal(0, 1, (4, 3, 3, 3)).astype(np.float32)
        b = rng.normal(0, 1, 4).astype(np.float32)
        got = nn.conv2d(x, w, b, stride=stride)
        ref = naive_conv(x, w, b, stride=stride)
        assert got.shape == ref.shape
        assert np.max(np.abs(got - ref)) <= 1e-5


def test_conv_1x1_matches_naive(rng):
    x = rng.normal(0, 1, (5, 3, 4)).astype(np.float32)
    w = rng.normal(0, 1, (2, 5, 1, 1)).astype(np.float32)
    b = rng.normal(0, 1, 2).astype(np.float32)
    assert np.max(np.abs(nn.conv2d(x, w, b) - naive_conv(x, w, b))) <= 1e-5


def test_conv_identity_kernel(rng):
    x = rng.normal(0, 1, (3, 6, 6)).astype(np.float32)
    w = np.zeros((3, 3, 3, 3), dtype=np.float32)
    for c in range(3):
        w[c, c, 1, 1] = 1.0
    out = nn.conv2d(x, w, np.zeros(3, dtype=np.float32))
    assert np.array_equal(out, x)


def test_residual_block_matches_naive(rng):
    x = rng.normal(0, 1, (4, 5, 5)).astype(np.float32)
    w1 = rng.normal(0, 0.5, (4, 4, 3, 3)).astype(np.float32)
    w2 = rng.normal(0, 0.5, (4, 4, 3, 3)).astype(np.float32)
    b1 = rng.normal(0, 0.1, 4).astype(np.float32)
    b2 = rng.normal(0, 0.1, 4).astype(np.float32)
    got = nn.residual_block(x, w1, b1, w2, b2)
    h = np.maximum(naive_conv(x, w1, b1), 0)
    ref = np.maximum(x + naive_conv(h.astype(np.float32), w2, b2), 0)
    assert np.max(np.abs(got - ref)) <= 1e-5


def test_pixel_shuffle_definition():
    x = np.array([1, 2, 3, 4], dtype=np.float32).reshape(4, 1, 1)
    out = nn.pixel_shuffle(x, 2)
    assert out.shape == (1, 2, 2)
    assert np.array_equal(out[0], [[1, 2], [3, 4]])


def test_pixel_shuffle_matches_indexing_oracle(rng):
    x = rng.normal(0, 1, (8, 3, 5)).astype(np.float32)
    out = nn.pixel_shuffle(x, 2)
    for c in range(2):
        for u in range(3):
            for v in range(5):
                for dy in range(2):
                    for dx in range(2):
                        assert out[c, 2 * u + dy, 2 * v + dx] == x[c * 4 + dy * 2 + dx, u, v]


def test_sigmoid_against_float64(rng):
    x = rng.normal(0, 5, 100).astype(np.float32)
    ref = 1.0 / (1.0 + np.exp(-x.astype(np.float64)))
    assert np.max(np.abs(nn.sigmoid(x) - ref)) <= 1e-5
    assert nn.sigmoid(np.float32([0.0]))[0] == 0.5


# --- encoder / decoder ---------------------------------------------------------


def test_latent_grid_shape(rng):
    w = random_weights(seed=1)
    img = rng.integers(0, 256, (32, 32, 3), dtype=np.uint8)
    assert vqvae.encode_to_indices(img, w).shape == (16, 16)


@pytest.mark.parametrize("shape", [(1, 1), (1, 5), (5, 1), (7, 9), (8, 8), (31, 33)])
def test_shape_law(rng, shape):
    w = random_weights(SMALL, seed=2)
    img = rng.integers(0, 256, (*shape, 3), dtype=np.uint8)
    idx = vqvae.encode_to_indices(img, w)
    assert idx.shape == ((shape[0] + 1) // 2, (shape[1] + 1) // 2)
    mu, s = vqvae.decode_to_params(idx, w, shape)
    assert mu.shape == (*shape, 3) and s.shape == (*shape, 3)
    assert 0 < mu.min() and mu.max() < 255
    grid = default_grid()
    assert grid.s_min <= s.min() and s.max() <= grid.s_max


def test_codebook_entry_maps_to_its_index():
    # zero encoder stacks, projection bias = codebook row j: distance 0 at j
    w = random_weights(SMALL, seed=3)
    j = 11
    for name in tensor_shapes(SMALL):
        if name.startswith("enc."):
            w.tensors[name] = np.zeros_like(w.tensors[name])
    w.tensors["enc.proj.b"] = w.tensors["codebook"][j].copy()
    idx = vqvae.encode_to_indices(
        np.zeros((8, 8, 3), dtype=np.uint8), w
    )
    assert np.all(idx == j)


def test_indices_match_exhaustive_scan(rng):
    """Oracle: per-vector loop over every codebook entry, float64 sums."""
    w = random_weights(SMALL, seed=4)
    img = rng.integers(0, 256, (10, 14, 3), dtype=np.uint8)
    idx = vqvae.encode_to_indices(img, w)

    # replay the encoder trunk
    t = w.tensors
    x = vqvae._normalize(vqvae._even_pad(img))
    h = nn.relu(nn.conv2d(x, t["enc.stem.w"], t["enc.stem.b"]))
    h = nn.relu(nn.conv2d(h, t["enc.down.w"], t["enc.down.b"], stride=2))
    for i in range(SMALL.blocks):
        h = nn.residual_block(
            h, t[f"enc.block{i}.conv1.w"], t[f"enc.block{i}.conv1.b"],
            t[f"enc.block{i}.conv2.w"], t[f"enc.block{i}.conv2.b"])
    z = nn.conv2d(h, t["enc.proj.w"], t["enc.proj.b"])
    cb = t["codebook"].astype(np.float64)
    flat = idx.ravel()
    for p in range(flat.size):
        v = z.reshape(SMALL.Dc, -1)[:, p].astype(np.float64)
        best, bd = 0, None
        for k in range(SMALL.K):
            acc = 0.0
            for c in range(SMALL.Dc):
                d = v[c] - cb[k, c]
                acc += d * d
            if bd is None or acc < bd:
                best, bd = k, acc
        assert flat[p] == best


def test_zero_weights_center_mu():
    w = random_weights(SMALL, seed=5)
    for name in w.tensors:
        if name != "codebook":
            w.tensors[name] = np.zeros_like(w.tensors[name])
    mu, s = vqvae.decode_to_params(
        np.zeros((3, 3), dtype=np.uint8), w, (6, 6)
    )
    assert np.all(mu == np.float32(127.5))
    assert np.all(s == 1.0)  # exp(clip(0, ...)) = 1


def test_constant_indices_give_periodic_interior(rng):
    """Constant latents: the interior repeats with the upsampling stride.

    Pixel-shuffle decoders are shift-equivariant at stride 2, so "spatially
    constant" holds per 2x2 phase, not per pixel.
    """
    w = random_weights(SMALL, seed=6)
    idx = np.full((6, 6), 4, dtype=np.uint8)
    mu, s = vqvae.decode_to_params(idx, w, (12, 12))
    for plane in (mu, s):
        interior = plane[2:-2, 2:-2]
        assert np.array_equal(interior[:-2, :], interior[2:, :])
        assert np.array_equal(interior[:, :-2], interior[:, 2:])


def test_decode_validates_indices(rng):
    w = random_weights(SMALL, seed=7)
    with pytest.raises(ModelError):
        vqvae.decode_to_params(np.full((3, 3), SMALL.K, np.int64), w, (6, 6))
    with pytest.raises(ModelError):
        vqvae.decode_to_params(np.zeros((2, 3), np.uint8), w, (6, 6))


def test_deterministic_inference(rng):
    w = random_weights(SMALL, seed=8)
    img = rng.integers(0, 256, (9, 9, 3), dtype=np.uint8)
    a = vqvae.encode_to_indices(img, w)
    b = vqvae.encode_to_indices(img, w)
    assert np.array_equal(a, b)
    m1, s1 = vqvae.decode_to_params(a, w, (9, 9))
    m2, s2 = vqvae.decode_to_params(a, w, (9, 9))
    assert np.array_equal(m1, m2) and np.array_equal(s1, s2)


# --- index histogram -------------------------------------------------------------


def test_histogram_absent_gives_uniform():
    w = random_weights(seed=9)  # histogram is all zeros
    q = vqvae.index_histogram_pmf(w, 12)
    assert np.all(q.P == 16)


def test_histogram_concentration_clamped():
    w = random_weights(SMALL, seed=10)
    w.histogram = np.zeros(SMALL.K, dtype=np.uint64)
    w.histogram[3] = 10_000_000
    q = vqvae.index_histogram_pmf(w, 12)
    assert int(q.P[3]) == 2047


def test_histogram_matches_quantizer(rng):
    w = random_weights(SMALL, seed=11)
    w.histogram = rng.integers(0, 1000, SMALL.K).astype(np.uint64)
    q = vqvae.index_histogram_pmf(w, 11)
    ref = quantize_pmf(w.histogram.astype(np.float64) + 1.0, 11)
    assert np.array_equal(q.P, ref.P)


# --- weights file ------------------------------------------------------------------


def test_weights_file_round_trip(tmp_path):
    w = random_weights(SMALL, seed=12)
    w.histogram[:] = np.arange(SMALL.K)
    path = tmp_path / "m.pilw"
    w.save(path)
    w2 = ModelWeights.load(path)
    assert w2.config == SMALL
    for name, t in w.tensors.items():
        assert np.array_equal(t, w2.tensors[name])
    assert np.array_equal(w.histogram, w2.histogram)
    assert w.hash8() == w2.hash8()
    assert np.array_equal(
        w.predictor_params.weights, w2.predictor_params.weights
    )


def test_weights_file_header():
    w = random_weights(SMALL, seed=13)
    blob = w.to_bytes()
    assert blob[:4] == b"PILW"
    assert blob[4] == 1


def test_weights_corruption_detected():
    w = random_weights(SMALL, seed=14)
    blob = bytearray(w.to_bytes())
    blob[100] ^= 0x40
    with pytest.raises(ModelError):
        ModelWeights.from_bytes(bytes(blob))


def test_weights_shape_validation():
    w = random_weights(SMALL, seed=15)
    bad = dict(w.tensors)
    bad["codebook"] = np.zeros((3, 3), dtype=np.float32)
    with pytest.raises(ModelError):
        ModelWeights(SMALL, bad)


def test_reference_plane_conformance(tmp_path):
    """Cross-runtime fixture exported by the trainer; skipped when absent."""
    import json
    import os

    fixture = os.path.join(os.path.dirname(__file__), "data", "trainer_reference")
    meta = os.path.join(fixture, "planes.json")
    if not os.path.exists(meta):
        pytest.skip("trainer reference planes not present")
    w = ModelWeights.load(os.path.join(fixture, "model.pilw"))
    with open(meta) as f:
        cases = json.load(f)
    for case in cases:
        idx = np.array(case["indices"], dtype=np.uint8)
        mu, s = vqvae.decode_to_params(idx, w, tuple(case["shape"]))
        ref_mu = np.array(case["mu"], dtype=np.float32)
        ref_s = np.array(case["s"], dtype=np.float32)
        assert np.allclose(mu, ref_mu, rtol=1e-5, atol=1e-4)
        assert np.allclose(s, ref_s, rtol=1e-5, atol=1e-6)
