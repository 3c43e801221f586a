import numpy as np
import pytest

from pixelcodec import predictor, tables
from pixelcodec.pmf import uniform_pmf


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    """Compile the jit kernels once so timed tests measure steady state."""
    img = np.arange(2 * 3 * 3, dtype=np.uint8).reshape(2, 3, 3)
    p = predictor.default_params()
    res = predictor.forward_residual(img, p)
    predictor.decode_sequential(res, p)
    predictor.decode_parallel(res, p)
    predictor.decode_sequential_batch(res[None], p)
    predictor.decode_parallel_batch(res[None], p)
    predictor.receptive_field_variant(4).decode_sequential(
        res, predictor.receptive_field_variant(4).default_params()
    )
    enc, dec = tables.build_tables([uniform_pmf(256, 12)], 12)
    syms = np.arange(64, dtype=np.uint8)
    ds = np.zeros(64, dtype=np.uint16)
    ls = tables.interleaved_encode(syms, ds, 1, enc)
    tables.interleaved_decode(ls, 64, ds, dec)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
