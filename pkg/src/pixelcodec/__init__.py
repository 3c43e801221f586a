"""Lossless RGB image codec.

Pipeline: a 12-parameter causal pixel predictor turns the image into a
shifted residual; a small vector-quantized autoencoder (optional) predicts
per-pixel logistic parameters for that residual; symbols are recentred so a
handful of fixed-scale logistics cover every pixel; and a table-driven rANS
coder packs the two symbol streams into a self-contained container.
"""

from .container import CodecConfig, bpd_report, compress, decompress, inspect
from .errors import CodecError
from .logistic import ScaleGrid, default_grid
from .pmf import QuantizedPmf, quantize_pmf
from .predictor import (
    PredictorParams,
    decode_parallel,
    decode_sequential,
    default_params,
    fit_params,
    forward_residual,
    receptive_field_variant,
)
from .weights import ModelConfig, ModelWeights, random_weights

__version__ = "0.1.0"

__all__ = [
    "CodecConfig",
    "CodecError",
    "ModelConfig",
    "ModelWeights",
    "PredictorParams",
    "QuantizedPmf",
    "ScaleGrid",
    "bpd_report",
    "compress",
    "decompress",
    "decode_parallel",
    "decode_sequential",
    "default_grid",
    "default_params",
    "fit_params",
    "forward_residual",
    "inspect",
    "quantize_pmf",
    "random_weights",
    "__version__",
]
