"""Command-line surface: compress, decompress, fit, inspect, bench.

Exit codes: 0 success, 2 usage, 3 malformed file, 4 corrupt data,
5 model problem, 6 bad parameters, 7 fit failure, 8 other codec error.
"""

from __future__ import annotations

import functools
import json
import sys
import time

import click
import numpy as np

from . import container, imagefiles, predictor, report
from .errors import (
    CodecError,
    ConfigError,
    CorruptStreamError,
    FitError,
    FormatError,
    ModelError,
    ParameterError,
)
from .logistic import default_grid
from .weights import ModelWeights

_EXIT_CODES = [
    (FormatError, 3),
    (CorruptStreamError, 4),
    (ModelError, 5),
    ((ParameterError, ConfigError), 6),
    (FitError, 7),
    (CodecError, 8),
]


def _codec_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except CodecError as e:
            for types, code in _EXIT_CODES:
                if isinstance(e, types):
                    click.echo(f"error: {e}", err=True)
                    sys.exit(code)
            raise

    return wrapper


def _load_input(path, width, height):
    if path.endswith(".ppm"):
        return imagefiles.read_ppm(path)
    if width is None or height is None:
        raise click.UsageError("raw input needs --width and --height")
    return imagefiles.read_raw(path, width, height)


def _load_model(path) -> ModelWeights | None:
    return ModelWeights.load(path) if path else None


@click.group()
def cli():
    """Lossless RGB image codec."""


@cli.command()
@click.argument("input_path", type=click.Path(exists=True, dir_okay=False))
@click.option("-o", "--output", required=True, type=click.Path(dir_okay=False))
@click.option("--backend", type=click.Choice(sorted(container.BACKEND_IDS)),
              default="twar-static", show_default=True)
@click.option("--model", "model_path", type=click.Path(exists=True, dir_okay=False))
@click.option("-M", "precision", default=12, show_default=True, help="mass precision exponent")
@click.option("-D", "grid_size", default=8, show_default=True, help="scale grid size")
@click.option("--lanes", default=1, show_default=True)
@click.option("--verify-tables", is_flag=True, help="exhaustively check coder tables")
@click.option("--width", type=int, help="raw input width")
@click.option("--height", type=int, help="raw input height")
@click.option("--report", "report_fmt", type=click.Choice(["json-lines"]))
@_codec_errors
def compress(input_path, output, backend, model_path, precision, grid_size,
             lanes, verify_tables, width, height, report_fmt):
    """Compress a PPM (P6) or raw RGB8 image to a container file."""
    if backend == "twar-vqvae" and not model_path:
        raise click.UsageError("--backend twar-vqvae requires --model")
    image = _load_input(input_path, width, height)
    model = _load_model(model_path)
    cfg = container.CodecConfig(
        backend=backend, M=precision, lanes=lanes,
        grid=default_grid(grid_size), verify_tables=verify_tables,
    )
    t0 = time.perf_counter()
    blob = container.compress(image, model, cfg)
    dt = time.perf_counter() - t0
    with open(output, "wb") as f:
        f.write(blob)
    stats = {
        "bpd": round(container.bpd_report(blob, image), 4),
        "bytes": len(blob),
        "mb_per_s": round(image.size / 1e6 / dt, 3),
    }
    if report_fmt == "json-lines":
        click.echo(json.dumps(stats))
    else:
        click.echo(f"{output}: {stats['bytes']} bytes, "
                   f"{stats['bpd']} bpd, {stats['mb_per_s']} MB/s")


@cli.command()
@click.argument("input_path", type=click.Path(exists=True, dir_okay=False))
@click.option("-o", "--output", required=True, type=click.Path(dir_okay=False))
@click.option("--model", "model_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--raw", is_flag=True, help="write raw RGB8 instead of PPM")
@click.option("--lanes-workers", "workers", default=1, show_default=True,
              help="threads for lane decoding")
@_codec_errors
def decompress(input_path, output, model_path, raw, workers):
    """Decompress a container file back to the original image."""
    with open(input_path, "rb") as f:
        blob = f.read()
    image = container.decompress(blob, _load_model(model_path), workers=workers)
    if raw:
        imagefiles.write_raw(output, image)
    else:
        imagefiles.write_ppm(output, image)
    click.echo(f"{output}: {image.shape[1]}x{image.shape[0]}")


@cli.command()
@click.argument("corpus_dir", type=click.Path(exists=True, file_okay=False))
@click.option("-o", "--output", required=True, type=click.Path(dir_okay=False))
@click.option("--ridge", default=1e-3, show_default=True)
@_codec_errors
def fit(corpus_dir, output, ridge):
    """Fit predictor parameters on an image corpus and write a model file."""
    images = imagefiles.load_corpus(corpus_dir)
    if not images:
        raise FitError(f"no readable images under {corpus_dir}")
    params = predictor.fit_params(images, ridge=ridge)
    from .weights import ModelConfig

    model = ModelWeights(ModelConfig(), {}, predictor_params=params)
    model.save(output)
    ent = np.zeros(4)
    npix = 0
    for im in images:
        res = predictor.forward_residual(im, params)
        npix += res.size
        for c in range(3):
            ent[c] += predictor.residual_entropy(res, c) * res[..., c].size
        ent[3] += predictor.residual_entropy(res) * res.size
    click.echo(f"fitted on {len(images)} images -> {output}")
    for label, v, n in (
        ("red", ent[0], npix // 3), ("green", ent[1], npix // 3),
        ("blue", ent[2], npix // 3), ("all", ent[3], npix),
    ):
        click.echo(f"residual entropy [{label}]: {v / n:.4f} bits/symbol")


@cli.command()
@click.argument("input_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--report", "report_fmt", type=click.Choice(["json-lines"]))
@_codec_errors
def inspect(input_path, report_fmt):
    """Print container header fields."""
    with open(input_path, "rb") as f:
        info = container.inspect(f.read())
    if report_fmt == "json-lines":
        click.echo(json.dumps(info))
    else:
        for k, v in info.items():
            click.echo(f"{k}: {v}")


@cli.command()
@click.option("-M", "precision", default=12, show_default=True)
@click.option("-D", "grid_size", default=8, show_default=True)
@click.option("--lanes", "lanes_csv", default="1,2,4,8", show_default=True,
              help="comma-separated lane counts to sweep")
@click.option("--symbols", default=1 << 20, show_default=True)
@click.option("-o", "--out", type=click.Path(dir_okay=False),
              help="write JSON lines here instead of stdout")
@click.option("--figures", type=click.Path(file_okay=False),
              help="render throughput figures into this directory")
@_codec_errors
def bench(precision, grid_size, lanes_csv, symbols, out, figures):
    """Benchmark coder, model and predictor phases; emit JSON-line rows."""
    lane_counts = tuple(int(x) for x in lanes_csv.split(","))
    rows = report.run_bench(
        M=precision, D=grid_size, lane_counts=lane_counts, n_symbols=symbols
    )
    if out:
        with open(out, "w") as f:
            report.write_rows(rows, f)
        click.echo(f"wrote {len(rows)} rows to {out}")
    else:
        report.write_rows(rows, click.get_text_stream("stdout"))
    if figures:
        for p in report.render_figures(rows, figures):
            click.echo(f"wrote {p}")


def main():
    cli(prog_name="pixelcodec")


if __name__ == "__main__":
    main()
