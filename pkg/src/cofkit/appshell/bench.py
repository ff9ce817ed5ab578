"""Wall-clock timing of the pipeline stages on a synthetic image.

Numbers are informative: they depend on the host CPU, BLAS build, and the
COFKIT_THREADS setting, so the report prints the context along with the
seconds. Uniform noise is the honest worst case for the statistics stages
because every palette cluster stays populated.
"""

from __future__ import annotations

import time

import numpy as np

from cofkit._threads import thread_count
from cofkit.appshell.config import PipelineConfig
from cofkit.appshell.pipeline import build_matrix, quantize_image
from cofkit.filters import guided_cof


def run_bench(size: int = 1024, window: int = 7, k: int = 32, seed: int = 0) -> dict:
    """Time quantize / collect+normalize / filter on a size x size image."""
    cfg = PipelineConfig(k=k, window=window, seed=seed)
    rng = np.random.default_rng(seed)
    img = rng.random((size, size, 3))

    t0 = time.perf_counter()
    palette, guide = quantize_image(img, cfg)
    t1 = time.perf_counter()
    matrix = build_matrix(guide, palette, cfg)
    t2 = time.perf_counter()
    out = guided_cof(img, guide, matrix, cfg.filter_params())
    t3 = time.perf_counter()
    assert out.shape == img.shape

    return {
        "size": size,
        "pixels": size * size,
        "window": window,
        "k": k,
        "k_effective": palette.k,
        "threads": thread_count(),
        "quantize_seconds": round(t1 - t0, 3),
        "collect_seconds": round(t2 - t1, 3),
        "filter_seconds": round(t3 - t2, 3),
        "total_seconds": round(t3 - t0, 3),
    }


def format_report(report: dict) -> str:
    lines = [
        f"image: {report['size']}x{report['size']} ({report['pixels'] / 1e6:.2f} MP), "
        f"window {report['window']} ({2 * report['window'] + 1}x{2 * report['window'] + 1}), "
        f"k={report['k']} (effective {report['k_effective']}), threads={report['threads']}",
        f"quantize: {report['quantize_seconds']:.3f} s",
        f"collect:  {report['collect_seconds']:.3f} s",
        f"filter:   {report['filter_seconds']:.3f} s",
        f"total:    {report['total_seconds']:.3f} s",
    ]
    return "\n".join(lines)
