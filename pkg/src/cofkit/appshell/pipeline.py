"""The five-stage guided pipeline: quantize, collect, soften, normalize,
filter. Each stage's failures resurface with the stage name attached so a
CLI or HTTP caller can tell where a run died."""

from __future__ import annotations

import json
from contextlib import contextmanager
from dataclasses import dataclass, field

import numpy as np

from cofkit.appshell.config import PipelineConfig
from cofkit.cooc import (
    collect_hard,
    hard_to_soft,
    load_matrix,
    matrix_to_doc,
    normalize_pmi,
    soft_histogram,
)
from cofkit.filters import iterate
from cofkit.imagecore import load_image, rgb_to_lab
from cofkit.quantize import (
    Palette,
    assign_hard,
    cluster_affinity,
    default_sigma_r,
    kmeans_palette,
)


class StageError(RuntimeError):
    """A pipeline stage failed; `stage` names the stage."""

    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"{stage}: {cause}")
        self.stage = stage
        self.cause = cause


@contextmanager
def _stage(name: str):
    try:
        yield
    except StageError:
        raise
    except Exception as exc:
        raise StageError(name, exc) from exc


@dataclass
class PipelineResult:
    output: np.ndarray
    msd: list = field(default_factory=list)
    palette: Palette | None = None
    guide: np.ndarray | None = None
    matrix: np.ndarray | None = None


def quantize_image(img: np.ndarray, cfg: PipelineConfig, palette: Palette | None = None):
    """Stage 1: palette (learned or reused) plus per-pixel labels."""
    lab = rgb_to_lab(img)
    if palette is None:
        palette = kmeans_palette(lab, k=cfg.k, grid_spacing=cfg.grid_spacing, seed=cfg.seed)
    guide = assign_hard(lab, palette)
    return palette, guide


def build_matrix(
    guide: np.ndarray,
    palette: Palette,
    cfg: PipelineConfig,
    mask: np.ndarray | None = None,
) -> np.ndarray:
    """Stages 2-4 for one statistics source: collect, soften, normalize."""
    with _stage("collect"):
        counts, hist = collect_hard(guide, palette.k, cfg.sigma_s, cfg.window, mask=mask)
    with _stage("soften"):
        sigma_r = cfg.sigma_r
        if sigma_r is None:
            sigma_r = default_sigma_r(palette) if palette.k > 1 else 0.0
        if sigma_r > 0 and palette.k > 1:
            affinity = cluster_affinity(palette, sigma_r)
            counts = hard_to_soft(counts, affinity)
            hist = soft_histogram(hist, affinity)
    with _stage("normalize"):
        return normalize_pmi(counts, hist, cfg.epsilon)


def load_region_mask(path, shape) -> np.ndarray:
    """Read a mask PNG: pixels brighter than half scale are inside."""
    raster = load_image(path)
    if raster.shape[:2] != tuple(shape):
        raise ValueError(f"mask shape {raster.shape[:2]} does not match image {tuple(shape)}")
    return raster.mean(axis=2) > 0.5


def execute_pipeline(cfg: PipelineConfig, img: np.ndarray) -> PipelineResult:
    """Run the full pipeline, returning the output and its artifacts."""
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValueError(f"expected an (H, W, 3) image, got {img.shape}")

    mask = None
    if cfg.mask is not None:
        with _stage("collect"):
            mask = load_region_mask(cfg.mask, img.shape[:2])

    with _stage("quantize"):
        loaded = load_bundle(cfg.matrix_in) if cfg.matrix_in else None
        if loaded is not None:
            matrix, _, palette = loaded
            if palette is None:
                raise ValueError(f"{cfg.matrix_in}: no palette stored; cannot label pixels")
            if matrix.shape[0] != palette.k:
                raise ValueError(
                    f"{cfg.matrix_in}: matrix dim {matrix.shape[0]} != palette size {palette.k}"
                )
            palette, guide = quantize_image(img, cfg, palette=palette)
        else:
            palette, guide = quantize_image(img, cfg)
            matrix = None

    if matrix is None:
        matrix = build_matrix(guide, palette, cfg, mask=mask)

    if cfg.matrix_out is not None:
        with _stage("matrix-out"):
            save_bundle(cfg.matrix_out, matrix, palette, cfg)

    with _stage("filter"):
        rebuild = None
        if cfg.mode == "rolling":

            def rebuild(current):
                pal2, guide2 = quantize_image(current, cfg)
                return guide2, build_matrix(guide2, pal2, cfg, mask=mask)

        output, msd = iterate(img, matrix, cfg.filter_params(), guide=guide, rebuild=rebuild)

    return PipelineResult(output=output, msd=msd, palette=palette, guide=guide, matrix=matrix)


def run_pipeline(cfg: PipelineConfig, img: np.ndarray) -> np.ndarray:
    """Filter `img` end to end under `cfg`."""
    return execute_pipeline(cfg, img).output


def bundle_doc(matrix: np.ndarray, palette: Palette, cfg: PipelineConfig) -> dict:
    """Matrix dump plus the palette that indexes it, one JSON document.

    The palette rides along because a reused matrix is meaningless without
    the cluster centers that map pixels to its rows.
    """
    doc = matrix_to_doc(matrix, sigma=cfg.sigma_s, window=cfg.window, epsilon=cfg.epsilon)
    doc["palette"] = {
        "k": palette.k,
        "seed": palette.seed,
        "centers": [[float(v) for v in row] for row in palette.centers],
    }
    return doc


def save_bundle(path, matrix: np.ndarray, palette: Palette, cfg: PipelineConfig) -> None:
    with open(path, "w") as fh:
        json.dump(bundle_doc(matrix, palette, cfg), fh)
        fh.write("\n")


def load_bundle(path):
    """Inverse of save_bundle: (matrix, metadata, palette or None)."""
    matrix, meta = load_matrix(path)
    with open(path) as fh:
        doc = json.load(fh)
    stored = doc.get("palette")
    palette = None
    if stored is not None:
        palette = Palette(
            centers=np.array(stored["centers"], dtype=np.float64),
            k=int(stored["k"]),
            seed=int(stored["seed"]),
        )
    return matrix, meta, palette
