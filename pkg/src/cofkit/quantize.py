"""Palette construction and soft cluster affinities.

The guidance image for quantized filtering comes from k-means over Lab
colors, subsampled on a regular pixel grid. Cluster centers double as the
support points for the soft-assignment kernel K, which turns hard label
statistics into smooth inter-cluster affinities.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass

import numpy as np

_SHIFT_TOL = 1e-4
_MAX_ITERS = 50


@dataclass(frozen=True)
class Palette:
    """k cluster centers in Lab space, plus the seed that produced them."""

    centers: np.ndarray  # (k, 3) float64
    k: int
    seed: int

    def __post_init__(self):
        centers = np.ascontiguousarray(self.centers, dtype=np.float64)
        if centers.ndim != 2 or centers.shape[1] != 3:
            raise ValueError(f"centers must be (k, 3), got {centers.shape}")
        if not (1 <= self.k <= 256) or centers.shape[0] != self.k:
            raise ValueError(f"k must be in [1, 256] and match centers, got {self.k}")
        if not np.isfinite(centers).all():
            raise ValueError("centers must be finite")
        object.__setattr__(self, "centers", centers)


def _grid_samples(lab: np.ndarray, grid_spacing: int) -> np.ndarray:
    return np.ascontiguousarray(
        lab[::grid_spacing, ::grid_spacing].reshape(-1, 3), dtype=np.float64
    )


def _nearest(samples: np.ndarray, centers: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-sample nearest center: (labels, squared distances). Ties -> lowest index."""
    d2 = ((samples[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    labels = np.argmin(d2, axis=1)
    return labels, d2[np.arange(len(samples)), labels]

def _plusplus_init(samples: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """k-means++ seeding: D^2-weighted draws from the sample set."""
    centers = np.empty((k, 3))
    centers[0] = samples[rng.integers(len(samples))]
    d2 = ((samples - centers[0]) ** 2).sum(axis=1)
    for j in range(1, k):
        # distinct-sample precondition guarantees some positive distance remains
        centers[j] = samples[rng.choice(len(samples), p=d2 / d2.sum())]
        d2 = np.minimum(d2, ((samples - centers[j]) ** 2).sum(axis=1))
    return centers


def _lloyd(samples: np.ndarray, centers: np.ndarray) -> tuple[np.ndarray, list[float]]:
    """Lloyd iterations with farthest-sample reseeding of empty clusters.

    Returns converged centers and the per-iteration objective (sum of squared
    distances after each assignment step), which is non-increasing.
    """
    centers = centers.copy()
    k = len(centers)
    objective: list[float] = []
    for _ in range(_MAX_ITERS):
        labels, d2 = _nearest(samples, centers)
        objective.append(float(d2.sum()))
        new_centers = centers.copy()
        counts = np.bincount(labels, minlength=k)
        sums = np.zeros((k, 3))
        np.add.at(sums, labels, samples)
        occupied = counts > 0
        new_centers[occupied] = sums[occupied] / counts[occupied, None]
        if not occupied.all():
            # moving an empty center onto a sample leaves the current
            # assignment cost unchanged, so the objective stays monotone
            d2_pool = d2.copy()
            for j in np.flatnonzero(~occupied):
                far = int(np.argmax(d2_pool))
                new_centers[j] = samples[far]
                d2_pool[far] = -1.0
        shift = np.sqrt(((new_centers - centers) ** 2).sum(axis=1)).max()
        centers = new_centers
        if shift < _SHIFT_TOL:
            break
    return centers, objective


def kmeans_palette(
    lab: np.ndarray, k: int = 32, grid_spacing: int = 10, seed: int = 42
) -> Palette:
    """Cluster grid-subsampled Lab pixels into a k-color palette.

    Initialization is k-means++ driven by `seed`; Lloyd iterations stop when
    the largest center shift drops below 1e-4 Lab units or after 50 rounds.
    If the grid holds fewer distinct colors than k, k is reduced to that
    count and a warning reports the effective value.
    """
    lab = np.asarray(lab, dtype=np.float64)
    if lab.ndim != 3 or lab.shape[2] != 3 or lab.size == 0:
        raise ValueError(f"expected nonempty (H, W, 3) Lab image, got {lab.shape}")
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if grid_spacing < 1:
        raise ValueError(f"grid_spacing must be >= 1, got {grid_spacing}")
    samples = _grid_samples(lab, grid_spacing)
    distinct = np.unique(samples, axis=0)
    if len(distinct) < k:
        warnings.warn(
            f"only {len(distinct)} distinct grid samples; reducing k from {k}",
            stacklevel=2,
        )
        k = len(distinct)
    rng = np.random.default_rng(seed)
    if k == len(distinct):
        centers = distinct.copy()  # exact cover, no search needed
    else:
        centers, _ = _lloyd(samples, _plusplus_init(samples, k, rng))
    centers = np.unique(centers, axis=0)
    if len(centers) < k:
        warnings.warn(
            f"clusters merged during refinement; effective k = {len(centers)}",
            stacklevel=2,
        )
        k = len(centers)
    return Palette(centers=centers, k=k, seed=seed)


def assign_hard(lab: np.ndarray, palette: Palette) -> np.ndarray:
    """Label each pixel with its nearest palette center (ties -> lowest index)."""
    lab = np.asarray(lab, dtype=np.float64)
    if lab.ndim != 3 or lab.shape[2] != 3:
        raise ValueError(f"expected (H, W, 3) Lab image, got {lab.shape}")
    h, w = lab.shape[:2]
    flat = lab.reshape(-1, 3)
    labels = np.empty(h * w, dtype=np.int32)
    step = max(1, 4_000_000 // palette.k)
    for start in range(0, h * w, step):
        chunk = flat[start : start + step]
        d2 = ((chunk[:, None, :] - palette.centers[None, :, :]) ** 2).sum(axis=2)
        labels[start : start + step] = np.argmin(d2, axis=1)
    return labels.reshape(h, w)


def cluster_affinity(palette: Palette, sigma_r: float) -> np.ndarray:
    """Row-stochastic kernel K(a,b) = exp(-|c_a - c_b|^2 / 2 sigma_r^2) / Z_a.

    sigma_r = 0 is the hard-assignment limit and yields the identity.
    """
    if sigma_r < 0:
        raise ValueError(f"sigma_r must be >= 0, got {sigma_r}")
    if sigma_r == 0:
        return np.eye(palette.k)
    diff = palette.centers[:, None, :] - palette.centers[None, :, :]
    kernel = np.exp(-(diff * diff).sum(axis=2) / (2.0 * sigma_r * sigma_r))
    return kernel / kernel.sum(axis=1, keepdims=True)


def default_sigma_r(palette: Palette) -> float:
    """Mean distance from each center to its nearest other center."""
    if palette.k < 2:
        raise ValueError("default_sigma_r needs at least 2 centers")
    diff = palette.centers[:, None, :] - palette.centers[None, :, :]
    d = np.sqrt((diff * diff).sum(axis=2))
    np.fill_diagonal(d, np.inf)
    return float(d.min(axis=1).mean())


def save_palette(palette: Palette, path) -> None:
    """Write a palette as JSON for reuse across related frames."""
    doc = {
        "k": palette.k,
        "seed": palette.seed,
        "centers": [[float(v) for v in row] for row in palette.centers],
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def load_palette(path) -> Palette:
    with open(path) as fh:
        doc = json.load(fh)
    return Palette(
        centers=np.array(doc["centers"], dtype=np.float64),
        k=int(doc["k"]),
        seed=int(doc["seed"]),
    )
