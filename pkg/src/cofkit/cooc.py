"""Co-occurrence collection and PMI normalization.

Statistics come from ordered pixel pairs inside a square window: each pair
(p, q) contributes exp(-d(p,q)^2 / 2 sigma^2) to C(v_p, v_q), and the self
pair p = q contributes weight 1. Accumulation is integer-exact per squared
distance and only weighted at the very end, so results are symmetric to the
bit, independent of any row-band split, and the sigma = 0 limit (a diagonal
C with C(a,a) = h(a)) holds exactly.

Values are gray levels 0-255 or palette labels 0..k-1; the quantized path
optionally smooths hard statistics with the cluster affinity K.
"""

from __future__ import annotations

import base64
import json
from dataclasses import dataclass

import numpy as np

from ._threads import run_ordered, thread_count
from .imagecore import to_levels
from .quantize import Palette, cluster_affinity

DEFAULT_EPSILON = 1e-8


@dataclass(frozen=True)
class CoocMatrix:
    """Dense symmetric co-occurrence weights plus the collection geometry."""

    entries: np.ndarray  # (dim, dim) float64, symmetric, nonnegative
    sigma: float
    window: int

    @property
    def dim(self) -> int:
        return self.entries.shape[0]


def _check_mask(mask, shape) -> np.ndarray | None:
    if mask is None:
        return None
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != shape:
        raise ValueError(f"mask shape {mask.shape} does not match image {shape}")
    return mask


def _half_offsets(window: int):
    """One offset per unordered pair direction: dy > 0, or dy = 0 and dx > 0."""
    for dy in range(window + 1):
        for dx in range(-window, window + 1):
            if dy == 0 and dx <= 0:
                continue
            yield dy, dx, dy * dy + dx * dx


def _band_counts(labels, mask, dim, window, rows):
    """Integer pair counts per squared distance, for pairs anchored in `rows`."""
    h, w = labels.shape
    r0, r1 = rows
    buckets: dict[int, np.ndarray] = {}
    for dy, dx, d2 in _half_offsets(window):
        pr1 = min(r1, h - dy)
        if pr1 <= r0:
            continue
        if dx >= 0:
            a = labels[r0:pr1, : w - dx]
            b = labels[r0 + dy : pr1 + dy, dx:]
        else:
            a = labels[r0:pr1, -dx:]
            b = labels[r0 + dy : pr1 + dy, : w + dx]
        if mask is not None:
            if dx >= 0:
                keep = mask[r0:pr1, : w - dx] & mask[r0 + dy : pr1 + dy, dx:]
            else:
                keep = mask[r0:pr1, -dx:] & mask[r0 + dy : pr1 + dy, : w + dx]
            idx = a[keep].astype(np.int64) * dim + b[keep]
        else:
            idx = a.astype(np.int64).ravel() * dim + b.ravel()
        counts = np.bincount(idx, minlength=dim * dim)
        if d2 in buckets:
            buckets[d2] += counts
        else:
            buckets[d2] = counts
    return buckets


def _collect(labels: np.ndarray, dim: int, sigma: float, window: int, mask):
    if sigma < 0:
        raise ValueError(f"sigma must be >= 0, got {sigma}")
    if window < 0:
        raise ValueError(f"window must be >= 0, got {window}")
    labels = np.ascontiguousarray(labels, dtype=np.int32)
    mask = _check_mask(mask, labels.shape)
    hist_src = labels if mask is None else labels[mask]
    hist = np.bincount(hist_src.ravel(), minlength=dim).astype(np.float64)

    c = np.zeros((dim, dim))
    if sigma > 0 and window > 0:
        h = labels.shape[0]
        # one contiguous row band per worker; integer counts make the
        # result independent of the split
        nb = min(thread_count(), h)
        edges = np.linspace(0, h, nb + 1).astype(int)
        bands = [(int(edges[i]), int(edges[i + 1])) for i in range(nb)]
        merged: dict[int, np.ndarray] = {}
        for buckets in run_ordered(
            lambda rows: _band_counts(labels, mask, dim, window, rows), bands
        ):
            for d2, counts in buckets.items():
                if d2 in merged:
                    merged[d2] += counts
                else:
                    merged[d2] = counts
        half = np.zeros(dim * dim)
        for d2 in sorted(merged):  # fixed order keeps the float sum deterministic
            half += np.exp(-d2 / (2.0 * sigma * sigma)) * merged[d2]
        half = half.reshape(dim, dim)
        c = half + half.T  # ordered pairs: elementwise commutative, exactly symmetric
    c[np.arange(dim), np.arange(dim)] += hist  # self pairs, weight 1
    return CoocMatrix(entries=c, sigma=float(sigma), window=int(window)), hist


def collect_gray(gray: np.ndarray, sigma: float, window: int, mask=None):
    """Collect 256-level statistics from a [0,1] gray image.

    Returns (CoocMatrix, histogram); only pixels inside `mask` count, and a
    pair counts only when both endpoints are inside.
    """
    gray = np.asarray(gray, dtype=np.float64)
    if gray.ndim != 2:
        raise ValueError(f"expected (H, W) gray image, got {gray.shape}")
    levels = to_levels(gray)
    if levels.min() < 0 or levels.max() > 255:
        raise ValueError("gray samples must lie in [0, 1]")
    return _collect(levels, 256, sigma, window, mask)


def collect_hard(guide: np.ndarray, k: int, sigma: float, window: int, mask=None):
    """Collect k-level statistics from a cluster-label guidance image."""
    guide = np.asarray(guide)
    if guide.ndim != 2:
        raise ValueError(f"expected (H, W) label image, got {guide.shape}")
    if guide.min() < 0 or guide.max() >= k:
        raise ValueError(f"labels must lie in [0, {k})")
    return _collect(guide, k, sigma, window, mask)


def hard_to_soft(c_hard: CoocMatrix, affinity: np.ndarray) -> CoocMatrix:
    """Smooth hard-label statistics with the cluster kernel: K C K^T."""
    k = c_hard.dim
    affinity = np.asarray(affinity, dtype=np.float64)
    if affinity.shape != (k, k):
        raise ValueError(f"affinity shape {affinity.shape} does not match dim {k}")
    s = affinity @ c_hard.entries @ affinity.T
    s = 0.5 * (s + s.T)  # re-impose exact symmetry lost to multiply order
    return CoocMatrix(entries=s, sigma=c_hard.sigma, window=c_hard.window)


def soft_histogram(hist: np.ndarray, affinity: np.ndarray) -> np.ndarray:
    """Histogram smoothed by K, rescaled so total mass stays put."""
    hist = np.asarray(hist, dtype=np.float64)
    soft = affinity @ hist
    total = soft.sum()
    if total > 0:
        soft *= hist.sum() / total
    return soft


def brute_soft(
    guide: np.ndarray, palette: Palette, sigma_r: float, sigma: float, window: int
) -> CoocMatrix:
    """Direct soft-assignment co-occurrence, O(n r^2 k^2). Test oracle.

    Treats Pr(p in cluster a) as K(a, T_p) with K the cluster affinity, and
    accumulates the outer product of those probability columns for every
    ordered pair, self pairs at weight 1. Intended for small inputs only.
    """
    guide = np.asarray(guide)
    affinity = cluster_affinity(palette, sigma_r)
    k = palette.k
    if guide.min() < 0 or guide.max() >= k:
        raise ValueError(f"labels must lie in [0, {k})")
    h, w = guide.shape
    prob = affinity[:, guide.reshape(-1)]  # (k, n): column p = Pr(p in each cluster)
    c = prob @ prob.T  # self pairs
    if sigma > 0:
        for dy, dx, d2 in _half_offsets(window):
            if dy >= h or abs(dx) >= w:
                continue
            if dx >= 0:
                a = affinity[:, guide[: h - dy, : w - dx].ravel()]
                b = affinity[:, guide[dy:, dx:].ravel()]
            else:
                a = affinity[:, guide[: h - dy, -dx:].ravel()]
                b = affinity[:, guide[dy:, : w + dx].ravel()]
            half = np.exp(-d2 / (2.0 * sigma * sigma)) * (a @ b.T)
            c += half + half.T
    c = 0.5 * (c + c.T)
    return CoocMatrix(entries=c, sigma=float(sigma), window=int(window))


def normalize_pmi(
    c: CoocMatrix, hist: np.ndarray, epsilon: float = DEFAULT_EPSILON
) -> np.ndarray:
    """Pointwise mutual information ratio M = Chat / (hhat hhat^T + epsilon).

    Chat and hhat are the mass-normalized co-occurrence matrix and histogram.
    Raises on all-zero statistics.
    """
    if epsilon < 0:
        raise ValueError(f"epsilon must be >= 0, got {epsilon}")
    entries = c.entries
    hist = np.asarray(hist, dtype=np.float64)
    if hist.shape != (c.dim,):
        raise ValueError(f"histogram shape {hist.shape} does not match dim {c.dim}")
    total = entries.sum()
    if total <= 0:
        raise ValueError("co-occurrence matrix is all zero; nothing was collected")
    c_hat = entries / total
    h_hat = hist / hist.sum()
    return c_hat / (np.outer(h_hat, h_hat) + epsilon)


def matrix_to_doc(m: np.ndarray, *, sigma=None, window=None, epsilon=None) -> dict:
    """JSON-ready form of a square float64 matrix: base64 row-major payload."""
    m = np.ascontiguousarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got {m.shape}")
    return {
        "dim": int(m.shape[0]),
        "sigma": None if sigma is None else float(sigma),
        "window": None if window is None else int(window),
        "epsilon": None if epsilon is None else float(epsilon),
        "data": base64.b64encode(m.tobytes()).decode("ascii"),
    }


def save_matrix(path, m: np.ndarray, *, sigma=None, window=None, epsilon=None) -> None:
    """Dump a square float64 matrix as JSON."""
    doc = matrix_to_doc(m, sigma=sigma, window=window, epsilon=epsilon)
    with open(path, "w") as fh:
        json.dump(doc, fh)
        fh.write("\n")


def load_matrix(path) -> tuple[np.ndarray, dict]:
    """Inverse of save_matrix: (matrix, metadata). Bitwise round trip."""
    with open(path) as fh:
        doc = json.load(fh)
    dim = int(doc["dim"])
    raw = base64.b64decode(doc["data"])
    m = np.frombuffer(raw, dtype=np.float64).reshape(dim, dim).copy()
    meta = {key: doc.get(key) for key in ("dim", "sigma", "window", "epsilon")}
    return m, meta
