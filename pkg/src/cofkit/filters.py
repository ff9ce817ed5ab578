"""Window filters: Gaussian, bilateral, co-occurrence driven, and the
scribble-based variants built on top of them.

Every filter here is the same normalized window average with a different
weight field:

    J_p = sum_q w(p,q) I_q / sum_q w(p,q),  q in a (2r+1)^2 window

Windows truncate at image borders with no padding; the ratio form
renormalizes automatically. The co-occurrence filters take their weights
from a PMI matrix M indexed by gray levels or guidance labels, evaluated
per cluster: the window sum for label b is a separable Gaussian correlation
of the indicator of b, so one filter pass costs one pair of 1-D
correlations per present label and channel.

A zero weight sum copies the input pixel through unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import correlate1d

from ._threads import run_ordered
from .imagecore import mse, rgb_to_gray, to_levels

# tri-state scribble codes
SCRIBBLE_NONE = 0
SCRIBBLE_FG = 1
SCRIBBLE_BG = 2

DEFAULT_WINDOW = 7
DEFAULT_SIGMA_S = float(np.sqrt(2.0 * np.sqrt(15.0) + 1.0))


@dataclass(frozen=True)
class FilterParams:
    """Window geometry and bandwidths shared by all filters."""

    window: int = DEFAULT_WINDOW
    sigma_s: float = DEFAULT_SIGMA_S
    sigma_r: float | None = None  # bilateral range / affinity bandwidth
    iterations: int = 1
    mode: str = "iterative"

    def __post_init__(self):
        if self.window < 0:
            raise ValueError(f"window must be >= 0, got {self.window}")
        if not self.sigma_s > 0:
            raise ValueError(f"sigma_s must be > 0, got {self.sigma_s}")
        if self.sigma_r is not None and self.sigma_r < 0:
            raise ValueError(f"sigma_r must be >= 0, got {self.sigma_r}")
        if self.iterations < 0:
            raise ValueError(f"iterations must be >= 0, got {self.iterations}")
        if self.mode not in ("iterative", "rolling"):
            raise ValueError(f"mode must be iterative or rolling, got {self.mode!r}")


def spatial_kernel(window: int, sigma_s: float) -> np.ndarray:
    """Dense (2r+1)^2 spatial weights exp(-d^2 / 2 sigma_s^2), center 1."""
    off = np.arange(-window, window + 1)
    d2 = off[:, None] ** 2 + off[None, :] ** 2
    return np.exp(-d2 / (2.0 * sigma_s * sigma_s))


def _sep_kernel(window: int, sigma_s: float | None) -> np.ndarray:
    """1-D factor of the spatial kernel; sigma_s None means box weights."""
    if sigma_s is None:
        return np.ones(2 * window + 1)
    off = np.arange(-window, window + 1, dtype=np.float64)
    return np.exp(-(off * off) / (2.0 * sigma_s * sigma_s))


def _window_sum(x: np.ndarray, g1: np.ndarray) -> np.ndarray:
    """Separable windowed correlation, truncated at borders (zero fill)."""
    out = correlate1d(x, g1, axis=0, mode="constant", cval=0.0)
    return correlate1d(out, g1, axis=1, mode="constant", cval=0.0)


def _channels(img: np.ndarray) -> list[np.ndarray]:
    img = np.asarray(img, dtype=np.float64)
    if img.ndim == 2:
        return [img]
    if img.ndim == 3 and img.shape[2] == 3:
        return [img[:, :, i] for i in range(3)]
    raise ValueError(f"expected (H, W) or (H, W, 3) image, got {img.shape}")


def _assemble(channels: list[np.ndarray], like: np.ndarray) -> np.ndarray:
    if np.asarray(like).ndim == 2:
        return channels[0]
    return np.stack(channels, axis=2)


def gaussian_filter(img: np.ndarray, params: FilterParams) -> np.ndarray:
    """Content-blind smoothing: spatial weights only, border renormalized."""
    channels = _channels(img)
    g1 = _sep_kernel(params.window, params.sigma_s)
    den = _window_sum(np.ones_like(channels[0]), g1)
    out = [_window_sum(ch, g1) / den for ch in channels]
    return _assemble(out, img)


def _offset_slices(dy: int, dx: int):
    """(anchor, neighbor) slice pair addressing all in-bounds pairs p, p+(dy,dx)."""
    def one(d):
        return slice(max(0, -d), None if max(0, d) == 0 else -max(0, d))
    return (one(dy), one(dx)), (one(-dy), one(-dx))


def bilateral(img: np.ndarray, params: FilterParams) -> np.ndarray:
    """Spatial Gaussian times a range Gaussian on intensity distance.

    Gray images use |I_p - I_q|; color images use Euclidean RGB distance.
    """
    if params.sigma_r is None or not params.sigma_r > 0:
        raise ValueError("bilateral needs sigma_r > 0")
    channels = _channels(img)
    h, w = channels[0].shape
    inv2s = 1.0 / (2.0 * params.sigma_r * params.sigma_r)
    num = [ch.copy() for ch in channels]  # center pair: weight 1
    den = np.ones((h, w))
    r = params.window
    for dy in range(-r, r + 1):
        for dx in range(-r, r + 1):
            if (dy == 0 and dx == 0) or abs(dy) >= h or abs(dx) >= w:
                continue
            dst, src = _offset_slices(dy, dx)
            d2 = np.zeros((h - abs(dy), w - abs(dx)))
            for ch in channels:
                diff = ch[dst] - ch[src]
                d2 += diff * diff
            wmap = np.exp(
                -(dy * dy + dx * dx) / (2.0 * params.sigma_s**2)
            ) * np.exp(-d2 * inv2s)
            den[dst] += wmap
            for i, ch in enumerate(channels):
                num[i][dst] += wmap * ch[src]
    return _assemble([n / den for n in num], img)


def _cof_channels(
    channels: list[np.ndarray],
    guide: np.ndarray,
    m: np.ndarray,
    window: int,
    sigma_s: float | None,
) -> tuple[list[np.ndarray], np.ndarray]:
    """Numerators and denominator of the M-weighted window average.

    Decomposes over guidance labels: the contribution of label b to pixel p
    is M(T_p, b) times the Gaussian window sum of the label-b indicator
    (and of each channel masked to b).
    """
    guide = np.asarray(guide)
    for ch in channels:
        if ch.shape != guide.shape:
            raise ValueError(
                f"guide shape {guide.shape} does not match image {ch.shape}"
            )
    m = np.asarray(m, dtype=np.float64)
    if guide.min() < 0 or guide.max() >= m.shape[0]:
        raise ValueError(f"guide labels must lie in [0, {m.shape[0]})")
    g1 = _sep_kernel(window, sigma_s)
    present = np.unique(guide)

    def per_label(b):
        ind = (guide == b).astype(np.float64)
        return b, _window_sum(ind, g1), [_window_sum(ch * ind, g1) for ch in channels]

    num = [np.zeros(guide.shape) for _ in channels]
    den = np.zeros(guide.shape, dtype=np.float64)
    # accumulation stays in label order whatever the thread count
    for b, ind_sum, ch_sums in run_ordered(per_label, list(present)):
        coef = m[:, b][guide]
        den += coef * ind_sum
        for i, s in enumerate(ch_sums):
            num[i] += coef * s
    return num, den


def _cof_apply(
    channels: list[np.ndarray], num: list[np.ndarray], den: np.ndarray
) -> list[np.ndarray]:
    ok = den > 0
    safe = np.where(ok, den, 1.0)
    return [np.where(ok, n / safe, ch) for ch, n in zip(channels, num)]


def cof_gray(img: np.ndarray, m: np.ndarray, params: FilterParams) -> np.ndarray:
    """Gray co-occurrence filter: weights G(p,q) M(level_p, level_q)."""
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 2:
        raise ValueError(f"expected (H, W) gray image, got {img.shape}")
    m = np.asarray(m, dtype=np.float64)
    if m.shape != (256, 256):
        raise ValueError(f"gray filtering needs a 256x256 matrix, got {m.shape}")
    levels = to_levels(img)
    num, den = _cof_channels([img], levels, m, params.window, params.sigma_s)
    return _cof_apply([img], num, den)[0]


def guided_cof(
    img: np.ndarray, guide: np.ndarray, m: np.ndarray, params: FilterParams
) -> np.ndarray:
    """Co-occurrence filter steered by a label image and its k x k matrix.

    Weights w(p,q) = G(p,q) M(T_p, T_q) are shared by the channels; each
    output sample is the weighted mean of the neighbors' values.
    """
    channels = _channels(img)
    num, den = _cof_channels(channels, guide, m, params.window, params.sigma_s)
    return _assemble(_cof_apply(channels, num, den), img)


def fb_cof(
    img: np.ndarray,
    guide: np.ndarray,
    m_f: np.ndarray,
    m_b: np.ndarray,
    params: FilterParams,
    include_spatial: bool = True,
) -> np.ndarray:
    """Asymmetric smoothing from two matrices: foreground pairs pin the
    center value, background pairs pull toward the neighborhood mean.

        J_p = sum_q G (M_F I_p + M_B I_q) / sum_q G (M_F + M_B)

    computed in residual form so M_B = 0 reproduces the input exactly.
    `include_spatial` drops G for the unweighted-window variant.
    """
    channels = _channels(img)
    sigma_s = params.sigma_s if include_spatial else None
    num_b, den_b = _cof_channels(channels, guide, m_b, params.window, sigma_s)
    _, den_f = _cof_channels([], guide, m_f, params.window, sigma_s)
    den = den_f + den_b
    ok = den > 0
    safe = np.where(ok, den, 1.0)
    out = [
        np.where(ok, ch + (nb - den_b * ch) / safe, ch)
        for ch, nb in zip(channels, num_b)
    ]
    return _assemble(out, img)


def selective_gray(
    img: np.ndarray,
    guide: np.ndarray,
    m_f: np.ndarray,
    m_b: np.ndarray,
    params: FilterParams,
) -> np.ndarray:
    """Blend each pixel between its color and its gray value by how strongly
    the window votes foreground versus background:

        alpha = sum_q M_F(T_p, T_q),  beta = sum_q M_B(T_p, T_q)
        J_p = (alpha I_p + beta gray_p) / (alpha + beta)

    Plain window sums, no spatial weighting. alpha + beta = 0 keeps color.
    """
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValueError(f"expected (H, W, 3) color image, got {img.shape}")
    _, alpha = _cof_channels([], guide, m_f, params.window, None)
    _, beta = _cof_channels([], guide, m_b, params.window, None)
    gray = rgb_to_gray(img)
    total = alpha + beta
    ok = total > 0
    safe = np.where(ok, total, 1.0)
    out = [
        np.where(ok, (alpha * img[:, :, i] + beta * gray) / safe, img[:, :, i])
        for i in range(3)
    ]
    return _assemble(out, img)


def propagate_scribbles(
    scribbles: np.ndarray,
    guide: np.ndarray,
    m_t: np.ndarray,
    params: FilterParams,
    threshold: float = 0.5,
    rounds: int = 5,
) -> np.ndarray:
    """Grow a foreground mask from sparse strokes.

    The stroke indicator is filtered `rounds` times by the guided filter, so
    support spreads along high-affinity clusters; the result is cut at
    `threshold` times its maximum. Stroke pixels always stay in the mask.
    """
    scribbles = np.asarray(scribbles)
    if scribbles.shape != np.asarray(guide).shape:
        raise ValueError("scribbles and guide dimensions differ")
    fg = scribbles == SCRIBBLE_FG
    if not fg.any():
        raise ValueError("no foreground strokes to propagate")
    field = fg.astype(np.float64)
    for _ in range(rounds):
        num, den = _cof_channels([field], guide, m_t, params.window, params.sigma_s)
        field = _cof_apply([field], num, den)[0]
    peak = field.max()
    if peak == 0.0:
        return fg.copy()
    return (field >= threshold * peak) | fg


def iterate(
    img: np.ndarray,
    m: np.ndarray,
    params: FilterParams,
    guide: np.ndarray | None = None,
    rebuild=None,
) -> tuple[np.ndarray, list[float]]:
    """Run the filter `params.iterations` times; report per-round drift.

    Iterative mode keeps the starting statistics for every round. Rolling
    mode calls rebuild(current) -> (guide, M) before each round after the
    first, refreshing the statistics from the evolving image. Gray inputs
    with guide=None go through the gray filter. Returns the final image and
    the mean squared difference between successive rounds.
    """
    current = np.asarray(img, dtype=np.float64)
    if params.mode == "rolling" and params.iterations > 1 and rebuild is None:
        raise ValueError("rolling mode needs a rebuild callable")
    msd: list[float] = []
    for i in range(params.iterations):
        if params.mode == "rolling" and i > 0:
            guide, m = rebuild(current)
        if guide is None:
            nxt = cof_gray(current, m, params)
        else:
            nxt = guided_cof(current, guide, m, params)
        msd.append(mse(nxt, current))
        current = nxt
    return current, msd


def make_fixture(
    name: str, size: int = 256, noise_sigma: float = 0.0, seed: int = 0
) -> np.ndarray:
    """Deterministic synthetic gray test images.

    two-region-checkerboard: two flat regions split by a vertical edge, each
    carrying two checkerboard patches. ramp: horizontal gradient spanning
    all 256 levels at size 256. step-stripes: equal-width bands of stepped
    intensity. star-field: dark sky with small bright discs.
    """
    if size < 8:
        raise ValueError(f"size must be >= 8, got {size}")
    rng = np.random.default_rng(seed)
    if name == "two-region-checkerboard":
        img = _two_region(size)
    elif name == "ramp":
        img = np.tile(np.round(np.linspace(0.0, 255.0, size)) / 255.0, (size, 1))
    elif name == "step-stripes":
        band = np.minimum(np.arange(size) * 8 // size, 7)
        img = np.tile(0.1 + band / 7.0 * 0.8, (size, 1))
    elif name == "star-field":
        img = np.full((size, size), 0.1)
        yy, xx = np.mgrid[0:size, 0:size]
        for _ in range(max(6, size * size // 500)):
            cy, cx = rng.integers(2, size - 2, size=2)
            radius = int(rng.integers(1, 3))
            level = 0.8 + 0.2 * rng.random()
            img[(yy - cy) ** 2 + (xx - cx) ** 2 <= radius * radius] = level
    else:
        raise ValueError(f"unknown fixture {name!r}")
    if noise_sigma > 0:
        img = img + rng.normal(0.0, noise_sigma, img.shape)
    return np.clip(img, 0.0, 1.0)


# two-region geometry: background levels, patch anchors as (row, col)
# fractions, patch side as a fraction of the image side.  Checker levels
# must not be shared across the split: a level that also co-occurs with
# other levels elsewhere dilutes its pairwise association and the patch
# texture stops mixing.
_TR_LEFT_BG, _TR_RIGHT_BG = 0.35, 0.65
_TR_LEFT_CELLS, _TR_RIGHT_CELLS = (0.23, 0.47), (0.53, 0.77)
_TR_PATCHES_LEFT = ((0.10, 0.06), (0.60, 0.12))
_TR_PATCHES_RIGHT = ((0.14, 0.70), (0.64, 0.64))
_TR_PATCH_FRAC = 0.18


def _checker(h: int, w: int, cell: int, lo: float, hi: float) -> np.ndarray:
    yy, xx = np.mgrid[0:h, 0:w]
    return np.where((yy // cell + xx // cell) % 2 == 0, lo, hi)


def _two_region(size: int) -> np.ndarray:
    img = np.full((size, size), _TR_LEFT_BG)
    img[:, size // 2 :] = _TR_RIGHT_BG
    side = int(round(_TR_PATCH_FRAC * size))
    # fine texture relative to a window-7 footprint; coarse cells would put
    # most short-range pairs inside one cell and bias the statistics
    cell = max(2, size // 64)
    for anchors, levels in (
        (_TR_PATCHES_LEFT, _TR_LEFT_CELLS),
        (_TR_PATCHES_RIGHT, _TR_RIGHT_CELLS),
    ):
        for fy, fx in anchors:
            y, x = int(round(fy * size)), int(round(fx * size))
            img[y : y + side, x : x + side] = _checker(side, side, cell, *levels)
    return img


def two_region_layout(size: int) -> dict:
    """Index geometry of the two-region fixture, for measurements in tests."""
    side = int(round(_TR_PATCH_FRAC * size))
    patches = []
    for group, anchors in (("left", _TR_PATCHES_LEFT), ("right", _TR_PATCHES_RIGHT)):
        for fy, fx in anchors:
            y, x = int(round(fy * size)), int(round(fx * size))
            patches.append((group, slice(y, y + side), slice(x, x + side)))
    return {
        "split": size // 2,
        "patches": patches,
        "left_bg": _TR_LEFT_BG,
        "right_bg": _TR_RIGHT_BG,
    }
