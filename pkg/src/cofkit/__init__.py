"""cofkit: edge-aware image filtering driven by color co-occurrence.

The clean import surface: image I/O and color math from imagecore, palette
fitting from quantize, pair statistics from cooc, the filters themselves
from filters, and the end-to-end pipeline from appshell.
"""

from cofkit.cooc import (
    CoocMatrix,
    brute_soft,
    collect_gray,
    collect_hard,
    hard_to_soft,
    load_matrix,
    normalize_pmi,
    save_matrix,
    soft_histogram,
)
from cofkit.filters import (
    SCRIBBLE_BG,
    SCRIBBLE_FG,
    SCRIBBLE_NONE,
    FilterParams,
    bilateral,
    cof_gray,
    fb_cof,
    gaussian_filter,
    guided_cof,
    iterate,
    make_fixture,
    propagate_scribbles,
    selective_gray,
)
from cofkit.imagecore import (
    DecodeError,
    EncodeError,
    encode_png,
    load_image,
    mse,
    rgb_to_gray,
    rgb_to_lab,
    save_image,
)
from cofkit.quantize import (
    Palette,
    assign_hard,
    cluster_affinity,
    default_sigma_r,
    kmeans_palette,
    load_palette,
    save_palette,
)

__version__ = "0.1.0"

__all__ = [
    "CoocMatrix",
    "DecodeError",
    "EncodeError",
    "FilterParams",
    "Palette",
    "SCRIBBLE_BG",
    "SCRIBBLE_FG",
    "SCRIBBLE_NONE",
    "assign_hard",
    "bilateral",
    "brute_soft",
    "cluster_affinity",
    "cof_gray",
    "collect_gray",
    "collect_hard",
    "default_sigma_r",
    "encode_png",
    "fb_cof",
    "gaussian_filter",
    "guided_cof",
    "hard_to_soft",
    "iterate",
    "kmeans_palette",
    "load_image",
    "load_matrix",
    "load_palette",
    "make_fixture",
    "mse",
    "normalize_pmi",
    "propagate_scribbles",
    "rgb_to_gray",
    "rgb_to_lab",
    "save_image",
    "save_matrix",
    "save_palette",
    "selective_gray",
    "soft_histogram",
    "__version__",
]
