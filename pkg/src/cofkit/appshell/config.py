"""Pipeline configuration: one flat schema shared by the JSON config file,
the CLI flags, and the HTTP parameter endpoint."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, fields, replace

from cofkit.filters import DEFAULT_SIGMA_S, DEFAULT_WINDOW, FilterParams


class ConfigError(ValueError):
    """A configuration value or key is invalid."""


MODES = ("iterative", "rolling")


@dataclass(frozen=True)
class PipelineConfig:
    """End-to-end pipeline settings.

    Numeric defaults follow the reference regime: 32 palette clusters from a
    stride-10 sample grid, a 15x15 window (radius 7), and sigma_s^2 =
    2*sqrt(15)+1. sigma_r None means "derive from the palette spacing".
    The three optional paths plug region masks and matrix reuse into the
    pipeline without extra subcommands.
    """

    k: int = 32
    grid_spacing: int = 10
    window: int = DEFAULT_WINDOW
    sigma_s: float = DEFAULT_SIGMA_S
    sigma_r: float | None = None
    epsilon: float = 1e-8
    iterations: int = 1
    mode: str = "iterative"
    seed: int = 42
    mask: str | None = None
    matrix_in: str | None = None
    matrix_out: str | None = None

    def __post_init__(self):
        if not isinstance(self.k, int) or not 1 <= self.k <= 256:
            raise ConfigError(f"k must be an integer in [1, 256], got {self.k!r}")
        if not isinstance(self.grid_spacing, int) or self.grid_spacing < 1:
            raise ConfigError(f"grid_spacing must be a positive integer, got {self.grid_spacing!r}")
        if not isinstance(self.window, int) or not 1 <= self.window <= 64:
            raise ConfigError(f"window must be an integer in [1, 64], got {self.window!r}")
        if not _finite_positive(self.sigma_s):
            raise ConfigError(f"sigma_s must be finite and > 0, got {self.sigma_s!r}")
        if self.sigma_r is not None and not _finite_nonnegative(self.sigma_r):
            raise ConfigError(f"sigma_r must be None or finite and >= 0, got {self.sigma_r!r}")
        if not _finite_positive(self.epsilon):
            raise ConfigError(f"epsilon must be finite and > 0, got {self.epsilon!r}")
        if not isinstance(self.iterations, int) or self.iterations < 0:
            raise ConfigError(f"iterations must be a non-negative integer, got {self.iterations!r}")
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ConfigError(f"seed must be a non-negative integer, got {self.seed!r}")
        for name in ("mask", "matrix_in", "matrix_out"):
            value = getattr(self, name)
            if value is not None and not isinstance(value, str):
                raise ConfigError(f"{name} must be a path string, got {value!r}")

    def filter_params(self) -> FilterParams:
        return FilterParams(
            window=self.window,
            sigma_s=self.sigma_s,
            iterations=self.iterations,
            mode=self.mode,
        )

    def to_dict(self) -> dict:
        return asdict(self)

    def updated(self, values: dict) -> "PipelineConfig":
        """New config with `values` applied; unknown keys rejected."""
        values = _coerced(values)
        try:
            return replace(self, **values)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc


KEYS = tuple(f.name for f in fields(PipelineConfig))


def _finite_positive(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v) and v > 0


def _finite_nonnegative(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v) and v >= 0


def _coerced(values: dict) -> dict:
    """Validate key names and normalize JSON number types.

    JSON has one number type, so integral floats are accepted for the
    integer fields rather than bounced back at the user.
    """
    out = {}
    for key, value in values.items():
        if key not in KEYS:
            raise ConfigError(f"unknown config key {key!r}")
        if key in ("k", "grid_spacing", "window", "iterations", "seed"):
            if isinstance(value, float) and value.is_integer():
                value = int(value)
        if key in ("sigma_s", "sigma_r", "epsilon") and isinstance(value, int):
            value = float(value)
        out[key] = value
    return out


def load_config(path) -> PipelineConfig:
    """Read a flat JSON config file; every key mirrors a CLI flag."""
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: config must be a JSON object")
    return PipelineConfig().updated(doc)


def build_config(config_path=None, overrides: dict | None = None) -> PipelineConfig:
    """Defaults, then the config file, then explicit overrides (CLI flags)."""
    cfg = load_config(config_path) if config_path else PipelineConfig()
    if overrides:
        cfg = cfg.updated({k: v for k, v in overrides.items() if v is not None})
    return cfg
