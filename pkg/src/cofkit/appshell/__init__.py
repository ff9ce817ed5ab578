"""Application shell: configuration, the end-to-end pipeline, the CLI, the
benchmark, and the local HTTP service behind the scribble studio."""

from cofkit.appshell.config import ConfigError, PipelineConfig
from cofkit.appshell.pipeline import PipelineResult, StageError, run_pipeline

__all__ = [
    "ConfigError",
    "PipelineConfig",
    "PipelineResult",
    "StageError",
    "run_pipeline",
]
