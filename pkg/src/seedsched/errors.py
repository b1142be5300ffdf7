"""Exception types shared across the package."""

from __future__ import annotations

__all__ = [
    "DimensionMismatch",
    "EmptyCorpusError",
    "ConfigError",
    "SnapshotError",
]


class DimensionMismatch(ValueError):
    """A vector's length disagrees with the feature-space size."""


class EmptyCorpusError(RuntimeError):
    """No selectable feature or retained input; seed the corpus first."""


class ConfigError(ValueError):
    """An experiment configuration or target description is invalid."""


class SnapshotError(RuntimeError):
    """A snapshot file is corrupt, truncated, or of an unknown version."""
