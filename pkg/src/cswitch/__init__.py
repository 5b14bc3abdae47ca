"""Curation and analysis pipeline for code-switched forum posts.

The package pulls bilingual posts out of raw forum dumps (JSON Lines),
runs them through a cascade of cleanup filters, and supports three
downstream analyses: topic-model comparison, informality scoring, and
author proficiency profiling.  All statistics are computed in-repo.
"""

__version__ = "0.1.0"


class PipelineError(Exception):
    """Base class for errors raised by this package."""


class ConfigError(PipelineError):
    """Invalid configuration or command-line usage (exit code 1)."""


class DataError(PipelineError):
    """Malformed or missing input data (exit code 2)."""
