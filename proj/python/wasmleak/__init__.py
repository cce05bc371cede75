"""Python access to the wasmleak pipeline and scoring functions."""

from ._core import (
    ConfigError,
    Error,
    FormatError,
    PreconditionError,
    align_free,
    config_text,
    end2end,
    naive_positional_recall,
    pearson,
    recall,
    run_experiment,
    score_discrete,
    score_numeric,
)

__all__ = [
    "ConfigError",
    "Error",
    "FormatError",
    "PreconditionError",
    "align_free",
    "config_text",
    "end2end",
    "naive_positional_recall",
    "pearson",
    "recall",
    "run_experiment",
    "score_discrete",
    "score_numeric",
]
