"""Anytime probability bounds and group-fairness verification for small
probabilistic programs.

Programs are passed as source text; ``load`` reads one from disk.
"""

from pathlib import Path

from ._core import (
    ParseError,
    SolverUnavailable,
    dump_pvc,
    gaussian_cdf,
    monte_carlo,
    probability,
    ratio_bounds,
    verify,
)

__all__ = [
    "ParseError",
    "SolverUnavailable",
    "dump_pvc",
    "gaussian_cdf",
    "load",
    "monte_carlo",
    "probability",
    "ratio_bounds",
    "verify",
]


def load(path):
    """Return the program text stored at ``path``."""
    return Path(path).read_text()
