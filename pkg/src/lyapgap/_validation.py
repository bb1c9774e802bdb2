"""Argument checks shared by the estimators."""

from __future__ import annotations

import os

import numpy as np

from .exceptions import RepresentationError
from .representation import Representation


def check_representation(rep, *, d: int | None = None, min_d: int = 1) -> Representation:
    if not isinstance(rep, Representation):
        raise TypeError(f"expected a Representation, got {type(rep).__name__}")
    if d is not None and rep.d != d:
        raise RepresentationError(f"expected dimension {d}, got {rep.d}")
    if rep.d < min_d:
        raise RepresentationError(f"expected dimension >= {min_d}, got {rep.d}")
    return rep


def check_horizon(horizon, minimum: float = 0.0) -> float:
    horizon = float(horizon)
    if not np.isfinite(horizon) or horizon < minimum:
        raise ValueError(f"horizon must be finite and >= {minimum}, got {horizon}")
    return horizon


def check_positive_int(value, name: str) -> int:
    if int(value) != value or value < 1:
        raise ValueError(f"{name} must be a positive integer, got {value!r}")
    return int(value)


def check_seed(seed) -> int:
    if seed is None:
        raise ValueError("a seed is required")
    if isinstance(seed, (bool, np.bool_)) or int(seed) != seed or seed < 0:
        raise ValueError(f"seed must be a non-negative integer, got {seed!r}")
    return int(seed)


def effective_n_jobs(n_jobs: int | None) -> int:
    """Worker count, capped by the LYAPGAP_THREADS environment variable."""
    n = 1 if n_jobs is None else int(n_jobs)
    if n < 0:
        n = os.cpu_count() or 1
    cap = os.environ.get("LYAPGAP_THREADS")
    if cap:
        try:
            n = min(n, max(1, int(cap)))
        except ValueError:
            pass
    return max(1, n)
