"""Probability vectors over bins: validation, error vectors, distances,
weight-map ingestion, and empirical densities."""
from __future__ import annotations

import numpy as np

__all__ = [
    "SUM_TOL",
    "check_density",
    "error_vector",
    "total_variation",
    "from_weight_map",
    "empirical_density",
]

# Absolute slack allowed between a density's sum and 1.
SUM_TOL = 1e-9


def check_density(values, *, name: str = "density") -> np.ndarray:
    """Validate a probability vector and return it as a float64 array."""
    x = np.asarray(values, dtype=float)
    if x.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {x.shape}")
    if x.size == 0:
        raise ValueError(f"{name} must have at least one bin")
    if not np.isfinite(x).all():
        raise ValueError(f"{name} has non-finite entries")
    if (x < 0.0).any():
        raise ValueError(f"{name} has negative entries")
    total = float(x.sum())
    if abs(total - 1.0) > SUM_TOL:
        raise ValueError(f"{name} sums to {total!r}, expected 1 within {SUM_TOL}")
    return x


def error_vector(desired_r, current_r) -> np.ndarray:
    """Signed deficit, desired minus current, on a shared bin set.

    Both inputs may be slices of longer densities, so they are only required
    to be nonnegative and of equal length, not to sum to one.
    """
    v = np.asarray(desired_r, dtype=float)
    x = np.asarray(current_r, dtype=float)
    if v.shape != x.shape or v.ndim != 1:
        raise ValueError(f"shapes {v.shape} and {x.shape} do not match")
    if (v < 0.0).any() or (x < 0.0).any():
        raise ValueError("densities must be nonnegative")
    return v - x


def total_variation(a, b) -> float:
    """Total variation distance, half the L1 distance."""
    pa = np.asarray(a, dtype=float)
    pb = np.asarray(b, dtype=float)
    if pa.shape != pb.shape or pa.ndim != 1:
        raise ValueError(f"shapes {pa.shape} and {pb.shape} do not match")
    return 0.5 * float(np.abs(pa - pb).sum())


def from_weight_map(weights) -> np.ndarray:
    """Flatten a 2-D grid of nonnegative weights into a density, row-major."""
    w = np.asarray(weights, dtype=float)
    if w.ndim != 2:
        raise ValueError(f"weight map must be 2-D, got shape {w.shape}")
    if not np.isfinite(w).all() or (w < 0.0).any():
        raise ValueError("weights must be finite and nonnegative")
    total = w.sum()
    if total <= 0.0:
        raise ValueError("weight map needs at least one positive cell")
    return (w / total).ravel()


def empirical_density(swarm, m: int) -> np.ndarray:
    """Fraction of agents in each of ``m`` bins.

    ``swarm`` is anything with an integer ``assignments`` attribute, or the
    assignment array itself.
    """
    assignments = np.asarray(getattr(swarm, "assignments", swarm))
    if assignments.size == 0:
        raise ValueError("empirical density needs at least one agent")
    if assignments.min() < 0 or assignments.max() >= m:
        raise ValueError(f"assignments must lie in [0, {m})")
    counts = np.bincount(assignments, minlength=m)
    return counts / assignments.size
