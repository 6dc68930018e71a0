"""Exact Euclidean projections onto the structured feasible sets.

Boxes are clamped coordinatewise. Simplex blocks use the sort-and-threshold
rule: with u the block sorted descending and theta the largest feasible
shift (sum(u[:rho+1]) - target)/(rho+1), the projection is max(x - theta, 0).
Products project each child on its own coordinate range.
"""

from __future__ import annotations

import numpy as np

from . import kernels
from .core import Box, FeasibleSet, Product, SimplexBlock


def project(feasible_set: FeasibleSet, x) -> np.ndarray:
    """Euclidean projection of x onto the set; returns a new array."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != feasible_set.dim:
        raise ValueError(
            f"point has shape {x.shape}, feasible set covers {feasible_set.dim} coordinates"
        )
    if isinstance(feasible_set, Box):
        return kernels.box_project(x, feasible_set.lower, feasible_set.upper)
    if isinstance(feasible_set, SimplexBlock):
        out = x.copy()
        for (start, stop), target in feasible_set.blocks:
            out[start:stop] = kernels.simplex_project(
                np.ascontiguousarray(x[start:stop]), target
            )
        return out
    if isinstance(feasible_set, Product):
        parts = [
            project(child, x[start:stop]) for start, stop, child in feasible_set.offsets()
        ]
        return np.concatenate(parts)
    raise TypeError(f"unknown feasible set type {type(feasible_set).__name__}")


def contains(feasible_set: FeasibleSet, x, tol: float = 1e-12) -> bool:
    """Membership test with absolute tolerance tol on every condition."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (feasible_set.dim,):
        return False
    if isinstance(feasible_set, Box):
        return bool(
            np.all(x >= feasible_set.lower - tol) and np.all(x <= feasible_set.upper + tol)
        )
    if isinstance(feasible_set, SimplexBlock):
        for (start, stop), target in feasible_set.blocks:
            block = x[start:stop]
            if np.any(block < -tol):
                return False
            if abs(float(block.sum()) - target) > tol:
                return False
        return True
    if isinstance(feasible_set, Product):
        return all(
            contains(child, x[start:stop], tol)
            for start, stop, child in feasible_set.offsets()
        )
    raise TypeError(f"unknown feasible set type {type(feasible_set).__name__}")
