"""Average-consensus tracking of the global constraint values.

Each agent keeps an estimate e_i of the network-average constraint vector
g(y)/N and refreshes it by mixing neighbor estimates with a doubly stochastic
weight matrix while adding the local innovation:

    e_i(t+1) = sum_j w_ij e_j(t) + g_i(y_i(t+1)) - g_i(y_i(t)).

Double stochasticity makes the rule mean-preserving: started from
e_i(0) = g_i(y_i(0)), the average of the estimates equals the average of the
current contributions at every step, exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from . import kernels


class WeightMatrixError(ValueError):
    """Base class for weight-matrix validation failures."""


class NegativeEntryError(WeightMatrixError):
    def __init__(self, row: int, col: int, value: float):
        self.row, self.col, self.value = row, col, value
        super().__init__(f"negative weight w[{row},{col}] = {value}")


class NotDoublyStochasticError(WeightMatrixError):
    def __init__(self, axis: str, index: int, residual: float):
        self.axis, self.index, self.residual = axis, index, residual
        super().__init__(f"{axis} {index} sums to 1 {residual:+.3e}")


class NotStronglyConnectedError(WeightMatrixError):
    def __init__(self, source: int, target: int):
        self.source, self.target = source, target
        super().__init__(f"no directed path from agent {source} to agent {target}")


@dataclass(frozen=True)
class WeightMatrix:
    """Validated doubly stochastic mixing matrix with connectivity metadata."""

    matrix: np.ndarray
    sigma2: float  # second-largest singular value: consensus contraction rate
    neighbors: Tuple[Tuple[int, ...], ...]  # per-agent in-neighborhoods (w[i,j] > 0)

    @property
    def n(self) -> int:
        return self.matrix.shape[0]


def _reachable_from_zero(adj: np.ndarray) -> np.ndarray:
    n = adj.shape[0]
    seen = np.zeros(n, dtype=bool)
    stack = [0]
    seen[0] = True
    while stack:
        i = stack.pop()
        for j in range(n):
            if adj[i, j] and not seen[j]:
                seen[j] = True
                stack.append(j)
    return seen


def validate_weight_matrix(matrix, tol: float = 1e-12) -> WeightMatrix:
    """Check nonnegativity, row/column sums, and strong connectivity.

    Raises NegativeEntryError, NotDoublyStochasticError, or
    NotStronglyConnectedError with the offending indices; returns a
    WeightMatrix carrying the contraction rate sigma2 and neighbor lists.
    """
    w = np.ascontiguousarray(matrix, dtype=np.float64)
    if w.ndim != 2 or w.shape[0] != w.shape[1]:
        raise WeightMatrixError(f"weight matrix must be square, got shape {w.shape}")
    n = w.shape[0]
    for i in range(n):
        for j in range(n):
            if w[i, j] < 0.0:
                raise NegativeEntryError(i, j, float(w[i, j]))
    for i in range(n):
        res = float(w[i].sum() - 1.0)
        if abs(res) > tol:
            raise NotDoublyStochasticError("row", i, res)
    for j in range(n):
        res = float(w[:, j].sum() - 1.0)
        if abs(res) > tol:
            raise NotDoublyStochasticError("column", j, res)
    adj = w > 0.0
    forward = _reachable_from_zero(adj)
    if not forward.all():
        raise NotStronglyConnectedError(0, int(np.argmin(forward)))
    backward = _reachable_from_zero(adj.T)
    if not backward.all():
        raise NotStronglyConnectedError(int(np.argmin(backward)), 0)
    svals = np.linalg.svd(w, compute_uv=False)
    sigma2 = float(svals[1]) if n > 1 else 0.0
    neighbors = tuple(tuple(int(j) for j in np.nonzero(adj[i])[0]) for i in range(n))
    return WeightMatrix(matrix=w, sigma2=sigma2, neighbors=neighbors)


def _stack(vectors, n: int, name: str) -> np.ndarray:
    if len(vectors) != n:
        raise ValueError(f"{name} must have {n} entries, got {len(vectors)}")
    rows = [np.atleast_1d(np.asarray(v, dtype=np.float64)) for v in vectors]
    k = rows[0].shape[0]
    for idx, row in enumerate(rows):
        if row.shape != (k,):
            raise ValueError(f"{name}[{idx}] has shape {row.shape}, expected ({k},)")
    return np.ascontiguousarray(np.vstack(rows))


def update_estimates(w, e_prev, g_new, g_old):
    """One synchronous tracking round; all agents read the same e_prev snapshot.

    Parameters
    ----------
    w : WeightMatrix or array
        Mixing weights (validated here if a raw array is given).
    e_prev, g_new, g_old : sequences of K-vectors, length N
        Current estimates and the constraint contributions at the new and
        previous decisions.

    Returns
    -------
    list of K-vectors with e_i(t+1) = sum_j w_ij e_j(t) + g_new_i - g_old_i.
    """
    if not isinstance(w, WeightMatrix):
        w = validate_weight_matrix(w)
    e = _stack(e_prev, w.n, "e_prev")
    gn = _stack(g_new, w.n, "g_new")
    go = _stack(g_old, w.n, "g_old")
    if gn.shape != e.shape or go.shape != e.shape:
        raise ValueError(
            f"shape mismatch: e {e.shape}, g_new {gn.shape}, g_old {go.shape}"
        )
    out = kernels.mix_estimates(w.matrix, e, gn, go)
    return [out[i].copy() for i in range(w.n)]
