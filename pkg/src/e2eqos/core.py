"""Problem model for separable optimization under coupled inequality constraints.

A problem is a set of N agents. Agent i owns a decision vector y_i constrained
to a private convex feasible set, a private convex cost phi_i(y_i), and a
contribution g_i(y_i) to each of K global constraints. The coupled problem is

    minimize    sum_i phi_i(y_i)
    subject to  y_i in G_i for every agent,
                g_k(y) := sum_i g_{i,k}(y_i) <= 0 for k = 1..K,

and the penalized surrogate handled by the rest of the package is

    Phi(y) = sum_i phi_i(y_i) + (mu / 2N) * sum_k max(0, g_k(y))^2.

Feasible sets are described structurally (boxes, simplex blocks, products) so
that exact Euclidean projections are available.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Tuple, Union

import numpy as np


class DimensionMismatchError(ValueError):
    """A callable or vector disagrees with the declared dimensions."""


def positive_part(x):
    """Componentwise max(0, x); the subgradient used elsewhere is 0 at x = 0."""
    return np.maximum(np.asarray(x, dtype=np.float64), 0.0)


def _as_vector(x, name: str) -> np.ndarray:
    arr = np.ascontiguousarray(x, dtype=np.float64)
    if arr.ndim != 1:
        raise DimensionMismatchError(f"{name} must be a 1-D vector, got shape {arr.shape}")
    return arr


# ---------------------------------------------------------------------------
# feasible-set descriptors
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Box:
    """Axis-aligned box {x : lower <= x <= upper}, both bounds finite."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = _as_vector(self.lower, "lower")
        upper = _as_vector(self.upper, "upper")
        if lower.shape != upper.shape:
            raise DimensionMismatchError("box bounds must have equal length")
        if not (np.isfinite(lower).all() and np.isfinite(upper).all()):
            raise ValueError("box bounds must be finite (compact set)")
        if np.any(lower > upper):
            raise ValueError("box requires lower <= upper elementwise")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @property
    def dim(self) -> int:
        return self.lower.shape[0]


@dataclass(frozen=True)
class SimplexBlock:
    """One or more scaled-simplex constraints on disjoint coordinate ranges.

    ``blocks`` is a sequence of ``((start, stop), target)`` entries: the
    coordinates ``x[start:stop]`` must be nonnegative and sum to ``target``.
    Coordinates not covered by any block are unconstrained.
    """

    blocks: Tuple[Tuple[Tuple[int, int], float], ...]

    def __post_init__(self):
        norm = []
        covered = set()
        for rng, target in self.blocks:
            start, stop = int(rng[0]), int(rng[1])
            if not 0 <= start < stop:
                raise ValueError(f"bad block range ({start}, {stop})")
            if float(target) <= 0.0:
                raise ValueError("simplex target sum must be positive")
            span = set(range(start, stop))
            if covered & span:
                raise ValueError("simplex block ranges must be disjoint")
            covered |= span
            norm.append(((start, stop), float(target)))
        if not norm:
            raise ValueError("SimplexBlock needs at least one block")
        object.__setattr__(self, "blocks", tuple(norm))

    @property
    def dim(self) -> int:
        return max(stop for (_, stop), _ in self.blocks)


@dataclass(frozen=True)
class Product:
    """Cartesian product of child sets over consecutive coordinate ranges."""

    children: Tuple["FeasibleSet", ...]

    def __post_init__(self):
        if not self.children:
            raise ValueError("Product needs at least one child")
        object.__setattr__(self, "children", tuple(self.children))

    @property
    def dim(self) -> int:
        return sum(child.dim for child in self.children)

    def offsets(self):
        """Yield (start, stop, child) for each child's coordinate range."""
        start = 0
        for child in self.children:
            stop = start + child.dim
            yield start, stop, child
            start = stop


FeasibleSet = Union[Box, SimplexBlock, Product]


# ---------------------------------------------------------------------------
# agents and problems
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AgentSpec:
    """One agent: private cost, constraint contributions, and feasible set.

    Parameters
    ----------
    id : int
        Agent index in 0..N-1 (must match its position in the problem).
    dim : int
        Dimension of the agent's decision vector.
    objective, objective_grad : callable
        phi_i(y_i) -> float and its gradient -> (dim,) vector.
    constraint_contrib, constraint_jac : callable
        g_i(y_i) -> (K,) vector and its Jacobian -> (K, dim) matrix whose
        rows are the gradients of the individual contributions.
    feasible_set : FeasibleSet
        The agent's private convex set G_i.
    """

    id: int
    dim: int
    objective: Callable[[np.ndarray], float]
    objective_grad: Callable[[np.ndarray], np.ndarray]
    constraint_contrib: Callable[[np.ndarray], np.ndarray]
    constraint_jac: Callable[[np.ndarray], np.ndarray]
    feasible_set: FeasibleSet

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("agent dimension must be >= 1")
        if self.feasible_set.dim != self.dim:
            raise DimensionMismatchError(
                f"agent {self.id}: feasible set covers {self.feasible_set.dim} "
                f"coordinates but dim={self.dim}"
            )


@dataclass(frozen=True)
class ProblemSpec:
    """Full problem instance: agents, number of coupled constraints, labels."""

    agents: Tuple[AgentSpec, ...]
    n_constraints: int
    labels: Optional[Tuple[str, ...]] = None

    def __post_init__(self):
        agents = tuple(self.agents)
        if not agents:
            raise ValueError("need at least one agent")
        if self.n_constraints < 1:
            raise ValueError("need at least one global constraint")
        for pos, agent in enumerate(agents):
            if agent.id != pos:
                raise ValueError(f"agent ids must be 0..N-1 in order; got {agent.id} at {pos}")
        if self.labels is not None and len(self.labels) != self.n_constraints:
            raise DimensionMismatchError("labels length must equal n_constraints")
        object.__setattr__(self, "agents", agents)
        # fail fast: probe every callable once at a feasible point
        from .projection import project

        for agent in agents:
            probe = project(agent.feasible_set, np.zeros(agent.dim))
            grad = np.asarray(agent.objective_grad(probe))
            if grad.shape != (agent.dim,):
                raise DimensionMismatchError(
                    f"agent {agent.id}: objective gradient shape {grad.shape}, "
                    f"expected ({agent.dim},)"
                )
            contrib = np.asarray(agent.constraint_contrib(probe))
            if contrib.shape != (self.n_constraints,):
                raise DimensionMismatchError(
                    f"agent {agent.id}: constraint contribution shape {contrib.shape}, "
                    f"expected ({self.n_constraints},)"
                )
            jac = np.asarray(agent.constraint_jac(probe))
            if jac.shape != (self.n_constraints, agent.dim):
                raise DimensionMismatchError(
                    f"agent {agent.id}: constraint Jacobian shape {jac.shape}, "
                    f"expected ({self.n_constraints}, {agent.dim})"
                )

    @property
    def n_agents(self) -> int:
        return len(self.agents)


@dataclass(frozen=True)
class DecisionState:
    """Iterate of the distributed loop: decisions y, estimates e, counter t."""

    y: Tuple[np.ndarray, ...]
    e: Tuple[np.ndarray, ...]
    t: int

    def __post_init__(self):
        object.__setattr__(self, "y", tuple(np.asarray(v, dtype=np.float64) for v in self.y))
        object.__setattr__(self, "e", tuple(np.asarray(v, dtype=np.float64) for v in self.e))
        if self.t < 0:
            raise ValueError("iteration counter must be nonnegative")


def check_decision_vectors(problem: ProblemSpec, y: Sequence[np.ndarray]):
    """Validate the per-agent decision list and return it as float64 arrays."""
    if len(y) != problem.n_agents:
        raise DimensionMismatchError(
            f"expected {problem.n_agents} decision vectors, got {len(y)}"
        )
    out = []
    for agent, y_i in zip(problem.agents, y):
        arr = _as_vector(y_i, f"y[{agent.id}]")
        if arr.shape[0] != agent.dim:
            raise DimensionMismatchError(
                f"agent {agent.id}: decision has length {arr.shape[0]}, expected {agent.dim}"
            )
        out.append(arr)
    return out


def evaluate_global_constraints(problem: ProblemSpec, y: Sequence[np.ndarray]) -> np.ndarray:
    """g(y) = sum_i g_i(y_i), accumulated in agent-index order."""
    vectors = check_decision_vectors(problem, y)
    total = np.zeros(problem.n_constraints)
    for agent, y_i in zip(problem.agents, vectors):
        total += np.asarray(agent.constraint_contrib(y_i), dtype=np.float64)
    return total


def evaluate_penalized_objective(problem: ProblemSpec, y: Sequence[np.ndarray], mu: float) -> float:
    """Phi(y) = sum_i phi_i(y_i) + (mu / 2N) * ||max(0, g(y))||^2."""
    if mu < 0:
        raise ValueError("penalty parameter must be nonnegative")
    vectors = check_decision_vectors(problem, y)
    total = 0.0
    for agent, y_i in zip(problem.agents, vectors):
        total += float(agent.objective(y_i))
    hinge = positive_part(evaluate_global_constraints(problem, vectors))
    return total + (mu / (2.0 * problem.n_agents)) * float(hinge @ hinge)
