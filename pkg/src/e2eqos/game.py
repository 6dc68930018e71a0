"""State-based game view of the penalized problem.

The shared state is x = (y, e): all decisions plus all tracking estimates.
An agent's action is a feasible change to its own decision plus estimate
amounts forwarded to neighbors. The state transition applies the decision
changes, adds each agent's own constraint innovation, and settles the
transfers:

    ybar_i = y_i + yhat_i
    ebar_i = e_i + g_i(ybar_i) - g_i(y_i) + sum_{j in N_i} (ehat_{j->i} - ehat_{i->j}).

Nodal cost J_i = phi_i(ybar_i) + (mu/2) * sum_{j in N_i} ||[ebar_j]_+||^2 and
the potential Phi_mu = sum_i phi_i(ybar_i) + (mu/2) * sum_i ||[ebar_i]_+||^2
differ by terms an agent cannot touch, so unilateral deviations change both
equally; minimizers of the penalized problem paired with averaged estimates
e_i = g(y*)/N are stationary Nash points, which `verify_stationary_nash`
probes numerically.

Neighborhoods come from the mixing matrix (w_ij > 0) and must contain the
agent itself for the nodal cost to see the agent's own estimate.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Mapping, Optional, Sequence, Tuple

import numpy as np

from .consensus import WeightMatrix, validate_weight_matrix
from .core import ProblemSpec, positive_part
from .projection import contains, project


class InadmissibleActionError(ValueError):
    def __init__(self, agent: int, message: str):
        self.agent = agent
        super().__init__(f"agent {agent}: {message}")


@dataclass(frozen=True)
class GameState:
    y: Tuple[np.ndarray, ...]
    e: Tuple[np.ndarray, ...]

    def __post_init__(self):
        object.__setattr__(self, "y", tuple(np.asarray(v, dtype=np.float64) for v in self.y))
        object.__setattr__(self, "e", tuple(np.asarray(v, dtype=np.float64) for v in self.e))


@dataclass(frozen=True)
class AgentAction:
    """Decision change plus estimates forwarded to (strict or self) neighbors."""

    y_delta: np.ndarray
    e_forward: Mapping[int, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "y_delta", np.asarray(self.y_delta, dtype=np.float64))
        object.__setattr__(
            self,
            "e_forward",
            {int(j): np.asarray(v, dtype=np.float64) for j, v in dict(self.e_forward).items()},
        )


def null_actions(problem: ProblemSpec) -> Tuple[AgentAction, ...]:
    return tuple(AgentAction(np.zeros(agent.dim)) for agent in problem.agents)


def _neighbor_sets(w) -> Tuple[Tuple[int, ...], ...]:
    if isinstance(w, WeightMatrix):
        return w.neighbors
    return validate_weight_matrix(w).neighbors


def transition(
    problem: ProblemSpec,
    state: GameState,
    actions: Sequence[AgentAction],
    neighbors: Tuple[Tuple[int, ...], ...],
) -> GameState:
    """Apply one action profile; raises InadmissibleActionError when violated."""
    n = problem.n_agents
    if len(actions) != n:
        raise ValueError(f"expected {n} actions, got {len(actions)}")
    y_bar = []
    for agent, y_i, act in zip(problem.agents, state.y, actions):
        if act.y_delta.shape != (agent.dim,):
            raise InadmissibleActionError(agent.id, "decision change has wrong dimension")
        candidate = y_i + act.y_delta
        if not contains(agent.feasible_set, candidate, tol=1e-9):
            raise InadmissibleActionError(agent.id, "moved decision leaves the feasible set")
        for j in act.e_forward:
            if j not in neighbors[agent.id]:
                raise InadmissibleActionError(agent.id, f"cannot forward estimates to non-neighbor {j}")
        y_bar.append(candidate)
    e_bar = []
    for agent, y_i, yb_i, e_i in zip(problem.agents, state.y, y_bar, state.e):
        g_new = np.asarray(agent.constraint_contrib(yb_i), dtype=np.float64)
        g_old = np.asarray(agent.constraint_contrib(y_i), dtype=np.float64)
        acc = e_i + g_new - g_old
        for j, v in actions[agent.id].e_forward.items():
            acc = acc - v
        for j in range(n):
            incoming = actions[j].e_forward.get(agent.id)
            if incoming is not None:
                acc = acc + incoming
        e_bar.append(acc)
    return GameState(y=tuple(y_bar), e=tuple(e_bar))


def nodal_cost(
    problem: ProblemSpec,
    state: GameState,
    actions: Sequence[AgentAction],
    agent_i: int,
    mu_game: float,
    neighbors: Tuple[Tuple[int, ...], ...],
) -> float:
    """J_i after the profile: own cost plus penalty on neighborhood estimates."""
    new = transition(problem, state, actions, neighbors)
    agent = problem.agents[agent_i]
    cost = float(agent.objective(new.y[agent_i]))
    for j in neighbors[agent_i]:
        hinge = positive_part(new.e[j])
        cost += 0.5 * mu_game * float(hinge @ hinge)
    return cost


def potential(
    problem: ProblemSpec,
    state: GameState,
    actions: Sequence[AgentAction],
    mu_game: float,
    neighbors: Tuple[Tuple[int, ...], ...],
) -> float:
    """Phi_mu after the profile; at consensus e_i = g(y)/N it equals the
    penalized objective with the same mu."""
    new = transition(problem, state, actions, neighbors)
    total = sum(float(a.objective(y_i)) for a, y_i in zip(problem.agents, new.y))
    for e_i in new.e:
        hinge = positive_part(e_i)
        total += 0.5 * mu_game * float(hinge @ hinge)
    return total


@dataclass(frozen=True)
class AgentProbeResult:
    agent: int
    worst_improvement: float  # max over probes of J_i(null) - J_i(probe)
    violations: int


@dataclass(frozen=True)
class NashReport:
    per_agent: Tuple[AgentProbeResult, ...]
    n_probes: int
    radius: float
    epsilon: float
    passed: bool

    def as_dict(self) -> dict:
        return {
            "passed": self.passed,
            "n_probes": self.n_probes,
            "radius": self.radius,
            "epsilon": self.epsilon,
            "per_agent": [
                {
                    "agent": r.agent,
                    "worst_improvement": r.worst_improvement,
                    "violations": r.violations,
                }
                for r in self.per_agent
            ],
        }


def stationary_state(problem: ProblemSpec, y_star) -> GameState:
    """The state induced by a decision profile: every e_i set to g(y*)/N."""
    y = [np.asarray(v, dtype=np.float64) for v in y_star]
    g_avg = np.zeros(problem.n_constraints)
    for agent, y_i in zip(problem.agents, y):
        g_avg += np.asarray(agent.constraint_contrib(y_i), dtype=np.float64)
    g_avg /= problem.n_agents
    return GameState(y=tuple(y), e=tuple(g_avg.copy() for _ in range(problem.n_agents)))


def verify_stationary_nash(
    y_star,
    problem: ProblemSpec,
    w,
    mu_game: float,
    epsilon: float = 1e-6,
    n_probes: int = 1000,
    rng: Optional[np.random.Generator] = None,
    radius: float = 1e-3,
    transfer_cap: Optional[float] = None,
) -> NashReport:
    """Probe for profitable unilateral deviations at x* = (y*, g(y*)/N).

    Each probe moves one agent: a feasible decision change inside a ball of
    the given radius (projected back onto the agent's set) plus random
    estimate transfers to strict neighbors bounded by transfer_cap (defaults
    to the radius). All other agents play null. The report lists, per agent,
    the largest observed cost improvement and how many probes beat epsilon.
    """
    neighbors = _neighbor_sets(w)
    gen = rng if rng is not None else np.random.default_rng(0)
    cap = radius if transfer_cap is None else transfer_cap
    state = stationary_state(problem, y_star)
    null = null_actions(problem)
    results = []
    for agent in problem.agents:
        i = agent.id
        base = nodal_cost(problem, state, null, i, mu_game, neighbors)
        worst = 0.0
        violations = 0
        others = [j for j in neighbors[i] if j != i]
        for _ in range(n_probes):
            shift = gen.uniform(-radius, radius, size=agent.dim)
            y_delta = project(agent.feasible_set, state.y[i] + shift) - state.y[i]
            forward = {
                j: gen.uniform(-cap, cap, size=problem.n_constraints) for j in others
            }
            probe = list(null)
            probe[i] = AgentAction(y_delta=y_delta, e_forward=forward)
            improvement = base - nodal_cost(problem, state, probe, i, mu_game, neighbors)
            if improvement > worst:
                worst = improvement
            if improvement > epsilon:
                violations += 1
        results.append(AgentProbeResult(agent=i, worst_improvement=worst, violations=violations))
    passed = all(r.violations == 0 for r in results)
    return NashReport(
        per_agent=tuple(results),
        n_probes=n_probes,
        radius=radius,
        epsilon=epsilon,
        passed=passed,
    )
