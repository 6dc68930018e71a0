"""Distributed penalty-based projected-gradient loop with consensus tracking.

Per iteration, every agent i forms the update direction

    U_i = -grad phi_i(y_i) - mu * sum_k grad g_{i,k}(y_i) * max(0, e_{i,k}) + V_i

from its own constraint-average estimate e_i (not the true global values,
which no agent knows), takes the projected step

    y_i(t+1) = P_{G_i}(y_i(t) + gamma_t * U_i),

and then refreshes e_i through the consensus tracking round. V_i is optional
zero-mean noise. Two practical modifications are supported: a per-coordinate
limiter clamping selected components of gamma_t*U_i before projection, and
fictitious constraint targets (a factor tau on the budget constants) that
keep the tracked estimates positive near the boundary.

Every random draw comes from a counter-based generator keyed by
(seed, domain, agent, iteration), so traces are reproducible bit-for-bit and
independent of agent execution order.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Tuple, Union

import numpy as np

from .consensus import WeightMatrix, update_estimates, validate_weight_matrix
from .core import (
    DecisionState,
    ProblemSpec,
    check_decision_vectors,
    evaluate_global_constraints,
    evaluate_penalized_objective,
    positive_part,
)
from .projection import contains, project


class ConfigError(ValueError):
    """Invalid run configuration value."""


# ---------------------------------------------------------------------------
# step schedules
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Polynomial:
    """gamma_t = min(cap, (t+1)^(-exponent)) with exponent in (0.5, 1].

    The exponent window makes the steps square-summable but not summable,
    which is what the stochastic convergence guarantee needs.
    """

    cap: float
    exponent: float

    def __post_init__(self):
        if self.cap <= 0:
            raise ConfigError("schedule cap must be positive")
        if not 0.5 < self.exponent <= 1.0:
            raise ConfigError(
                f"polynomial exponent must lie in (0.5, 1], got {self.exponent}"
            )

    def gamma(self, t: int) -> float:
        return min(self.cap, float(t + 1) ** (-self.exponent))


@dataclass(frozen=True)
class Constant:
    """Fixed step size; only long-run neighborhood behavior, no optimality claim."""

    value: float

    def __post_init__(self):
        if self.value <= 0:
            raise ConfigError("constant step size must be positive")
        warnings.warn(
            "constant step size: iterates hover near a solution but convergence "
            "to the optimum is not guaranteed",
            UserWarning,
            stacklevel=2,
        )

    def gamma(self, t: int) -> float:
        return self.value


StepSchedule = Union[Polynomial, Constant]


# ---------------------------------------------------------------------------
# noise models
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NoNoise:
    def draw(self, gen: np.random.Generator, grad: np.ndarray) -> np.ndarray:
        return np.zeros_like(grad)


@dataclass(frozen=True)
class UniformGradientProportional:
    """V_i uniform on [-sigma*|dphi_i/dy_k|, +sigma*|dphi_i/dy_k|] per coordinate."""

    sigma: float

    def __post_init__(self):
        if self.sigma < 0:
            raise ConfigError("noise sigma must be nonnegative")

    def draw(self, gen: np.random.Generator, grad: np.ndarray) -> np.ndarray:
        return gen.uniform(-1.0, 1.0, size=grad.shape[0]) * self.sigma * np.abs(grad)


@dataclass(frozen=True)
class UniformBounded:
    """V_i uniform on a fixed box [-half_width, +half_width] (scalar or vector)."""

    half_width: Union[float, np.ndarray]

    def __post_init__(self):
        hw = np.atleast_1d(np.asarray(self.half_width, dtype=np.float64))
        if np.any(hw < 0):
            raise ConfigError("noise half_width must be nonnegative")
        object.__setattr__(self, "half_width", hw)

    def draw(self, gen: np.random.Generator, grad: np.ndarray) -> np.ndarray:
        hw = np.broadcast_to(self.half_width, grad.shape)
        return gen.uniform(-1.0, 1.0, size=grad.shape[0]) * hw


NoiseModel = Union[NoNoise, UniformGradientProportional, UniformBounded]


@dataclass(frozen=True)
class LimiterConfig:
    """Clamp masked coordinates of gamma_t*U_i to [-bound, +bound] pre-projection."""

    enabled: bool = False
    coordinate_mask: Optional[Tuple[np.ndarray, ...]] = None  # per-agent bool vectors
    bound: float = 0.01

    def __post_init__(self):
        if self.bound <= 0:
            raise ConfigError("limiter bound must be positive")
        if self.coordinate_mask is not None:
            masks = tuple(np.asarray(m, dtype=bool) for m in self.coordinate_mask)
            object.__setattr__(self, "coordinate_mask", masks)


@dataclass(frozen=True)
class RunConfig:
    mu: float
    schedule: StepSchedule
    noise: NoiseModel = field(default_factory=NoNoise)
    limiter: LimiterConfig = field(default_factory=LimiterConfig)
    fictitious_factor: float = 1.0
    iterations: int = 1000
    seed: int = 0

    def __post_init__(self):
        if self.mu <= 0:
            raise ConfigError("penalty parameter mu must be positive")
        if not 0.0 < self.fictitious_factor <= 1.0:
            raise ConfigError("fictitious_factor must lie in (0, 1]")
        if self.iterations < 0:
            raise ConfigError("iterations must be nonnegative")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ConfigError("seed must fit in 64 unsigned bits")


def apply_fictitious_budgets(budgets, tau: float) -> np.ndarray:
    """Tightened targets tau*budgets used inside the algorithm (tau in (0, 1])."""
    if not 0.0 < tau <= 1.0:
        raise ConfigError(f"fictitious factor must lie in (0, 1], got {tau}")
    return tau * np.asarray(budgets, dtype=np.float64)


# ---------------------------------------------------------------------------
# counter-based RNG streams
# ---------------------------------------------------------------------------

DOMAIN_NOISE = 0
DOMAIN_INIT = 1
DOMAIN_ORACLE = 2


class RngStreams:
    """Philox streams keyed by (seed, domain, agent, iteration).

    Each (domain, agent, t) triple gets a disjoint counter block, so the
    noise drawn by one agent at one iteration never depends on how many
    values any other stream consumed. That makes agent-parallel execution
    reproduce the sequential trace exactly.
    """

    def __init__(self, seed: int):
        self.seed = int(seed)

    def generator(self, domain: int, agent: int = 0, t: int = 0) -> np.random.Generator:
        counter = np.array([0, t, agent, domain], dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=self.seed, counter=counter))

    def noise(self, agent: int, t: int) -> np.random.Generator:
        return self.generator(DOMAIN_NOISE, agent, t)


# ---------------------------------------------------------------------------
# trace plumbing
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TraceReporters:
    """Optional per-iteration reporting callbacks.

    phi_true / g_true evaluate the objective and constraints of the
    *unmodified* problem when the algorithm itself runs on fictitious
    targets; kpis appends scenario-specific columns (e.g. realized delays).
    """

    phi_true: Optional[Callable[[Sequence[np.ndarray]], float]] = None
    g_true: Optional[Callable[[Sequence[np.ndarray]], np.ndarray]] = None
    kpis: Optional[Callable[[Sequence[np.ndarray]], np.ndarray]] = None
    kpi_labels: Tuple[str, ...] = ()


@dataclass
class IterationTrace:
    """Per-iteration time series; row r describes the iterate at t = r."""

    t: np.ndarray  # (T+1,)
    gamma: np.ndarray  # (T+1,) step size used to LEAVE iterate t (last entry repeats)
    phi_true: np.ndarray  # (T+1,)
    phi_fictitious: np.ndarray  # (T+1,)
    g: np.ndarray  # (T+1, K) true constraint values
    estimates: np.ndarray  # (T+1, N, K)
    kpis: np.ndarray  # (T+1, M)
    kpi_labels: Tuple[str, ...]

    @property
    def n_records(self) -> int:
        return self.t.shape[0]


# ---------------------------------------------------------------------------
# the algorithm
# ---------------------------------------------------------------------------

def compute_update_direction(agent, y_i, e_i, mu: float, noise_sample) -> np.ndarray:
    """U_i = -grad phi_i(y_i) - mu * sum_k grad g_{i,k}(y_i) * [e_{i,k}]_+ + V_i."""
    y_i = np.asarray(y_i, dtype=np.float64)
    e_plus = positive_part(e_i)
    grad = np.asarray(agent.objective_grad(y_i), dtype=np.float64)
    jac = np.asarray(agent.constraint_jac(y_i), dtype=np.float64)
    return -grad - mu * (e_plus @ jac) + np.asarray(noise_sample, dtype=np.float64)


def _limited(delta: np.ndarray, mask, bound: float) -> np.ndarray:
    out = delta.copy()
    out[mask] = np.clip(out[mask], -bound, bound)
    return out


def step(
    problem: ProblemSpec,
    state: DecisionState,
    w: WeightMatrix,
    cfg: RunConfig,
    rng: RngStreams,
) -> DecisionState:
    """One synchronous round; every agent works from the t-snapshot of (y, e)."""
    gamma = cfg.schedule.gamma(state.t)
    masks = cfg.limiter.coordinate_mask if cfg.limiter.enabled else None
    y_new = []
    g_old = []
    g_new = []
    for agent, y_i, e_i in zip(problem.agents, state.y, state.e):
        grad = np.asarray(agent.objective_grad(y_i), dtype=np.float64)
        noise = cfg.noise.draw(rng.noise(agent.id, state.t), grad)
        direction = compute_update_direction(agent, y_i, e_i, cfg.mu, noise)
        delta = gamma * direction
        if masks is not None and masks[agent.id].any():
            delta = _limited(delta, masks[agent.id], cfg.limiter.bound)
        y_next = project(agent.feasible_set, y_i + delta)
        y_new.append(y_next)
        g_old.append(np.asarray(agent.constraint_contrib(y_i), dtype=np.float64))
        g_new.append(np.asarray(agent.constraint_contrib(y_next), dtype=np.float64))
    e_new = update_estimates(w, state.e, g_new, g_old)
    return DecisionState(y=tuple(y_new), e=tuple(e_new), t=state.t + 1)


def run(
    problem: ProblemSpec,
    w,
    cfg: RunConfig,
    initial_y: Sequence[np.ndarray],
    reporters: Optional[TraceReporters] = None,
) -> IterationTrace:
    """Run the full loop for cfg.iterations steps and record the trace.

    initial_y is projected onto the feasible sets if needed; estimates start
    at e_i(0) = g_i(y_i(0)). The trace has iterations+1 records including the
    initial point, and is a deterministic function of (problem, w, cfg,
    initial_y).
    """
    if not isinstance(w, WeightMatrix):
        w = validate_weight_matrix(w)
    if w.n != problem.n_agents:
        raise ValueError(f"weight matrix is {w.n}x{w.n} for {problem.n_agents} agents")
    rep = reporters or TraceReporters()
    y0 = []
    for agent, y_i in zip(problem.agents, check_decision_vectors(problem, initial_y)):
        y0.append(y_i if contains(agent.feasible_set, y_i) else project(agent.feasible_set, y_i))
    e0 = tuple(
        np.asarray(agent.constraint_contrib(y_i), dtype=np.float64)
        for agent, y_i in zip(problem.agents, y0)
    )
    state = DecisionState(y=tuple(y0), e=e0, t=0)
    rng = RngStreams(cfg.seed)

    n_rec = cfg.iterations + 1
    n_kpi = len(rep.kpi_labels)
    trace = IterationTrace(
        t=np.zeros(n_rec, dtype=np.int64),
        gamma=np.zeros(n_rec),
        phi_true=np.zeros(n_rec),
        phi_fictitious=np.zeros(n_rec),
        g=np.zeros((n_rec, problem.n_constraints)),
        estimates=np.zeros((n_rec, problem.n_agents, problem.n_constraints)),
        kpis=np.zeros((n_rec, n_kpi)),
        kpi_labels=tuple(rep.kpi_labels),
    )

    def record(row: int, st: DecisionState):
        trace.t[row] = st.t
        trace.gamma[row] = cfg.schedule.gamma(st.t)
        phi_fict = evaluate_penalized_objective(problem, st.y, cfg.mu)
        trace.phi_fictitious[row] = phi_fict
        trace.phi_true[row] = rep.phi_true(st.y) if rep.phi_true is not None else phi_fict
        if rep.g_true is not None:
            trace.g[row] = np.asarray(rep.g_true(st.y), dtype=np.float64)
        else:
            trace.g[row] = evaluate_global_constraints(problem, st.y)
        trace.estimates[row] = np.vstack(st.e)
        if n_kpi:
            trace.kpis[row] = np.asarray(rep.kpis(st.y), dtype=np.float64)

    record(0, state)
    for it in range(cfg.iterations):
        state = step(problem, state, w, cfg, rng)
        record(it + 1, state)
    return trace
