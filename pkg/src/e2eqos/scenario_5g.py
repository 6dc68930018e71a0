"""End-to-end delay budget negotiation between a core network and access networks.

One core network (CN) reserves per-class bandwidths; each access network (AN)
splits its per-class downstream flow across its links and reserves per-link
bandwidth. Link delay is a dimensionless congestion ratio raised to a power,

    d(f, b) = upsilon * (f / b)^a,

reservation cost is kappa * b^k, and carried-traffic delay cost is
beta * f * d. The coupled constraints say that each (AN i, class s) pair's
average end-to-end delay (AN leg plus CN leg) must not exceed the class
budget D_s:

    g_{i,s}(y) = sum_l r_{l,s} d_l(f_l, b_l) - D_s + d^c_s(F_s, b_s) <= 0.

Agent order is (CN, AN 1, AN 2); constraint order is
((i=1,s=1), (1,2), (2,1), (2,2)). The -D_s constant lives in the AN
contribution so the CN's contribution is identical across the constraints
sharing a class.

AN decision layout: (r_11, r_21, r_12, r_22, b_1, b_2) - routing fractions
class-major, then link bandwidths. CN decision layout: (b_1, b_2).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from . import kernels
from .core import (
    AgentSpec,
    Box,
    Product,
    ProblemSpec,
    SimplexBlock,
    evaluate_global_constraints,
    evaluate_penalized_objective,
)
from .optimizer import TraceReporters


def _arr(x) -> np.ndarray:
    return np.ascontiguousarray(x, dtype=np.float64)


@dataclass(frozen=True)
class FiveGParams:
    """Scenario parameters; defaults give the bundled two-AN, two-class case.

    bandwidth_cap is the compactness bound expressed as a multiple of the
    total flow the resource carries: each CN class bandwidth lives in
    [b_min, bandwidth_cap * F_total] and each AN i link bandwidth in
    [b_min, bandwidth_cap * F_i].
    """

    upsilon: Tuple[float, ...] = (1.0, 0.8)
    kappa_an: Tuple[Tuple[float, ...], ...] = ((4.0, 5.0), (7.0, 9.0))
    kappa_cn: Tuple[float, ...] = (4.0, 6.0)
    a: float = 2.5
    k: float = 1.1
    beta_an: Tuple[float, ...] = (40.0, 10.0)
    beta_cn: Tuple[float, ...] = (40.0, 10.0)
    flows: Tuple[Tuple[float, ...], ...] = ((40.0, 20.0), (50.0, 30.0))
    budgets: Tuple[float, ...] = (0.7, 0.5)
    bandwidth_cap: float = 4.0
    b_min: float = 1e-3

    def __post_init__(self):
        object.__setattr__(self, "upsilon", _arr(self.upsilon))
        object.__setattr__(self, "kappa_an", _arr(self.kappa_an))
        object.__setattr__(self, "kappa_cn", _arr(self.kappa_cn))
        object.__setattr__(self, "beta_an", _arr(self.beta_an))
        object.__setattr__(self, "beta_cn", _arr(self.beta_cn))
        object.__setattr__(self, "flows", _arr(self.flows))
        object.__setattr__(self, "budgets", _arr(self.budgets))
        if self.flows.ndim != 2:
            raise ValueError("flows must be a matrix (one row per AN, one column per class)")
        if self.kappa_an.shape != (self.n_an, self.n_links):
            raise ValueError("kappa_an must have one row per AN, one column per link")
        if self.kappa_cn.shape != (self.n_classes,) or self.beta_cn.shape != (self.n_classes,):
            raise ValueError("kappa_cn/beta_cn must have one entry per class")
        if self.beta_an.shape != (self.n_classes,):
            raise ValueError("beta_an must have one entry per class")
        if self.budgets.shape != (self.n_classes,):
            raise ValueError("budgets must have one entry per class")
        for name in ("upsilon", "kappa_an", "kappa_cn", "beta_an", "beta_cn", "flows", "budgets"):
            if np.any(getattr(self, name) <= 0):
                raise ValueError(f"{name} must be strictly positive")
        if self.a < 1 or self.k < 1:
            raise ValueError("exponents a and k must be >= 1")
        if self.bandwidth_cap <= 1:
            raise ValueError("bandwidth_cap must exceed the carried flow (factor > 1)")
        if not 0 < self.b_min < 1:
            raise ValueError("b_min must lie in (0, 1)")

    @property
    def n_an(self) -> int:
        return np.asarray(self.flows).shape[0]

    @property
    def n_classes(self) -> int:
        return np.asarray(self.flows).shape[1]

    @property
    def n_links(self) -> int:
        return np.asarray(self.upsilon).shape[0]

    @property
    def cn_flows(self) -> np.ndarray:
        """Per-class totals arriving at the CN (column sums of flows)."""
        return np.asarray(self.flows).sum(axis=0)

    @property
    def total_flow(self) -> float:
        return float(np.asarray(self.flows).sum())

    @property
    def an_totals(self) -> np.ndarray:
        return np.asarray(self.flows).sum(axis=1)


def link_delay(f: float, b: float, upsilon: float, a: float) -> float:
    """d = upsilon * (f/b)^a; the CN variant uses upsilon = 1."""
    if b <= 0:
        raise ValueError("bandwidth must be positive")
    if f < 0:
        raise ValueError("flow must be nonnegative")
    return upsilon * (f / b) ** a


def cn_cost(params: FiveGParams, b) -> float:
    return kernels.cn_cost(_arr(b), params.cn_flows, params.kappa_cn, params.beta_cn,
                           params.a, params.k)


def cn_cost_grad(params: FiveGParams, b) -> np.ndarray:
    return kernels.cn_cost_grad(_arr(b), params.cn_flows, params.kappa_cn, params.beta_cn,
                                params.a, params.k)


def an_cost(params: FiveGParams, an_index: int, y) -> float:
    return kernels.an_cost(_arr(y), params.flows[an_index], params.upsilon,
                           params.kappa_an[an_index], params.beta_an, params.a, params.k)


def an_cost_grad(params: FiveGParams, an_index: int, y) -> np.ndarray:
    return kernels.an_cost_grad(_arr(y), params.flows[an_index], params.upsilon,
                                params.kappa_an[an_index], params.beta_an, params.a, params.k)


def _cn_agent(params: FiveGParams) -> AgentSpec:
    n_an, s = params.n_an, params.n_classes
    flows = params.cn_flows
    kappa, beta = params.kappa_cn, params.beta_cn
    a, k = params.a, params.k
    lower = np.full(s, params.b_min)
    upper = params.bandwidth_cap * params.total_flow * np.ones(s)
    return AgentSpec(
        id=0,
        dim=s,
        objective=lambda b: kernels.cn_cost(b, flows, kappa, beta, a, k),
        objective_grad=lambda b: kernels.cn_cost_grad(b, flows, kappa, beta, a, k),
        constraint_contrib=lambda b: np.tile(kernels.cn_delays(b, flows, a), n_an),
        constraint_jac=lambda b: np.vstack([kernels.cn_delays_jac(b, flows, a)] * n_an),
        feasible_set=Box(lower, upper),
    )


def _an_agent(params: FiveGParams, an_index: int, budgets: np.ndarray) -> AgentSpec:
    n_an, s, l = params.n_an, params.n_classes, params.n_links
    dim = l * s + l
    n_constraints = n_an * s
    own = slice(an_index * s, (an_index + 1) * s)
    flows = _arr(params.flows[an_index])
    upsilon, kappa = params.upsilon, _arr(params.kappa_an[an_index])
    beta, a, k = params.beta_an, params.a, params.k
    budgets = _arr(budgets)

    def contrib(y):
        out = np.zeros(n_constraints)
        out[own] = kernels.an_contrib(y, flows, upsilon, a, budgets)
        return out

    def jac(y):
        out = np.zeros((n_constraints, dim))
        out[own] = kernels.an_contrib_jac(y, flows, upsilon, a)
        return out

    routing = SimplexBlock(tuple((((cls * l), (cls * l + l)), 1.0) for cls in range(s)))
    bandwidth = Box(np.full(l, params.b_min),
                    params.bandwidth_cap * params.an_totals[an_index] * np.ones(l))
    return AgentSpec(
        id=an_index + 1,
        dim=dim,
        objective=lambda y: kernels.an_cost(y, flows, upsilon, kappa, beta, a, k),
        objective_grad=lambda y: kernels.an_cost_grad(y, flows, upsilon, kappa, beta, a, k),
        constraint_contrib=contrib,
        constraint_jac=jac,
        feasible_set=Product((routing, bandwidth)),
    )


def build_problem(params: FiveGParams, budgets: Optional[np.ndarray] = None) -> ProblemSpec:
    """Assemble the (CN, AN 1, .., AN n) problem; K = n_an * n_classes.

    budgets overrides the constraint targets (used for fictitious tightened
    targets); the cost functions never depend on it.
    """
    budgets = params.budgets if budgets is None else _arr(budgets)
    agents = [_cn_agent(params)]
    for i in range(params.n_an):
        agents.append(_an_agent(params, i, budgets))
    labels = tuple(
        f"an{i + 1}_s{cls + 1}" for i in range(params.n_an) for cls in range(params.n_classes)
    )
    return ProblemSpec(agents=tuple(agents), n_constraints=params.n_an * params.n_classes,
                       labels=labels)


def realized_e2e_delay(params: FiveGParams, y: Sequence[np.ndarray]) -> np.ndarray:
    """Average end-to-end delay per (AN, class): AN leg plus CN leg.

    Identically equals g(y) + budgets when g is built with the true budgets.
    """
    cn_leg = kernels.cn_delays(_arr(y[0]), params.cn_flows, params.a)
    zero = np.zeros(params.n_classes)
    out = np.empty(params.n_an * params.n_classes)
    for i in range(params.n_an):
        an_leg = kernels.an_contrib(_arr(y[i + 1]), _arr(params.flows[i]),
                                    params.upsilon, params.a, zero)
        out[i * params.n_classes:(i + 1) * params.n_classes] = an_leg + cn_leg
    return out


def kpi_labels(params: FiveGParams) -> Tuple[str, ...]:
    return tuple(
        f"d_e2e_{i + 1}{cls + 1}"
        for i in range(params.n_an)
        for cls in range(params.n_classes)
    )


def make_reporters(params: FiveGParams, mu: float) -> TraceReporters:
    """True-budget objective/constraint reporting plus realized-delay KPIs."""
    true_problem = build_problem(params)
    return TraceReporters(
        phi_true=lambda y: evaluate_penalized_objective(true_problem, y, mu),
        g_true=lambda y: evaluate_global_constraints(true_problem, y),
        kpis=lambda y: realized_e2e_delay(params, y),
        kpi_labels=kpi_labels(params),
    )


def limiter_masks(params: FiveGParams) -> Tuple[np.ndarray, ...]:
    """Mask selecting the AN routing fractions (the limited coordinates)."""
    masks = [np.zeros(params.n_classes, dtype=bool)]
    an_mask = np.concatenate(
        [np.ones(params.n_links * params.n_classes, dtype=bool),
         np.zeros(params.n_links, dtype=bool)]
    )
    masks.extend([an_mask.copy() for _ in range(params.n_an)])
    return tuple(masks)


def default_weight_matrix(params: FiveGParams) -> np.ndarray:
    """Star-plus-self-loops mixing weights for the (CN, AN 1, AN 2) topology."""
    if params.n_an != 2:
        raise ValueError("the bundled weight matrix is defined for exactly two ANs")
    return np.array(
        [
            [0.75, 0.125, 0.125],
            [0.125, 0.875, 0.0],
            [0.125, 0.0, 0.875],
        ]
    )


def default_initialization(params: FiveGParams, rng: np.random.Generator):
    """Documented starting point: even routing splits, random bandwidths.

    CN class bandwidths are uniform on (0, 2*F_total) then lifted to b_min;
    AN i link bandwidths are uniform on (F_i, 2*F_i). The CN is drawn first,
    then each AN in order.
    """
    s, l = params.n_classes, params.n_links
    cn = np.maximum(rng.uniform(0.0, 2.0 * params.total_flow, size=s), params.b_min)
    decisions = [cn]
    for i in range(params.n_an):
        total = params.an_totals[i]
        b = rng.uniform(total, 2.0 * total, size=l)
        decisions.append(np.concatenate([np.full(l * s, 0.5), b]))
    return decisions
