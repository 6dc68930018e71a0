"""Multi-domain traffic routing with per-class end-to-end delay budgets.

Each agent (network domain) carries a set of flows; a flow has a demand, a
service class, and a set of candidate routes given as 0/1 link-incidence
rows. The decision variables are absolute per-route rates x_{f,r} >= 0 with
sum_r x_{f,r} equal to the flow's demand. Link delay grows polynomially with
utilization, d_l = upsilon_l * (load_l / c_l)^a, and the local objective is
the total carried-traffic delay cost sum_l load_l * d_l.

The coupled constraints bound, per end-to-end class path, the sum over the
traversed agents of their worst-case class delay

    g_{a,s}(x^a) = max over class-s routes of the summed link delays,

so one constraint per (class, end-to-end flow) pair:
sum_{a on path} g_{a,s}(x^a) - d*(s) <= 0. The max makes g piecewise smooth;
its subgradient uses the lowest-index maximizing route on ties.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from .core import AgentSpec, ProblemSpec, SimplexBlock


def _arr(x) -> np.ndarray:
    return np.ascontiguousarray(x, dtype=np.float64)


@dataclass(frozen=True)
class Flow:
    """One demand within an agent: rate, service class, candidate routes."""

    demand: float
    cls: int
    routes: np.ndarray  # (n_routes, n_links) 0/1 link incidence

    def __post_init__(self):
        routes = _arr(self.routes)
        if routes.ndim != 2 or routes.shape[0] < 1:
            raise ValueError("a flow needs at least one route (n_routes x n_links)")
        if not np.isin(routes, (0.0, 1.0)).all():
            raise ValueError("route incidence entries must be 0 or 1")
        if self.demand <= 0:
            raise ValueError("flow demand must be positive")
        object.__setattr__(self, "routes", routes)


@dataclass(frozen=True)
class RoutingAgent:
    capacities: np.ndarray  # (n_links,)
    upsilon: np.ndarray  # (n_links,)
    flows: Tuple[Flow, ...]

    def __post_init__(self):
        capacities = _arr(self.capacities)
        upsilon = _arr(self.upsilon)
        if np.any(capacities <= 0):
            raise ValueError("capacities must be positive")
        if upsilon.shape != capacities.shape:
            raise ValueError("upsilon must have one entry per link")
        for flow in self.flows:
            if flow.routes.shape[1] != capacities.shape[0]:
                raise ValueError("route incidence width must equal the link count")
        object.__setattr__(self, "capacities", capacities)
        object.__setattr__(self, "upsilon", upsilon)
        object.__setattr__(self, "flows", tuple(self.flows))

    @property
    def n_links(self) -> int:
        return self.capacities.shape[0]

    @property
    def dim(self) -> int:
        return sum(f.routes.shape[0] for f in self.flows)

    def flow_slices(self):
        start = 0
        for flow in self.flows:
            stop = start + flow.routes.shape[0]
            yield flow, slice(start, stop)
            start = stop

    def require_class(self, cls: int):
        if not any(flow.cls == cls for flow in self.flows):
            raise ValueError(f"agent has no routes for class {cls}")


@dataclass(frozen=True)
class GlobalFlow:
    """An end-to-end class path: which agents the class-s traffic traverses."""

    cls: int
    agents: Tuple[int, ...]

    def __post_init__(self):
        if len(set(self.agents)) != len(self.agents) or not self.agents:
            raise ValueError("an end-to-end path lists each agent once, at least one")
        object.__setattr__(self, "agents", tuple(int(a) for a in self.agents))


@dataclass(frozen=True)
class RoutingScenario:
    agents: Tuple[RoutingAgent, ...]
    global_flows: Tuple[GlobalFlow, ...]
    class_budgets: Tuple[float, ...]  # d*(s) indexed by class id
    a: float = 2.0  # delay exponent

    def __post_init__(self):
        object.__setattr__(self, "agents", tuple(self.agents))
        object.__setattr__(self, "global_flows", tuple(self.global_flows))
        object.__setattr__(self, "class_budgets", tuple(float(b) for b in self.class_budgets))
        if self.a < 1:
            raise ValueError("delay exponent must be >= 1")
        if not self.global_flows:
            raise ValueError("need at least one end-to-end flow")
        for gf in self.global_flows:
            if gf.cls >= len(self.class_budgets):
                raise ValueError(f"class {gf.cls} has no budget")
            for a_idx in gf.agents:
                if not 0 <= a_idx < len(self.agents):
                    raise ValueError(f"end-to-end path references unknown agent {a_idx}")
                # fails fast if the agent cannot carry the class at all
                self.agents[a_idx].require_class(gf.cls)


def _link_state(agent: RoutingAgent, x: np.ndarray, a: float):
    load = np.zeros(agent.n_links)
    for flow, sl in agent.flow_slices():
        load += x[sl] @ flow.routes
    ratio = load / agent.capacities
    delay = agent.upsilon * ratio ** a
    ddelay = a * agent.upsilon * ratio ** (a - 1.0) / agent.capacities
    return load, delay, ddelay


def local_cost(agent: RoutingAgent, x, a: float) -> float:
    """sum_l load_l * delay_l(load_l) - total delay cost across classes."""
    load, delay, _ = _link_state(agent, _arr(x), a)
    return float(load @ delay)


def local_cost_grad(agent: RoutingAgent, x, a: float) -> np.ndarray:
    x = _arr(x)
    load, delay, _ = _link_state(agent, x, a)
    per_link = (1.0 + a) * delay  # d(load*delay)/dload
    out = np.empty(agent.dim)
    for flow, sl in agent.flow_slices():
        out[sl] = flow.routes @ per_link
    return out


def max_delay_contribution(agent: RoutingAgent, cls: int, x, a: float):
    """Worst class-cls route delay and its subgradient w.r.t. x^a.

    Ties pick the lowest route index (deterministic subgradient choice).
    """
    x = _arr(x)
    _, delay, ddelay = _link_state(agent, x, a)
    best_val = -np.inf
    best_grad = None
    for flow, sl in agent.flow_slices():
        if flow.cls != cls:
            continue
        route_delays = flow.routes @ delay
        idx = int(np.argmax(route_delays))
        if float(route_delays[idx]) > best_val:
            best_val = float(route_delays[idx])
            row = flow.routes[idx]
            grad = np.zeros(agent.dim)
            for f2, sl2 in agent.flow_slices():
                grad[sl2] = f2.routes @ (row * ddelay)
            best_grad = grad
    if best_grad is None:
        raise ValueError(f"agent has no routes for class {cls}")
    return best_val, best_grad


def build_routing_problem(scenario: RoutingScenario) -> ProblemSpec:
    """Assemble the ProblemSpec; one constraint per end-to-end class path.

    The -d*(s) constant is charged to the first agent on the path (any
    assignment preserving the sum is equivalent).
    """
    k = len(scenario.global_flows)
    agents = []
    for a_idx, agent in enumerate(scenario.agents):
        involvement = []  # (constraint row, class, subtract_budget)
        for row, gf in enumerate(scenario.global_flows):
            if a_idx in gf.agents:
                involvement.append((row, gf.cls, gf.agents[0] == a_idx))

        def contrib(x, agent=agent, involvement=involvement):
            out = np.zeros(k)
            for row, cls, first in involvement:
                val, _ = max_delay_contribution(agent, cls, x, scenario.a)
                out[row] = val - (scenario.class_budgets[cls] if first else 0.0)
            return out

        def jac(x, agent=agent, involvement=involvement):
            out = np.zeros((k, agent.dim))
            for row, cls, _ in involvement:
                _, grad = max_delay_contribution(agent, cls, x, scenario.a)
                out[row] = grad
            return out

        blocks = tuple(
            ((sl.start, sl.stop), flow.demand) for flow, sl in agent.flow_slices()
        )
        agents.append(
            AgentSpec(
                id=a_idx,
                dim=agent.dim,
                objective=lambda x, agent=agent: local_cost(agent, x, scenario.a),
                objective_grad=lambda x, agent=agent: local_cost_grad(agent, x, scenario.a),
                constraint_contrib=contrib,
                constraint_jac=jac,
                feasible_set=SimplexBlock(blocks),
            )
        )
    labels = tuple(f"s{gf.cls}_path{idx}" for idx, gf in enumerate(scenario.global_flows))
    return ProblemSpec(agents=tuple(agents), n_constraints=k, labels=labels)


# ---------------------------------------------------------------------------
# small bundled instances
# ---------------------------------------------------------------------------

def parallel_two_routes(demand: float = 1.0, budget: float = 10.0) -> RoutingScenario:
    """One agent, one flow, two identical parallel single-link routes."""
    agent = RoutingAgent(
        capacities=(1.0, 1.0),
        upsilon=(1.0, 1.0),
        flows=(Flow(demand=demand, cls=0, routes=np.eye(2)),),
    )
    return RoutingScenario(
        agents=(agent,),
        global_flows=(GlobalFlow(cls=0, agents=(0,)),),
        class_budgets=(budget,),
    )


def chain_two_agents(budget: float = 10.0) -> RoutingScenario:
    """Two domains in series, each splitting one flow over two parallel links."""
    first = RoutingAgent(
        capacities=(1.0, 0.7),
        upsilon=(1.0, 1.0),
        flows=(Flow(demand=1.0, cls=0, routes=np.eye(2)),),
    )
    second = RoutingAgent(
        capacities=(0.8, 1.2),
        upsilon=(1.0, 1.0),
        flows=(Flow(demand=1.0, cls=0, routes=np.eye(2)),),
    )
    return RoutingScenario(
        agents=(first, second),
        global_flows=(GlobalFlow(cls=0, agents=(0, 1)),),
        class_budgets=(budget,),
    )
