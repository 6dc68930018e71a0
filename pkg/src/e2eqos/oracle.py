"""Centralized reference solver for the penalized problem.

Projected gradient on the stacked decision vector with a monotone Armijo
line search (shrink 0.5, slope 1e-4). The trial step each iteration is the
spectral (Barzilai-Borwein) length, which keeps the method fast on the badly
scaled penalty surfaces produced by large mu while the backtracking keeps
every accepted iterate non-increasing in Phi. The best of several random
feasible restarts is returned together with a first-order certificate
residual ||P(y - eta*grad Phi(y)) - y|| / eta at eta = 1e-6.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .core import (
    Box,
    Product,
    ProblemSpec,
    SimplexBlock,
    evaluate_global_constraints,
    positive_part,
)
from .optimizer import DOMAIN_ORACLE, RngStreams
from .projection import project

_ARMIJO_SLOPE = 1e-4
_ARMIJO_SHRINK = 0.5


@dataclass(frozen=True)
class OracleResult:
    y_star: Tuple[np.ndarray, ...]
    phi_star: float
    converged: bool
    certificate_residual: float
    restart_values: Tuple[float, ...]
    restart_converged: Tuple[bool, ...]
    iterations_used: int


def sample_feasible(feasible_set, gen: np.random.Generator) -> np.ndarray:
    """Draw a random point of the set (uniform for boxes, projected for simplexes)."""
    if isinstance(feasible_set, Box):
        return gen.uniform(feasible_set.lower, feasible_set.upper)
    if isinstance(feasible_set, SimplexBlock):
        out = np.zeros(feasible_set.dim)
        for (start, stop), target in feasible_set.blocks:
            raw = gen.uniform(0.0, 2.0 * target / (stop - start), size=stop - start)
            out[start:stop] = raw
        return project(feasible_set, out)
    if isinstance(feasible_set, Product):
        return np.concatenate(
            [sample_feasible(child, gen) for _, _, child in feasible_set.offsets()]
        )
    raise TypeError(f"unknown feasible set type {type(feasible_set).__name__}")


class _Stacked:
    """Flat-vector view of the product problem with exact gradients of Phi.

    Skips the per-call shape validation of the public evaluators: the
    ProblemSpec constructor already probed every callable, and this object
    sits in the innermost solver loop.
    """

    def __init__(self, problem: ProblemSpec, mu: float):
        self.problem = problem
        self.agents = problem.agents
        self.k = problem.n_constraints
        self.scale = mu / problem.n_agents
        self.slices = []
        start = 0
        for agent in problem.agents:
            self.slices.append(slice(start, start + agent.dim))
            start += agent.dim
        self.dim = start

    def split(self, flat: np.ndarray):
        return [flat[s] for s in self.slices]

    def stack(self, parts) -> np.ndarray:
        return np.concatenate([np.asarray(p, dtype=np.float64) for p in parts])

    def phi_hinge(self, flat: np.ndarray):
        """Phi value together with the positive part of the constraint sum."""
        total = 0.0
        g = np.zeros(self.k)
        for agent, s in zip(self.agents, self.slices):
            y_i = flat[s]
            total += float(agent.objective(y_i))
            g += agent.constraint_contrib(y_i)
        hinge = positive_part(g)
        return total + 0.5 * self.scale * float(hinge @ hinge), hinge

    def phi(self, flat: np.ndarray) -> float:
        return self.phi_hinge(flat)[0]

    def grad_at(self, flat: np.ndarray, hinge: np.ndarray) -> np.ndarray:
        """Gradient of Phi reusing a hinge vector already computed at flat."""
        active = self.scale > 0.0 and hinge.any()
        out = np.empty(self.dim)
        for agent, s in zip(self.agents, self.slices):
            y_i = flat[s]
            block = np.asarray(agent.objective_grad(y_i), dtype=np.float64)
            if active:
                block = block + self.scale * (hinge @ agent.constraint_jac(y_i))
            out[s] = block
        return out

    def grad(self, flat: np.ndarray) -> np.ndarray:
        g = np.zeros(self.k)
        for agent, s in zip(self.agents, self.slices):
            g += agent.constraint_contrib(flat[s])
        return self.grad_at(flat, positive_part(g))

    def project(self, flat: np.ndarray) -> np.ndarray:
        out = np.empty(self.dim)
        for agent, s in zip(self.agents, self.slices):
            out[s] = project(agent.feasible_set, flat[s])
        return out


def _solve_single(stacked: _Stacked, y0: np.ndarray, tol: float, max_iters: int):
    y = stacked.project(y0)
    f, hinge = stacked.phi_hinge(y)
    g = stacked.grad_at(y, hinge)
    eta = None
    y_prev = None
    g_prev = None
    converged = False
    it = 0
    for it in range(1, max_iters + 1):
        if y_prev is not None:
            s = y - y_prev
            dg = g - g_prev
            sdg = float(s @ dg)
            if sdg > 1e-300:
                eta = min(max(float(s @ s) / sdg, 1e-15), 1e10)
            else:
                eta = None
        if eta is None:
            # No usable spectral memory: fresh steepest step with length
            # capped near the iterate's own scale. The penalty wall close to
            # a bandwidth floor has gradients ~1e15 and an unscaled step
            # would need ~50 halvings to recover.
            trial = 10.0 * (1.0 + float(np.linalg.norm(y))) / max(
                float(np.linalg.norm(g)), 1e-300
            )
        else:
            trial = eta
        accepted = False
        for _ in range(120):
            y_new = stacked.project(y - trial * g)
            diff = y_new - y
            f_new, hinge_new = stacked.phi_hinge(y_new)
            if f_new <= f + _ARMIJO_SLOPE * float(g @ diff):
                accepted = True
                break
            trial *= _ARMIJO_SHRINK
        if not accepted:
            break  # numerical floor: no descent step exists at this precision
        step_norm = float(np.linalg.norm(diff))
        small = step_norm < tol * max(1.0, float(np.linalg.norm(y)))
        y_prev, g_prev = y, g
        y, f = y_new, f_new
        g = stacked.grad_at(y, hinge_new)
        if small:
            converged = True
            break
    return y, f, converged, it


def certificate_residual(problem: ProblemSpec, y_star, mu: float, eta: float = 1e-6) -> float:
    """Projected-gradient fixed-point residual ||P(y - eta*grad) - y|| / eta."""
    stacked = _Stacked(problem, mu)
    flat = stacked.stack(y_star)
    moved = stacked.project(flat - eta * stacked.grad(flat))
    return float(np.linalg.norm(moved - flat)) / eta


def solve_centralized(
    problem: ProblemSpec,
    mu: float,
    tol: float = 1e-9,
    max_iters: int = 200000,
    restarts: int = 5,
    seed: int = 0,
) -> OracleResult:
    """Best-of-restarts projected-gradient solve of the penalized problem.

    Returns the best iterate, its Phi value, whether that restart met the
    relative step tolerance, the certificate residual at the returned point,
    and every restart's final value (their agreement is the practical
    optimality check on convex instances).
    """
    if mu < 0:
        raise ValueError("penalty parameter must be nonnegative")
    if tol <= 0:
        raise ValueError("tolerance must be positive")
    if restarts < 1:
        raise ValueError("need at least one restart")
    stacked = _Stacked(problem, mu)
    streams = RngStreams(seed)
    best = None
    values = []
    flags = []
    for r in range(restarts):
        gen = streams.generator(DOMAIN_ORACLE, agent=r)
        y0 = stacked.stack(
            sample_feasible(a.feasible_set, gen) for a in problem.agents
        )
        y, f, converged, iters = _solve_single(stacked, y0, tol, max_iters)
        values.append(f)
        flags.append(converged)
        if best is None or f < best[1]:
            best = (y, f, converged, iters)
    y_best, f_best, converged, iters = best
    y_star = tuple(np.array(part) for part in stacked.split(y_best))
    residual = certificate_residual(problem, y_star, mu)
    return OracleResult(
        y_star=y_star,
        phi_star=f_best,
        converged=converged,
        certificate_residual=residual,
        restart_values=tuple(values),
        restart_converged=tuple(flags),
        iterations_used=iters,
    )
