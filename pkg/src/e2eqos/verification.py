"""Self-check suite behind the `verify` CLI command.

Each check returns a CheckResult with a one-line detail string; the CLI
prints them as a table and fails the process if any check fails. The checks
mirror the package's contract surface: weight-matrix validation, exact mean
preservation of the tracking update, analytic gradients vs central finite
differences, projection properties, and the game-theoretic probe of the
oracle optimum.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from .consensus import (
    NegativeEntryError,
    NotStronglyConnectedError,
    update_estimates,
    validate_weight_matrix,
)
from .core import Box, ProblemSpec, Product, SimplexBlock
from .game import verify_stationary_nash
from .oracle import OracleResult, sample_feasible
from .projection import contains, project


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def finite_difference_gradient(f, x: np.ndarray, h: Optional[float] = None) -> np.ndarray:
    """Central differences; by default the step scales with each coordinate.

    A fixed step cannot cover functions whose magnitude varies over many
    orders within the feasible set: cancellation in f(x+h) - f(x-h) then
    dominates small gradient components. h_i = cbrt(eps) * max(1, |x_i|)
    balances that roundoff against the O(h^2) truncation term.
    """
    steps = np.full(x.shape[0], h) if h is not None else (
        float(np.cbrt(np.finfo(np.float64).eps)) * np.maximum(1.0, np.abs(x))
    )
    out = np.empty(x.shape[0])
    for i in range(x.shape[0]):
        bumped = x.copy()
        bumped[i] = x[i] + steps[i]
        up = float(f(bumped))
        bumped[i] = x[i] - steps[i]
        down = float(f(bumped))
        out[i] = (up - down) / (2.0 * steps[i])
    return out


def _rel_err(approx: np.ndarray, exact: np.ndarray) -> float:
    scale = np.maximum(1.0, np.abs(exact))
    return float(np.max(np.abs(approx - exact) / scale))


def check_weight_matrix(w: np.ndarray) -> List[CheckResult]:
    results = []
    try:
        info = validate_weight_matrix(w)
        results.append(CheckResult("weights_accept", True, f"sigma2={info.sigma2:.6f}"))
    except Exception as exc:  # pragma: no cover - config error path
        results.append(CheckResult("weights_accept", False, str(exc)))
        return results
    n = w.shape[0]
    try:
        validate_weight_matrix(np.eye(max(n, 2)))
        results.append(CheckResult("weights_reject_identity", False, "identity accepted"))
    except NotStronglyConnectedError as exc:
        results.append(CheckResult("weights_reject_identity", True, str(exc)))
    bad = np.full((3, 3), 1.0 / 3.0)
    bad[0] = (0.6, 0.6, -0.2)
    try:
        validate_weight_matrix(bad)
        results.append(CheckResult("weights_reject_negative", False, "negative entry accepted"))
    except NegativeEntryError as exc:
        results.append(CheckResult("weights_reject_negative", True, str(exc)))
    return results


def check_mean_preservation(w: np.ndarray, k: int = 4, rounds: int = 200,
                            seed: int = 0) -> CheckResult:
    info = validate_weight_matrix(w)
    gen = np.random.default_rng(seed)
    g = gen.normal(size=(info.n, k))
    e = [g[i].copy() for i in range(info.n)]
    worst = 0.0
    for _ in range(rounds):
        g_new = gen.normal(size=(info.n, k))
        e = update_estimates(info, e, list(g_new), list(g))
        g = g_new
        residual = float(np.max(np.abs(np.mean(e, axis=0) - g.mean(axis=0))))
        worst = max(worst, residual)
    return CheckResult("mean_preservation", worst <= 1e-9, f"max residual {worst:.3e}")


def check_gradients(problem: ProblemSpec, n_points: int = 100, rtol: float = 1e-5,
                    seed: int = 0) -> CheckResult:
    gen = np.random.default_rng(seed)
    worst = 0.0
    for agent in problem.agents:
        # random feasible probes, pulled halfway toward a deep-interior
        # anchor (feasible by convexity): near extreme corners the function
        # magnitude swamps small gradient components, so no finite-difference
        # step can certify anything there in double precision
        anchor = np.mean(
            [sample_feasible(agent.feasible_set, gen) for _ in range(8)], axis=0
        )
        for _ in range(n_points):
            x = 0.5 * (sample_feasible(agent.feasible_set, gen) + anchor)
            err = _rel_err(
                finite_difference_gradient(agent.objective, x),
                np.asarray(agent.objective_grad(x), dtype=np.float64),
            )
            worst = max(worst, err)
            jac = np.asarray(agent.constraint_jac(x), dtype=np.float64)
            for row in range(jac.shape[0]):
                fd = finite_difference_gradient(
                    lambda z, r=row: float(np.asarray(agent.constraint_contrib(z))[r]), x
                )
                worst = max(worst, _rel_err(fd, jac[row]))
    return CheckResult("gradient_fd", worst <= rtol, f"worst relative error {worst:.3e}")


def _random_sets(gen: np.random.Generator):
    lo = gen.uniform(-2.0, 0.0, size=4)
    hi = lo + gen.uniform(0.1, 3.0, size=4)
    yield Box(lo, hi)
    yield SimplexBlock((((0, 3), float(gen.uniform(0.5, 2.0))),))
    yield SimplexBlock((((0, 2), 1.0), ((2, 5), float(gen.uniform(0.5, 2.0)))))
    yield Product((Box(lo[:2], hi[:2]), SimplexBlock((((0, 3), 1.0),))))


def check_projections(trials: int = 50, tol: float = 1e-9, seed: int = 0) -> CheckResult:
    gen = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        for fs in _random_sets(gen):
            x = gen.uniform(-3.0, 3.0, size=fs.dim)
            p = project(fs, x)
            worst = max(worst, float(np.linalg.norm(project(fs, p) - p)))  # idempotent
            if not contains(fs, p, tol=1e-9):
                return CheckResult("projection_properties", False, "projection infeasible")
            x2 = gen.uniform(-3.0, 3.0, size=fs.dim)
            q = project(fs, x2)
            expansion = float(np.linalg.norm(p - q) - np.linalg.norm(x - x2))
            worst = max(worst, expansion)
            z = sample_feasible(fs, gen)
            vi = float((x - p) @ (z - p))  # <= 0 characterizes the projection
            worst = max(worst, vi)
    return CheckResult("projection_properties", worst <= tol, f"worst residual {worst:.3e}")


def check_sbpg(problem: ProblemSpec, w: np.ndarray, oracle_result: OracleResult,
               mu_game: float, epsilon: float, n_probes: int, radius: float,
               seed: int = 0) -> List[CheckResult]:
    gen = np.random.default_rng(seed)
    report = verify_stationary_nash(
        oracle_result.y_star, problem, w, mu_game,
        epsilon=epsilon, n_probes=n_probes, rng=gen, radius=radius,
    )
    worst = max(r.worst_improvement for r in report.per_agent)
    results = [
        CheckResult(
            "sbpg_no_improvement",
            report.passed,
            f"worst unilateral improvement {worst:.3e} over {n_probes} probes/agent",
        )
    ]
    # negative control: a clearly suboptimal point must admit an improvement
    perturbed = [y.copy() for y in oracle_result.y_star]
    perturbed[0] = project(problem.agents[0].feasible_set, perturbed[0] * 0.5)
    control = verify_stationary_nash(
        perturbed, problem, w, mu_game,
        epsilon=epsilon, n_probes=n_probes, rng=gen, radius=radius,
    )
    results.append(
        CheckResult(
            "sbpg_negative_control",
            not control.passed,
            "improving deviation found at the perturbed point"
            if not control.passed
            else "no deviation found (unexpected)",
        )
    )
    return results
