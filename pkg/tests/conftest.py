"""Shared fixtures; the expensive centralized solve runs once per session."""

import pytest

from e2eqos.optimizer import apply_fictitious_budgets
from e2eqos.oracle import solve_centralized
from e2eqos.scenario_5g import FiveGParams, build_problem


@pytest.fixture(scope="session")
def five_g_params():
    return FiveGParams()


@pytest.fixture(scope="session")
def five_g_problem(five_g_params):
    return build_problem(five_g_params)


@pytest.fixture(scope="session")
def five_g_fictitious_problem(five_g_params):
    budgets = apply_fictitious_budgets(five_g_params.budgets, 0.6)
    return build_problem(five_g_params, budgets=budgets)


@pytest.fixture(scope="session")
def five_g_fictitious_oracle(five_g_fictitious_problem):
    # bundled-config oracle settings; takes ~20 s, shared by every consumer
    return solve_centralized(five_g_fictitious_problem, 2e4, tol=1e-9,
                             max_iters=60000, restarts=5, seed=0)
