"""Command-line front end: seeded runs, oracle solves, verification, comparisons.

Commands
--------
run      execute the distributed algorithm, write trace.csv + summary.json
oracle   solve the same instance centrally, write optimum.json
verify   run the invariant/property suite, print a pass/fail table
compare  run algorithm + oracle, print relative optimality gap per window

Configs are flat dotted-key text files (see `e2eqos.config`); a bare name
like `case5g` resolves to the bundled file of that name. Every command
accepts repeated `--set key=value` overrides; exit codes are 0 (success),
1 (verification/comparison failure), 2 (usage or config errors).
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
import time
from importlib import resources
from pathlib import Path
from typing import List, Optional

import numpy as np

from . import scenario_5g, scenario_routing, verification
from .config import Config, ConfigFileError, REQUIRED, load_config, parse_config_text
from .consensus import WeightMatrixError, validate_weight_matrix
from .core import ProblemSpec, evaluate_global_constraints, evaluate_penalized_objective
from .optimizer import (
    ConfigError,
    Constant,
    DOMAIN_INIT,
    IterationTrace,
    LimiterConfig,
    NoNoise,
    Polynomial,
    RngStreams,
    RunConfig,
    TraceReporters,
    UniformBounded,
    UniformGradientProportional,
    apply_fictitious_budgets,
    run,
)
from .oracle import OracleResult, solve_centralized

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2


def _resolve_config(path_or_name: str) -> Config:
    path = Path(path_or_name)
    if path.exists():
        return load_config(str(path))
    bundled = resources.files(__package__) / "configs" / f"{path_or_name}.cfg"
    if bundled.is_file():
        return parse_config_text(bundled.read_text(encoding="utf-8"), source=path_or_name)
    names = sorted(
        p.name[: -len(".cfg")]
        for p in (resources.files(__package__) / "configs").iterdir()
        if p.name.endswith(".cfg")
    )
    raise FileNotFoundError(
        f"config '{path_or_name}' is neither a file nor a bundled config "
        f"(bundled: {', '.join(names)})"
    )


@dataclasses.dataclass
class RunSetup:
    scenario: str
    problem: ProblemSpec  # instance the algorithm optimizes (fictitious targets)
    w: np.ndarray
    run_cfg: RunConfig
    reporters: TraceReporters
    initial_y: List[np.ndarray]
    config: Config
    oracle_mu: float
    oracle_tol: float
    oracle_restarts: int
    oracle_max_iters: int
    game_mu: float
    game_probes: int
    game_radius: float
    game_epsilon: float
    params: Optional[scenario_5g.FiveGParams] = None


def _schedule_from(cfg: Config):
    kind = cfg.str_("schedule.kind", "polynomial")
    if kind == "polynomial":
        return Polynomial(cap=cfg.float_("schedule.cap", 0.1),
                          exponent=cfg.float_("schedule.exponent", 0.6))
    if kind == "constant":
        return Constant(cfg.float_("schedule.gamma", REQUIRED))
    raise ConfigFileError(f"{cfg.source}: key 'schedule.kind': unknown kind '{kind}'")


def _noise_from(cfg: Config):
    kind = cfg.str_("noise.kind", "none")
    if kind == "none":
        return NoNoise()
    if kind == "gradient_proportional":
        return UniformGradientProportional(cfg.float_("noise.sigma", REQUIRED))
    if kind == "bounded":
        return UniformBounded(np.asarray(cfg.floats("noise.half_width", REQUIRED)))
    raise ConfigFileError(f"{cfg.source}: key 'noise.kind': unknown kind '{kind}'")


def _weights_from(cfg: Config, default: np.ndarray) -> np.ndarray:
    rows = []
    idx = 0
    while True:
        row = cfg.floats(f"w.row{idx}")
        if row is None:
            break
        rows.append(row)
        idx += 1
    return np.asarray(rows, dtype=np.float64) if rows else default


def _five_g_params(cfg: Config) -> scenario_5g.FiveGParams:
    defaults = scenario_5g.FiveGParams()
    beta = cfg.floats("five_g.beta")
    beta_an = cfg.floats("five_g.beta_an", list(defaults.beta_an))
    beta_cn = cfg.floats("five_g.beta_cn", list(defaults.beta_cn))
    kw = dict(
        upsilon=cfg.floats("five_g.upsilon", list(defaults.upsilon)),
        kappa_an=(
            cfg.floats("five_g.kappa_an1", list(defaults.kappa_an[0])),
            cfg.floats("five_g.kappa_an2", list(defaults.kappa_an[1])),
        ),
        kappa_cn=cfg.floats("five_g.kappa_cn", list(defaults.kappa_cn)),
        a=cfg.float_("five_g.a", defaults.a),
        k=cfg.float_("five_g.k", defaults.k),
        beta_an=beta or beta_an,
        beta_cn=beta or beta_cn,
        flows=(
            cfg.floats("five_g.flows_an1", list(defaults.flows[0])),
            cfg.floats("five_g.flows_an2", list(defaults.flows[1])),
        ),
        budgets=cfg.floats("five_g.budgets", list(defaults.budgets)),
        bandwidth_cap=cfg.float_("five_g.bandwidth_cap", defaults.bandwidth_cap),
        b_min=cfg.float_("five_g.b_min", defaults.b_min),
    )
    return scenario_5g.FiveGParams(**kw)


def build_setup(cfg: Config) -> RunSetup:
    scenario = cfg.str_("scenario", "five_g")
    mu = cfg.float_("run.mu", REQUIRED)
    iterations = cfg.int_("run.iterations", 1000)
    seed = cfg.int_("run.seed", 0)
    tau = cfg.float_("run.tau", 1.0)
    schedule = _schedule_from(cfg)
    noise = _noise_from(cfg)
    limiter_enabled = cfg.bool_("limiter.enabled", scenario == "five_g")
    limiter_bound = cfg.float_("limiter.bound", 0.01)
    params = None

    if scenario == "five_g":
        params = _five_g_params(cfg)
        problem = scenario_5g.build_problem(
            params, budgets=apply_fictitious_budgets(params.budgets, tau)
        )
        reporters = scenario_5g.make_reporters(params, mu)
        w = _weights_from(cfg, scenario_5g.default_weight_matrix(params))
        masks = scenario_5g.limiter_masks(params) if limiter_enabled else None
        init_gen = RngStreams(seed).generator(DOMAIN_INIT)
        initial_y = scenario_5g.default_initialization(params, init_gen)
    elif scenario in ("routing_parallel", "routing_chain"):
        budget = cfg.float_("routing.budget", 10.0)
        base = (
            scenario_routing.parallel_two_routes(budget=budget)
            if scenario == "routing_parallel"
            else scenario_routing.chain_two_agents(budget=budget)
        )
        base = dataclasses.replace(base, a=cfg.float_("routing.a", base.a))
        fict = dataclasses.replace(
            base,
            class_budgets=tuple(apply_fictitious_budgets(base.class_budgets, tau)),
        )
        problem = scenario_routing.build_routing_problem(fict)
        true_problem = scenario_routing.build_routing_problem(base)
        reporters = TraceReporters(
            phi_true=lambda y: evaluate_penalized_objective(true_problem, y, mu),
            g_true=lambda y: evaluate_global_constraints(true_problem, y),
        )
        n = problem.n_agents
        default_w = np.array([[1.0]]) if n == 1 else np.full((n, n), 1.0 / n)
        w = _weights_from(cfg, default_w)
        masks = (
            tuple(np.ones(a.dim, dtype=bool) for a in problem.agents)
            if limiter_enabled
            else None
        )
        init_gen = RngStreams(seed).generator(DOMAIN_INIT)
        from .oracle import sample_feasible

        initial_y = [sample_feasible(a.feasible_set, init_gen) for a in problem.agents]
    else:
        raise ConfigFileError(f"{cfg.source}: key 'scenario': unknown scenario '{scenario}'")

    run_cfg = RunConfig(
        mu=mu,
        schedule=schedule,
        noise=noise,
        limiter=LimiterConfig(enabled=limiter_enabled, coordinate_mask=masks,
                              bound=limiter_bound),
        fictitious_factor=tau,
        iterations=iterations,
        seed=seed,
    )
    setup = RunSetup(
        scenario=scenario,
        problem=problem,
        w=w,
        run_cfg=run_cfg,
        reporters=reporters,
        initial_y=initial_y,
        config=cfg,
        oracle_mu=cfg.float_("oracle.mu", mu),
        oracle_tol=cfg.float_("oracle.tol", 1e-9),
        oracle_restarts=cfg.int_("oracle.restarts", 5),
        oracle_max_iters=cfg.int_("oracle.max_iters", 200000),
        game_mu=cfg.float_("game.mu", mu),
        game_probes=cfg.int_("game.probes", 1000),
        game_radius=cfg.float_("game.radius", 1e-3),
        game_epsilon=cfg.float_("game.epsilon", 1e-6),
        params=params,
    )
    cfg.str_("compare.windows")  # consumed by cmd_compare when present
    cfg.reject_unknown()
    return setup


# ---------------------------------------------------------------------------
# output writers
# ---------------------------------------------------------------------------

def _fmt(x: float) -> str:
    return format(float(x), ".15g")


def write_trace_csv(path: Path, trace: IterationTrace):
    n_rec, k = trace.g.shape
    n_agents = trace.estimates.shape[1]
    header = ["t", "gamma", "phi_true", "phi_fictitious"]
    header += [f"g_{c + 1}" for c in range(k)]
    for i in range(n_agents):
        header += [f"e_{i + 1}_{c + 1}" for c in range(k)]
    header += list(trace.kpi_labels)
    lines = [",".join(header)]
    for r in range(n_rec):
        row = [str(int(trace.t[r])), _fmt(trace.gamma[r]), _fmt(trace.phi_true[r]),
               _fmt(trace.phi_fictitious[r])]
        row += [_fmt(v) for v in trace.g[r]]
        for i in range(n_agents):
            row += [_fmt(v) for v in trace.estimates[r, i]]
        row += [_fmt(v) for v in trace.kpis[r]]
        lines.append(",".join(row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def _write_json(path: Path, payload: dict):
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_run(args) -> int:
    setup = _setup_from_args(args)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    started = time.perf_counter()
    trace = run(setup.problem, setup.w, setup.run_cfg, setup.initial_y, setup.reporters)
    elapsed = time.perf_counter() - started
    write_trace_csv(out_dir / "trace.csv", trace)
    window = min(50, trace.n_records)
    summary = {
        "seed": setup.run_cfg.seed,
        "config": setup.config.echo(),
        "final_phi_fictitious": float(trace.phi_fictitious[-1]),
        "final_phi_true": float(trace.phi_true[-1]),
        "mean_phi_fictitious_last_50": float(np.mean(trace.phi_fictitious[-window:])),
        "iterations": int(trace.t[-1]),
        "wall_clock_seconds": elapsed,
    }
    if args.oracle:
        optimum = json.loads(Path(args.oracle).read_text(encoding="utf-8"))
        phi_star = float(optimum["phi_star"])
        summary["oracle_phi_star"] = phi_star
        summary["oracle_gap_last_50"] = abs(
            summary["mean_phi_fictitious_last_50"] - phi_star
        ) / max(1e-30, abs(phi_star))
    _write_json(out_dir / "summary.json", summary)
    print(f"wrote {out_dir / 'trace.csv'} ({trace.n_records} rows) and summary.json")
    return EXIT_OK


def _solve_oracle(setup: RunSetup, mu: Optional[float] = None) -> OracleResult:
    return solve_centralized(
        setup.problem,
        setup.oracle_mu if mu is None else mu,
        tol=setup.oracle_tol,
        max_iters=setup.oracle_max_iters,
        restarts=setup.oracle_restarts,
        seed=setup.run_cfg.seed,
    )


def cmd_oracle(args) -> int:
    setup = _setup_from_args(args)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    started = time.perf_counter()
    result = _solve_oracle(setup)
    elapsed = time.perf_counter() - started
    payload = {
        "mu": setup.oracle_mu,
        "phi_star": result.phi_star,
        "converged": result.converged,
        "certificate_residual": result.certificate_residual,
        "restart_values": list(result.restart_values),
        "restart_converged": list(result.restart_converged),
        "iterations_used": result.iterations_used,
        "wall_clock_seconds": elapsed,
        "y_star": {f"agent_{i}": part.tolist() for i, part in enumerate(result.y_star)},
    }
    if setup.params is not None:
        payload["realized_e2e_delays"] = scenario_5g.realized_e2e_delay(
            setup.params, result.y_star
        ).tolist()
    _write_json(out_dir / "optimum.json", payload)
    print(f"phi_star = {result.phi_star:.9g} (converged={result.converged}, "
          f"certificate residual {result.certificate_residual:.3e})")
    return EXIT_OK


def cmd_verify(args) -> int:
    setup = _setup_from_args(args)
    checks = []
    checks += verification.check_weight_matrix(setup.w)
    checks.append(verification.check_mean_preservation(setup.w, k=setup.problem.n_constraints))
    checks.append(verification.check_gradients(setup.problem))
    checks.append(verification.check_projections())
    oracle_result = _solve_oracle(setup, mu=setup.game_mu)
    checks += verification.check_sbpg(
        setup.problem, setup.w, oracle_result,
        mu_game=setup.game_mu, epsilon=setup.game_epsilon,
        n_probes=setup.game_probes, radius=setup.game_radius,
    )
    width = max(len(c.name) for c in checks)
    for c in checks:
        status = "PASS" if c.passed else "FAIL"
        print(f"{c.name:<{width}}  {status}  {c.detail}")
    all_passed = all(c.passed for c in checks)
    if args.out:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        _write_json(
            out_dir / "verify_report.json",
            {
                "passed": all_passed,
                "checks": [dataclasses.asdict(c) for c in checks],
                "oracle_phi_star": oracle_result.phi_star,
                "sbpg": {
                    "mu": setup.game_mu,
                    "probes": setup.game_probes,
                    "radius": setup.game_radius,
                    "epsilon": setup.game_epsilon,
                },
            },
        )
    return EXIT_OK if all_passed else EXIT_FAIL


def _parse_windows(spec: str, horizon: int):
    windows = []
    for token in spec.replace(",", " ").split():
        lo, hi = token.split(":")
        lo, hi = int(lo), int(hi)
        if not 0 <= lo < hi:
            raise ConfigFileError(f"bad iteration window '{token}'")
        windows.append((lo, min(hi, horizon)))
    return windows


def cmd_compare(args) -> int:
    setup = _setup_from_args(args)
    horizon = setup.run_cfg.iterations + 1
    window_spec = (args.window or setup.config.raw.get("compare.windows")
                   or "0:50 50:100 100:150 150:200")
    windows = _parse_windows(window_spec, horizon)
    result = _solve_oracle(setup, mu=setup.run_cfg.mu)
    print(f"oracle phi_star = {result.phi_star:.9g} "
          f"(certificate residual {result.certificate_residual:.3e})")
    header = "seed  " + "  ".join(f"{lo}:{hi}" for lo, hi in windows)
    print(header)
    passes = 0
    first_gaps = []
    for offset in range(args.seeds):
        cfg_s = dataclasses.replace(setup.run_cfg, seed=setup.run_cfg.seed + offset)
        trace = run(setup.problem, setup.w, cfg_s, setup.initial_y, setup.reporters)
        gaps = []
        for lo, hi in windows:
            mean_phi = float(np.mean(trace.phi_fictitious[lo:hi]))
            gaps.append(abs(mean_phi - result.phi_star) / max(1e-30, abs(result.phi_star)))
        first_gaps.append(gaps[0])
        if args.tol is None or gaps[0] <= args.tol:
            passes += 1
        print(f"{cfg_s.seed:<5} " + "  ".join(f"{g:9.3e}" for g in gaps))
    if args.tol is not None:
        needed = args.min_pass if args.min_pass is not None else args.seeds
        print(f"{passes}/{args.seeds} seeds within {args.tol:g} on window "
              f"{windows[0][0]}:{windows[0][1]} (need {needed})")
        return EXIT_OK if passes >= needed else EXIT_FAIL
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument plumbing
# ---------------------------------------------------------------------------

def _setup_from_args(args) -> RunSetup:
    cfg = _resolve_config(args.config)
    for item in args.set or []:
        if "=" not in item:
            raise ConfigFileError(f"--set expects key=value, got '{item}'")
        key, value = item.split("=", 1)
        cfg.override(key.strip(), value.strip())
    if getattr(args, "iterations", None) is not None:
        cfg.override("run.iterations", args.iterations)
    if getattr(args, "seed", None) is not None:
        cfg.override("run.seed", args.seed)
    return build_setup(cfg)


def _add_common(parser: argparse.ArgumentParser):
    parser.add_argument("config", help="config file path or bundled config name")
    parser.add_argument("--set", action="append", metavar="KEY=VALUE",
                        help="override a config key (repeatable)")
    parser.add_argument("--iterations", type=int, default=None,
                        help="override run.iterations")
    parser.add_argument("--seed", type=int, default=None, help="override run.seed")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="e2eqos",
        description="distributed delay-budget negotiation: runs, oracle solves, checks",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run the distributed algorithm, write trace + summary")
    _add_common(p_run)
    p_run.add_argument("--out", default=".", help="output directory (default: .)")
    p_run.add_argument("--oracle", default=None,
                       help="optimum.json to report the optimality gap against")
    p_run.set_defaults(func=cmd_run)

    p_oracle = sub.add_parser("oracle", help="centralized solve, write optimum.json")
    _add_common(p_oracle)
    p_oracle.add_argument("--out", default=".", help="output directory (default: .)")
    p_oracle.set_defaults(func=cmd_oracle)

    p_verify = sub.add_parser("verify", help="run the invariant suite, print pass/fail table")
    _add_common(p_verify)
    p_verify.add_argument("--out", default=None, help="also write verify_report.json here")
    p_verify.set_defaults(func=cmd_verify)

    p_cmp = sub.add_parser("compare", help="relative optimality gap per iteration window")
    _add_common(p_cmp)
    p_cmp.add_argument("--seeds", type=int, default=1, help="number of consecutive seeds")
    p_cmp.add_argument("--window", default=None, help="windows like '150:200' (space separated)")
    p_cmp.add_argument("--tol", type=float, default=None,
                       help="pass/fail threshold on the first window")
    p_cmp.add_argument("--min-pass", type=int, default=None,
                       help="seeds required within --tol (default: all)")
    p_cmp.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse uses 2 for usage errors already
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (ConfigFileError, ConfigError, WeightMatrixError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
