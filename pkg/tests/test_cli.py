"""End-to-end command-line tests via subprocess.

Most invocations set E2EQOS_DISABLE_NUMBA=1 so the subprocess skips the JIT
import; the kernel tests prove both paths produce bit-identical numbers.
"""

import json
import os
import subprocess
import sys

import pytest

CHAIN_HEADER = "t,gamma,phi_true,phi_fictitious,g_1,e_1_1,e_2_1"
FIVE_G_HEADER = ",".join(
    ["t", "gamma", "phi_true", "phi_fictitious"]
    + [f"g_{c}" for c in (1, 2, 3, 4)]
    + [f"e_{i}_{c}" for i in (1, 2, 3) for c in (1, 2, 3, 4)]
    + ["d_e2e_11", "d_e2e_12", "d_e2e_21", "d_e2e_22"]
)


def cli(*args, timeout=300):
    env = dict(os.environ, E2EQOS_DISABLE_NUMBA="1")
    return subprocess.run(
        [sys.executable, "-m", "e2eqos.cli", *map(str, args)],
        capture_output=True, text=True, timeout=timeout, env=env,
    )


class TestRunCommand:
    def test_chain_run_writes_trace_and_summary(self, tmp_path):
        out = cli("run", "routing_chain", "--iterations", 20, "--out", tmp_path)
        assert out.returncode == 0, out.stderr
        lines = (tmp_path / "trace.csv").read_text().splitlines()
        assert lines[0] == CHAIN_HEADER
        assert len(lines) == 1 + 21  # header + iterations+1 records
        assert lines[1].split(",")[0] == "0"
        assert lines[-1].split(",")[0] == "20"

        summary = json.loads((tmp_path / "summary.json").read_text())
        assert set(summary) == {
            "seed", "config", "final_phi_fictitious", "final_phi_true",
            "mean_phi_fictitious_last_50", "iterations", "wall_clock_seconds",
        }
        assert summary["iterations"] == 20
        assert summary["seed"] == 1  # from the bundled config

    def test_five_g_run_header_and_shape(self, tmp_path):
        out = cli("run", "case5g", "--iterations", 5, "--out", tmp_path)
        assert out.returncode == 0, out.stderr
        lines = (tmp_path / "trace.csv").read_text().splitlines()
        assert lines[0] == FIVE_G_HEADER
        assert len(lines) == 1 + 6
        assert all(len(row.split(",")) == len(FIVE_G_HEADER.split(","))
                   for row in lines[1:])

    def test_zero_iterations_records_initial_point_only(self, tmp_path):
        out = cli("run", "routing_chain", "--iterations", 0, "--out", tmp_path)
        assert out.returncode == 0, out.stderr
        lines = (tmp_path / "trace.csv").read_text().splitlines()
        assert len(lines) == 2

    def test_identical_invocations_give_identical_bytes(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        for out_dir in (a, b):
            out = cli("run", "case5g", "--iterations", 30, "--out", out_dir)
            assert out.returncode == 0, out.stderr
        assert (a / "trace.csv").read_bytes() == (b / "trace.csv").read_bytes()

    def test_seed_changes_the_trace(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        cli("run", "case5g", "--iterations", 30, "--out", a)
        cli("run", "case5g", "--iterations", 30, "--seed", 8, "--out", b)
        assert (a / "trace.csv").read_bytes() != (b / "trace.csv").read_bytes()

    def test_set_override_lands_in_summary(self, tmp_path):
        out = cli("run", "routing_chain", "--iterations", 5,
                  "--set", "run.seed=9", "--out", tmp_path)
        assert out.returncode == 0, out.stderr
        summary = json.loads((tmp_path / "summary.json").read_text())
        assert summary["seed"] == 9
        assert summary["config"]["run.seed"] == "9"

    def test_oracle_gap_reported_when_reference_given(self, tmp_path):
        assert cli("oracle", "routing_chain", "--set", "oracle.restarts=2",
                   "--out", tmp_path).returncode == 0
        out = cli("run", "routing_chain", "--iterations", 50, "--out", tmp_path,
                  "--oracle", tmp_path / "optimum.json")
        assert out.returncode == 0, out.stderr
        summary = json.loads((tmp_path / "summary.json").read_text())
        assert "oracle_phi_star" in summary and "oracle_gap_last_50" in summary
        assert summary["oracle_gap_last_50"] >= 0.0


class TestUsageErrors:
    def test_missing_config_exits_2_and_lists_bundled(self, tmp_path):
        out = cli("run", "nosuch.cfg", "--out", tmp_path)
        assert out.returncode == 2
        assert "neither a file nor a bundled config" in out.stderr
        assert "case5g, routing_chain" in out.stderr

    def test_unknown_config_key_exits_2(self, tmp_path):
        out = cli("run", "routing_chain", "--set", "bogus.key=1", "--out", tmp_path)
        assert out.returncode == 2
        assert "unknown config key(s): bogus.key" in out.stderr

    def test_malformed_set_exits_2(self, tmp_path):
        out = cli("run", "routing_chain", "--set", "bogus", "--out", tmp_path)
        assert out.returncode == 2
        assert "--set expects key=value" in out.stderr

    def test_no_command_exits_2(self):
        assert cli().returncode == 2

    def test_bad_scenario_value_exits_2(self, tmp_path):
        out = cli("run", "routing_chain", "--set", "scenario=warp", "--out", tmp_path)
        assert out.returncode == 2
        assert "unknown scenario 'warp'" in out.stderr


class TestOracleCommand:
    def test_writes_optimum_json(self, tmp_path):
        out = cli("oracle", "routing_chain", "--set", "oracle.restarts=2",
                  "--out", tmp_path)
        assert out.returncode == 0, out.stderr
        payload = json.loads((tmp_path / "optimum.json").read_text())
        assert set(payload) >= {
            "mu", "phi_star", "converged", "certificate_residual",
            "restart_values", "restart_converged", "iterations_used",
            "wall_clock_seconds", "y_star",
        }
        assert isinstance(payload["converged"], bool)
        assert payload["certificate_residual"] <= 1e-6
        assert len(payload["restart_values"]) == 2
        assert payload["phi_star"] == min(payload["restart_values"])
        assert set(payload["y_star"]) == {"agent_0", "agent_1"}
        # routing scenarios have no end-to-end delay KPI
        assert "realized_e2e_delays" not in payload
        assert "phi_star =" in out.stdout

    def test_solution_reproducible_across_invocations(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        for out_dir in (a, b):
            assert cli("oracle", "routing_chain", "--set", "oracle.restarts=2",
                       "--out", out_dir).returncode == 0
        pa = json.loads((a / "optimum.json").read_text())
        pb = json.loads((b / "optimum.json").read_text())
        pa.pop("wall_clock_seconds"), pb.pop("wall_clock_seconds")
        assert pa == pb


class TestVerifyCommand:
    def test_chain_scenario_passes_all_checks(self, tmp_path):
        out = cli("verify", "routing_chain",
                  "--set", "game.probes=200", "--set", "oracle.restarts=2",
                  "--out", tmp_path)
        assert out.returncode == 0, out.stdout + out.stderr
        for name in ("weights_accept", "weights_reject_identity",
                     "weights_reject_negative", "mean_preservation",
                     "gradient_fd", "projection_properties",
                     "sbpg_no_improvement", "sbpg_negative_control"):
            assert name in out.stdout
        assert "FAIL" not in out.stdout
        report = json.loads((tmp_path / "verify_report.json").read_text())
        assert report["passed"] is True
        assert len(report["checks"]) == 8

    def test_disconnected_weights_rejected_as_config_error(self):
        out = cli("verify", "routing_chain",
                  "--set", "w.row0=1.0 0.0", "--set", "w.row1=0.0 1.0",
                  "--set", "game.probes=50", "--set", "oracle.restarts=1")
        assert out.returncode == 2
        assert "no directed path" in out.stderr

    def test_unachievable_epsilon_fails_negative_control(self):
        # with an absurd improvement threshold the perturbed point looks
        # stationary too, so the negative control must report a failure
        out = cli("verify", "routing_chain",
                  "--set", "game.epsilon=1e12",
                  "--set", "game.probes=50", "--set", "oracle.restarts=1")
        assert out.returncode == 1
        assert "FAIL" in out.stdout
        assert "no deviation found (unexpected)" in out.stdout


class TestCompareCommand:
    def test_reports_windows_and_passes_loose_tolerance(self):
        out = cli("compare", "routing_chain", "--iterations", 60, "--seeds", 2,
                  "--window", "30:60", "--tol", 10.0,
                  "--set", "oracle.restarts=2")
        assert out.returncode == 0, out.stdout + out.stderr
        assert "oracle phi_star" in out.stdout
        assert "2/2 seeds within 10" in out.stdout

    def test_impossible_tolerance_fails(self):
        out = cli("compare", "routing_chain", "--iterations", 30,
                  "--window", "0:30", "--tol", 1e-30,
                  "--set", "oracle.restarts=1")
        assert out.returncode == 1

    def test_min_pass_relaxes_requirement(self):
        out = cli("compare", "routing_chain", "--iterations", 30, "--seeds", 2,
                  "--window", "0:30", "--tol", 1e-30, "--min-pass", 0,
                  "--set", "oracle.restarts=1")
        assert out.returncode == 0
