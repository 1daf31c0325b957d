import csv
import hashlib
from pathlib import Path

import pytest
import yaml

from altsp.main import EXIT_CONFIG, EXIT_NUMERICAL, EXIT_OK, run_command

TEST_DATA = Path(__file__).resolve().parent.parent / "test-data"


# --------------------------------------------------------------------------- #
# Helpers
# --------------------------------------------------------------------------- #
def _run(args, out):
    return run_command([*args, "--out", str(out), "--no-progress"])


def _result(out):
    with open(out / "result.yaml", encoding="utf-8") as f:
        return yaml.safe_load(f)


def _csv(path):
    with open(path, newline="", encoding="utf-8") as f:
        return list(csv.DictReader(f))


def _config(tmp_path, text, name="run.yaml"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


@pytest.fixture
def out(tmp_path):
    return tmp_path / "out"


# --------------------------------------------------------------------------- #
# k-factor
# --------------------------------------------------------------------------- #
def test_k_factor_prints_and_records(out, capsys):
    assert _run(["k-factor", "--preset", "case1"], out) == EXIT_OK
    assert "k = 3.129" in capsys.readouterr().out

    result = _result(out)
    assert result["command"] == "k-factor"
    assert result["k"] == pytest.approx(3.1293, abs=1e-3)
    assert len(result["provenance"]["config_hash"]) == 64
    assert result["provenance"]["seed"] == 0
    assert (out / "runs.db").exists()

    from common.bootstrap import open_workspace

    workspace = open_workspace(str(out))
    try:
        runs = list(workspace.runs())
        assert [r.command for r in runs] == ["k-factor"]
        assert runs[0].status == "succeeded"
        assert [a.path for a in runs[0].artifacts] == ["result.yaml"]
    finally:
        workspace.close()


def test_missing_risks_is_a_config_error(out, capsys):
    assert _run(["k-factor"], out) == EXIT_CONFIG
    err = capsys.readouterr().err
    assert "Error:" in err
    assert "case1" in err


def test_unknown_command():
    assert run_command(["explode"]) == EXIT_CONFIG


def test_version(capsys):
    assert run_command(["--version"]) == EXIT_OK


def test_seed_must_be_an_integer(out):
    assert _run(["k-factor", "--preset", "case1", "--seed", "abc"], out) == EXIT_CONFIG


def test_unknown_config_key(tmp_path, out, capsys):
    path = _config(tmp_path, "preset: case1\noptimiser: {}\n")
    assert _run(["k-factor", "--config", str(path)], out) == EXIT_CONFIG
    assert "optimiser" in capsys.readouterr().err


# --------------------------------------------------------------------------- #
# Plans
# --------------------------------------------------------------------------- #
def test_oc_curve_of_configured_plan(out):
    config = str(TEST_DATA / "plan.yaml")
    assert _run(["oc-curve", "--config", config], out) == EXIT_OK

    rows = _csv(out / "oc.csv")
    assert len(rows) == 51
    values = [float(r["L"]) for r in rows]
    assert all(b <= a for a, b in zip(values, values[1:]))
    result = _result(out)
    assert result["plan_source"] == "config"
    assert result["provenance"]["seed"] == 3


def test_feasibility_audit(out, capsys):
    config = str(TEST_DATA / "plan.yaml")
    assert _run(["feasibility", "--config", config], out) == EXIT_OK
    assert "PLAN FEASIBILITY" in capsys.readouterr().out
    result = _result(out)
    assert result["ordering_ok"] is True
    assert result["within_bound"] is True


def test_feasibility_needs_a_plan(out):
    assert _run(["feasibility", "--preset", "case1"], out) == EXIT_CONFIG


def test_singular_plan_is_a_numerical_error(tmp_path, out):
    path = _config(
        tmp_path,
        "preset: case1\n"
        "plan:\n"
        "  stresses: [0.0, 0.5, 1.0]\n"
        "  proportions: [1.0, 0.0, 0.0]\n"
        "  n: 100\n"
        "  tau0: 3.0\n",
    )
    assert _run(["oc-curve", "--config", str(path)], out) == EXIT_NUMERICAL


def test_design_writes_plan(tmp_path, out):
    path = _config(
        tmp_path,
        "preset: case4\n"
        "objective: variance\n"
        "optimizer:\n"
        "  restarts: 1\n"
        "  screening_points: 100\n"
        "  max_outer_iters: 2\n"
        "  inner_max_evals: 100\n",
    )
    assert _run(["design", "--config", str(path)], out) == EXIT_OK
    params = {r["param"]: r["value"] for r in _csv(out / "plan.csv")}
    assert int(params["n"]) <= 200
    assert float(params["xi0"]) == 0.0
    assert float(params["xi4"]) == 1.0
    assert "V_min" in params
    assert abs(float(params["constraint_residual"])) <= 1e-4


def test_hash_is_of_config_bytes(tmp_path, monkeypatch):
    out = tmp_path / "env-out"
    monkeypatch.setenv("ALTSP_OUTPUT_DIR", str(out))
    config = TEST_DATA / "plan.yaml"
    assert run_command(["feasibility", "--config", str(config)]) == EXIT_OK
    expected = hashlib.sha256(config.read_bytes()).hexdigest()
    assert _result(out)["provenance"]["config_hash"] == expected


# --------------------------------------------------------------------------- #
# Data and studies
# --------------------------------------------------------------------------- #
def test_fit_writes_tables(out):
    data = str(TEST_DATA / "sample.csv")
    assert _run(["fit", "--data", data], out) == EXIT_OK

    names = [r["parameter"] for r in _csv(out / "fit.csv")]
    assert "pla.aic" in names and "linear.aic" in names
    assert "linear.gamma_sigma1" in names
    comparison = _csv(out / "comparison.csv")
    assert {r["model"] for r in comparison} == {"pla", "linear"}
    assert float(comparison[0]["delta_aic"]) == 0.0
    assert _result(out)["sample"]["units"] == 24


def test_fit_without_data(out):
    assert _run(["fit"], out) == EXIT_CONFIG


def test_fit_with_missing_file(out, tmp_path):
    assert _run(["fit", "--data", str(tmp_path / "none.csv")], out) == EXIT_CONFIG


def test_bench_links_is_reproducible(tmp_path):
    path = _config(tmp_path, "benchmark: {grid_points: 101}\n")
    first, second = tmp_path / "a", tmp_path / "b"
    assert _run(["bench-links", "--config", str(path)], first) == EXIT_OK
    assert _run(["bench-links", "--config", str(path)], second) == EXIT_OK

    rows = _csv(first / "sse.csv")
    assert len(rows) == 8
    assert (first / "sse.csv").read_bytes() == (second / "sse.csv").read_bytes()
    assert _result(first)["ranking"][0].startswith("pla")


def test_simulate_case_small(tmp_path, out):
    path = _config(
        tmp_path,
        "seed: 2\n"
        "case_study:\n"
        "  reps: 2\n"
        "  n_per_level: 30\n"
        "  censor_time: 1.0e+170\n"
        "  fit_max_evaluations: 3000\n",
    )
    assert _run(["simulate-case", "--config", str(path)], out) == EXIT_OK
    rows = _csv(out / "replications.csv")
    assert len(rows) == 4
    assert {r["model"] for r in rows} == {"pla", "linear"}
    assert "summaries" in _result(out)
