"""Command-line interface: config handling, artifacts, exit codes, determinism."""

import json
from pathlib import Path

import numpy as np
import pytest

from selfsim.cli import ConfigError, main, parse_config


def _run(tmp_path, *args):
    out = tmp_path / "run"
    code = main([*args, "--out", str(out)])
    return code, out


def _manifest(out: Path) -> dict:
    return json.loads((out / "manifest.json").read_text())


# ---------------------------------------------------------------------------
# configuration


def test_parse_requires_subcommand():
    with pytest.raises(SystemExit):
        parse_config([])


def test_flag_overrides_config_file(tmp_path):
    cfg_file = tmp_path / "cfg.json"
    cfg_file.write_text(json.dumps({"eps": 0.2, "uL": 1.0, "uR": 0.0}))
    cfg = parse_config(["solve-scalar", "--config", str(cfg_file),
                        "--eps", "0.1"])
    assert cfg.eps == 0.1
    assert cfg.uL == 1.0
    assert cfg.overrides == {"eps": 0.1}


def test_unknown_config_key_rejected(tmp_path):
    cfg_file = tmp_path / "cfg.json"
    cfg_file.write_text(json.dumps({"epsilon": 0.1}))
    with pytest.raises(ConfigError, match="unknown config keys"):
        parse_config(["solve-scalar", "--config", str(cfg_file)])


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        parse_config(["solve-scalar", "--config", str(tmp_path / "nope.json")])


def test_ladder_must_decrease():
    with pytest.raises(ConfigError, match="strictly decreasing"):
        parse_config(["continuation", "--eps-ladder", "0.05,0.1"])


def test_negative_eps_rejected():
    with pytest.raises(ConfigError, match="positive"):
        parse_config(["solve-scalar", "--eps", "-0.1"])


def test_vector_data_parsing():
    cfg = parse_config(["solve-system", "--uL", "1.5,0.0", "--uR", "1.51,0.0",
                        "--eps", "0.1"])
    assert cfg.uL == [1.5, 0.0]
    assert cfg.uR == [1.51, 0.0]


# ---------------------------------------------------------------------------
# exit codes


def test_config_error_exits_1(tmp_path, capsys):
    code, _ = _run(tmp_path, "solve-scalar", "--eps", "0.1")  # missing uL/uR
    assert code == 1
    assert "config error" in capsys.readouterr().err


def test_solver_failure_exits_1_with_incomplete_manifest(tmp_path, capsys):
    # data outside the model domain is a solver-level failure
    code, out = _run(tmp_path, "solve-scalar", "--eps", "0.1",
                     "--uL", "9.0", "--uR", "0.0")
    assert code == 1
    assert _manifest(out)["complete"] is False


def test_strict_mode_passes_on_good_run(tmp_path):
    code, out = _run(tmp_path, "solve-scalar", "--eps", "0.1",
                     "--uL", "1.0", "--uR", "0.0", "--strict")
    assert code == 0
    assert _manifest(out)["complete"] is True


# ---------------------------------------------------------------------------
# artifacts per subcommand


def test_solve_scalar_artifacts(tmp_path):
    code, out = _run(tmp_path, "solve-scalar", "--eps", "0.1",
                     "--uL", "1.0", "--uR", "0.0")
    assert code == 0
    diag = json.loads((out / "diagnostics.json").read_text())
    assert diag["schema_version"] == 1
    assert diag["monotone"] is True
    assert diag["tv_u"] <= 1.0 + 1e-9
    header = (out / "solution.csv").read_text().splitlines()[0]
    assert header == "xi,u,v,h"
    assert sorted(_manifest(out)["outputs"]) == ["diagnostics.json", "solution.csv"]


def test_solve_system_artifacts(tmp_path):
    code, out = _run(tmp_path, "solve-system", "--model", "p-system",
                     "--eps", "0.1", "--uL", "1.249,0.0", "--uR", "1.251,0.0",
                     "--strict")
    assert code == 0
    diag = json.loads((out / "diagnostics.json").read_text())
    assert diag["boundary_residual"] <= 1e-6
    assert all(a < 1.0 for a in diag["contraction_estimates"])
    header = (out / "solution.csv").read_text().splitlines()[0]
    assert header == "xi,u_1,u_2,v,a_1,a_2"


def test_spectral_sweep_artifacts(tmp_path):
    code, out = _run(tmp_path, "spectral-sweep", "--model", "p-system",
                     "--eps", "0.1", "--grid", "128")
    assert code == 0
    lines = (out / "sweep.csv").read_text().splitlines()
    assert lines[0] == "xi,mu_1,mu_2,lambda_1,lambda_2,d_1,d_2"
    assert len(lines) == 129
    data = np.loadtxt(lines[1:], delimiter=",")
    np.testing.assert_allclose(data[:, 5:7], 1.0, atol=1e-12)  # d = 1, B = I


def test_verify_lemmas_fixture(tmp_path):
    code, out = _run(tmp_path, "verify-lemmas", "--model", "two-band-fixture",
                     "--eps-ladder", "0.1,0.05", "--grid", "1600", "--strict")
    assert code == 0
    report = json.loads((out / "lemma_report.json").read_text())
    assert report["passed"] is True
    csv = (out / "lemma_constants.csv").read_text().splitlines()
    assert csv[0] == "check,eps,value,passed"
    assert len(csv) > 10


def test_continuation_artifacts(tmp_path):
    code, out = _run(tmp_path, "continuation", "--eps-ladder", "0.1,0.05",
                     "--uL", "1.0", "--uR", "0.0", "--strict")
    assert code == 0
    report = json.loads((out / "continuation.json").read_text())
    assert not report["failures"]
    assert (out / "solution_eps0p1.csv").exists()
    assert (out / "solution_eps0p05.csv").exists()
    assert (out / "l1_distances.csv").exists()


def test_continuation_requires_ladder(tmp_path, capsys):
    code, _ = _run(tmp_path, "continuation", "--eps", "0.1",
                   "--uL", "1.0", "--uR", "0.0")
    assert code == 1


def test_trace_report_artifacts(tmp_path):
    code, out = _run(tmp_path, "trace-report", "--eps-ladder", "0.1,0.05",
                     "--uL", "-0.5", "--uR", "-1.0")
    assert code == 0
    report = json.loads((out / "trace_report.json").read_text())
    assert "trace_minus" in report and "trace_plus" in report


# ---------------------------------------------------------------------------
# determinism


def test_repeated_runs_byte_identical(tmp_path):
    outs = []
    for tag in ("a", "b"):
        out = tmp_path / tag
        code = main(["solve-scalar", "--eps", "0.1", "--uL", "1.0",
                     "--uR", "0.0", "--out", str(out)])
        assert code == 0
        outs.append(out)
    for name in ("solution.csv", "diagnostics.json"):
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()
    # manifests agree except for wall time and the output path itself
    m0, m1 = (_manifest(o) for o in outs)
    for m in (m0, m1):
        m["wall_time_s"] = 0.0
        m["config_sha256"] = ""
        m["config"]["out"] = ""
        m["config"]["overrides"].pop("out", None)
    assert m0 == m1
