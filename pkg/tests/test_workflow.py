"""
Run graph, artifacts and CLI exit codes
"""

import json

import pytest

from src.main import EXIT_CHECK_FAILED, EXIT_CONFIG, EXIT_NUMERIC, EXIT_OK, run
from src.storage.artifacts import ArtifactStore, flatten, format_value
from src.storage.config_loader import parse_config_text
from src.tools.identity_checks import CHECKS, evaluate_checks, run_identity_checks
from src.workflow import RunGraph, decreasing_check, make_check

PARAMS = "params.omega = 1.0\nparams.omega0 = 1.0\nparams.lambda = 0.1\n"

FOCK = "command = fock-limit\n" + PARAMS + (
    "fock.amplitudes = 0.3\nfock.k_values = 0, 1\nfock.n_sequence = 10, 100, 1000\n"
)

EVOLVE_OMEGA_ZERO = (
    "command = evolve\nparams.omega = 0.0\nparams.omega0 = 1.0\nparams.lambda = 0.1\n"
    "field.alpha_re = 1.0\nevolve.model = quantum\n"
    "propagation.t_end = 2.0\npropagation.dt_initial = 0.01\npropagation.sample_dt = 0.1\n"
)

DIAGRAM = "command = diagram\n" + PARAMS + "diagram.amplitudes = 0.25\ndiagram.lambda_small = 0.1, 0.05\n"

TRANSFORM_TOO_SMALL = "command = transform-limit\n" + PARAMS + (
    "transform.amplitude = 0.3\ntransform.lambda_sequence = 0.1, 0.05\ntruncation.N = 10\n"
)


def _config(text, out_dir):
    return parse_config_text(text, overrides={"output.path": str(out_dir)})


def _write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return str(path)


# ========== CHECK HELPERS ==========


def test_make_check_defaults_to_tolerance():
    assert make_check("a", "d", 0.5, 1.0)["passed"] is True
    assert make_check("a", "d", 2.0, 1.0)["passed"] is False
    assert make_check("a", "d", 2.0, 1.0, passed=True)["passed"] is True


def test_decreasing_check():
    assert decreasing_check("c", [3.0, 2.0, 1.0])["passed"]
    assert not decreasing_check("c", [3.0, 3.0, 1.0])["passed"]
    assert decreasing_check("c", [0.0, 0.0])["passed"]
    assert decreasing_check("c", [4.0, 1.0])["max_residual"] == pytest.approx(0.25)


def test_evaluate_checks():
    summary = evaluate_checks([make_check("a", "", 0.0, 1.0), make_check("b", "", 2.0, 1.0)])
    assert summary == {"total": 2, "passed_count": 1, "all_passed": False, "first_failure": "b"}
    with pytest.raises(ValueError):
        evaluate_checks([])


def test_identity_checks_are_seeded():
    first = run_identity_checks(samples=1, seed=11)
    second = run_identity_checks(samples=1, seed=11)
    assert len(first) == len(CHECKS) >= 12
    assert [r["max_residual"] for r in first] == [r["max_residual"] for r in second]


# ========== ARTIFACTS ==========


def test_format_value():
    assert format_value(0.1) == "0.1"
    assert format_value(1.0 / 3.0) == repr(1.0 / 3.0)
    assert format_value(True) == "true"
    assert format_value(3) == "3"
    assert format_value(None) == ""


def test_flatten_nested_header():
    assert flatten({"params": {"omega": 1.0, "lambda": 0.1}, "seed": 3}) == {
        "params.omega": 1.0,
        "params.lambda": 0.1,
        "seed": 3,
    }


def test_csv_header_block_and_crlf(tmp_path):
    store = ArtifactStore(tmp_path)
    path = store.write_csv("t.csv", {"params": {"omega": 1.0}}, ["x", "label"], [(0.1, "a,b")])
    raw = path.read_bytes().decode("utf-8")
    assert raw == '# params.omega = 1.0\r\nx,label\r\n0.1,"a,b"\r\n'
    assert store.written == ["t.csv"]


def test_json_keeps_field_order(tmp_path):
    store = ArtifactStore(tmp_path)
    path = store.write_json("r.json", {"zeta": 1, "alpha": complex(1.0, -2.0), "mid": [1.5]})
    loaded = json.loads(path.read_text(encoding="utf-8"))
    assert list(loaded) == ["zeta", "alpha", "mid"]
    assert loaded["alpha"] == {"re": 1.0, "im": -2.0}


# ========== RUN GRAPH ==========


def test_check_identities_run(tmp_path):
    config = _config("command = check-identities\n" + PARAMS + "checks.samples = 2\n", tmp_path)
    result = RunGraph().run(config)
    assert result.get("error") is None
    assert len(result["checks"]) >= 12
    assert (tmp_path / "checks.csv").is_file()
    report = json.loads((tmp_path / "report.json").read_text(encoding="utf-8"))
    assert report["summary"]["total"] == len(result["checks"])
    assert report["artifacts"][-1] == "report.json"


def test_fock_limit_run_writes_artifacts(tmp_path):
    result = RunGraph().run(_config(FOCK, tmp_path))
    assert result["phase"] == "reported"
    assert result["all_passed"] is True
    assert result["artifacts"] == ["fock_limit.csv", "plot_fock_limit.py", "report.json"]
    lines = (tmp_path / "fock_limit.csv").read_text(encoding="utf-8").splitlines()
    assert "# command = fock-limit" in lines
    assert "# params.lambda = 0.1" in lines
    assert "amplitude,k,variant,n,element_value,bessel_target,abs_err" in lines


def test_evolve_omega_zero_run(tmp_path):
    result = RunGraph().run(_config(EVOLVE_OMEGA_ZERO, tmp_path))
    assert result["all_passed"] is True
    names = [c["name"] for c in result["checks"]]
    assert names == ["omega_zero_oracle", "norm_drift", "time_reversal"]


def test_rerun_is_byte_identical(tmp_path):
    config = _config(FOCK, tmp_path)
    RunGraph().run(config)
    first = {p.name: p.read_bytes() for p in tmp_path.iterdir()}
    RunGraph().run(config)
    second = {p.name: p.read_bytes() for p in tmp_path.iterdir()}
    assert first == second


def test_truncation_failure_is_numeric(tmp_path):
    result = RunGraph().run(_config(TRANSFORM_TOO_SMALL, tmp_path))
    assert result["error_kind"] == "numeric"
    assert "TruncationTooSmall" in result["error"]
    report = json.loads((tmp_path / "report.json").read_text(encoding="utf-8"))
    assert report["error"] == result["error"]


# ========== CLI ==========


def test_cli_success(tmp_path):
    path = _write(tmp_path, "fock.conf", FOCK)
    assert run(["fock-limit", "--config", path, "--out", str(tmp_path / "out")]) == EXIT_OK
    assert (tmp_path / "out" / "report.json").is_file()


def test_cli_config_errors(tmp_path, capsys):
    bad = _write(tmp_path, "bad.conf", FOCK.replace("params.omega0 = 1.0", "params.omega0 = 0.0"))
    assert run(["fock-limit", "--config", bad, "--out", str(tmp_path / "out")]) == EXIT_CONFIG
    assert "omega0 > 0" in capsys.readouterr().err
    unknown = _write(tmp_path, "unknown.conf", FOCK + "fock.nsequence = 1, 2\n")
    assert run(["fock-limit", "--config", unknown]) == EXIT_CONFIG
    assert "fock.nsequence" in capsys.readouterr().err


def test_cli_numeric_failure(tmp_path):
    path = _write(tmp_path, "transform.conf", TRANSFORM_TOO_SMALL)
    assert run(["transform-limit", "--config", path, "--out", str(tmp_path / "out")]) == EXIT_NUMERIC


def test_cli_check_failure_names_the_check(tmp_path, capsys):
    path = _write(tmp_path, "diagram.conf", DIAGRAM)
    out = str(tmp_path / "out")
    assert run(["diagram", "--config", path, "--out", out, "--tolerance-scale", "0.01"]) == EXIT_CHECK_FAILED
    assert "check failed: diagram_ratio_A0.25" in capsys.readouterr().err
