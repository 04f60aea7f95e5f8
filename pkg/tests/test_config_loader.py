"""
Key = value run configuration parsing and validation
"""

from pathlib import Path

import pytest

from src.errors import ConfigParseError, ConfigValidationError
from src.storage.config_loader import ensure_writable, parse_config, parse_config_text

CONFIGS = Path(__file__).resolve().parent.parent / "configs"

BASE = """\
# resonant sweep
command = sweep
params.omega = 1.0
params.omega0 = 1.0
params.lambda = 0.1
sweep.amplitude_fixed = 0.5
sweep.lambda_sequence = 0.2, 0.1, 0.05
"""


def test_minimal_sweep_config():
    config = parse_config_text(BASE)
    assert config.command == "sweep"
    assert config.params.lam == 0.1
    assert config.sweep.lambda_sequence == [0.2, 0.1, 0.05]
    assert config.tolerance_scale == 1.0
    assert config.fock is None


def test_sweep_config_takes_shared_cutoffs():
    config = parse_config_text(BASE + "cutoffs.p_max = 40\n")
    assert config.sweep_config().cutoffs.p_max == 40


def test_negative_omega0_rejected():
    with pytest.raises(ConfigValidationError, match="omega0 > 0"):
        parse_config_text(BASE.replace("params.omega0 = 1.0", "params.omega0 = -1.0"))


def test_unknown_key_named():
    with pytest.raises(ConfigParseError, match="params.lamda"):
        parse_config_text(BASE + "params.lamda = 0.2\n")


def test_unknown_section_and_top_level_key():
    with pytest.raises(ConfigParseError, match="plot.style"):
        parse_config_text(BASE + "plot.style = dark\n")
    with pytest.raises(ConfigParseError, match="verbose"):
        parse_config_text(BASE + "verbose = 1\n")


def test_duplicate_key_rejected():
    with pytest.raises(ConfigParseError, match="duplicate key 'params.omega'"):
        parse_config_text(BASE + "params.omega = 2.0\n")


def test_malformed_line_reports_line_number():
    with pytest.raises(ConfigParseError, match=r"<config>:8: malformed line"):
        parse_config_text(BASE + "params.omega 1.0\n")


def test_missing_section_rejected():
    text = "command = compare\nparams.omega = 1.0\nparams.omega0 = 1.0\nparams.lambda = 0.1\n"
    with pytest.raises(ConfigValidationError, match="requires section"):
        parse_config_text(text)


def test_sequence_must_decrease():
    with pytest.raises(ConfigValidationError, match="lambda_sequence"):
        parse_config_text(BASE.replace("0.2, 0.1, 0.05", "0.1, 0.2"))


def test_semiclassical_evolve_needs_drive():
    text = (
        "command = evolve\nparams.omega = 1.0\nparams.omega0 = 1.0\nparams.lambda = 0.1\n"
        "evolve.model = semiclassical\npropagation.t_end = 1.0\npropagation.dt_initial = 0.01\n"
    )
    with pytest.raises(ConfigValidationError, match="drive"):
        parse_config_text(text)
    config = parse_config_text(text + "drive.amplitude = 0.3\n")
    assert config.drive.amplitude == 0.3


def test_overrides_replace_file_values():
    config = parse_config_text(
        BASE, overrides={"command": "sweep", "seed": "7", "tolerance_scale": "2.5", "output.path": "elsewhere"}
    )
    assert config.seed == 7
    assert config.tolerance_scale == 2.5
    assert config.output.path == "elsewhere"


def test_non_positive_tolerance_scale_rejected():
    with pytest.raises(ConfigValidationError, match="tolerance_scale"):
        parse_config_text(BASE, overrides={"tolerance_scale": "0"})


def test_list_fields_parse_from_text():
    text = (
        "command = fock-limit\nparams.omega = 1.0\nparams.omega0 = 1.0\nparams.lambda = 0.1\n"
        "fock.amplitudes = 0.3, 1.0\nfock.k_values = 0,1, 2\nfock.n_sequence = 10, 100\n"
    )
    config = parse_config_text(text)
    assert config.fock.amplitudes == [0.3, 1.0]
    assert config.fock.k_values == [0, 1, 2]
    assert config.fock.n_sequence == [10, 100]


def test_truncation_guard_band_default():
    config = parse_config_text(BASE + "truncation.N = 100\n")
    assert config.truncation.guard_band == 40


def test_missing_file(tmp_path):
    with pytest.raises(ConfigParseError, match="not found"):
        parse_config(tmp_path / "absent.conf")


def test_parse_config_reads_file(tmp_path):
    path = tmp_path / "sweep.conf"
    path.write_text(BASE, encoding="utf-8")
    assert parse_config(path).sweep.amplitude_fixed == 0.5


def test_ensure_writable_rejects_file(tmp_path):
    blocker = tmp_path / "blocker"
    blocker.write_text("x")
    with pytest.raises(ConfigValidationError, match="output.path"):
        ensure_writable(blocker / "out")


def test_shipped_compare_config_collapse_point():
    section = parse_config(CONFIGS / "compare.conf").compare
    assert (section.collapse_lambda, section.collapse_alpha) == (0.5, 3.0)
    assert (section.collapse_window, section.collapse_t_end) == (5.0, 30.0)


def test_propagation_error_tolerance():
    text = (
        "command = evolve\nparams.omega = 1.0\nparams.omega0 = 1.0\nparams.lambda = 0.1\n"
        "field.alpha_re = 1.0\nevolve.model = quantum\n"
        "propagation.t_end = 2.0\npropagation.dt_initial = 0.01\n"
    )
    assert parse_config_text(text).propagation.error_tolerance is None
    config = parse_config_text(text + "propagation.error_tolerance = 1e-8\n")
    assert config.propagation.error_tolerance == 1.0e-8
    with pytest.raises(ConfigValidationError, match="error_tolerance"):
        parse_config_text(text + "propagation.error_tolerance = -1\n")
