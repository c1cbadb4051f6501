"""
Tests for experiment configuration parsing
"""
import numpy as np
import pytest
import yaml

from squeezing_gate_sim.core.config import (
    AUTO,
    RunManifest,
    canonical_text,
    config_digest,
    load_config,
    parse_config,
)
from squeezing_gate_sim.core.errors import ConfigError
from squeezing_gate_sim.core.opa import efficiency

MINIMAL = """\
[gate]
T = 0.5
ancilla_r = 1.0

[opa2]
gain = 30 dB
loss = 0.1

[opa3]
loss = 0.2
"""

EXPERIMENT_YAML = """\
gate:
  T: 0.5
  ancilla_squeezing: 3.6 dB
  ancilla_antisqueezing: 9.3 dB
  displacement_R: 1%
  ff_attenuation: auto
  phase_error: 0 deg
opa2:
  gain: 28.4 dB
  loss: 15%
opa3:
  gain: 20.7 dB
  loss: 21%
spectral:
  delta_tau_fs: 0
  gdd_fs2: 0
  mask_inner_thz: 0.1
  mask_outer_thz: 1.3
"""


def _error(text, syntax="text"):
    with pytest.raises(ConfigError) as excinfo:
        parse_config(text, "test.ini", syntax)
    return excinfo.value


def test_default_config_reproduces_experiment(experiment):
    gate = experiment.gate
    assert gate.T == 0.5
    assert gate.ancilla_s_minus == pytest.approx(10 ** -0.36)
    assert gate.ancilla_s_plus == pytest.approx(10 ** 0.93)
    assert gate.l2 == pytest.approx(0.15)
    assert gate.l3 == pytest.approx(0.21)
    assert gate.opa2_gain_db == pytest.approx(28.4)
    assert gate.opa3_gain_db == pytest.approx(20.7)
    assert gate.displacement_R == pytest.approx(0.01)
    assert gate.ff_attenuation == AUTO
    assert gate.phase_error == 0.0
    assert gate.feedforward_enabled is True
    assert gate.opa2_spec is None

    assert experiment.spectral.mask_inner == pytest.approx(0.1e12)
    assert experiment.spectral.mask_outer == pytest.approx(1.3e12)
    assert experiment.path.endswith("experiment.ini")


def test_defaults_are_materialised():
    config = parse_config(MINIMAL)
    assert config.values["gate.l1"] == 0.0
    assert config.values["gate.displacement_R"] == 0.01
    assert config.values["gate.ff_attenuation"] == AUTO
    assert config.values["gate.feedforward"] is True
    assert config.values["spectral.mask_outer_thz"] == 1.3
    assert "opa3.gain" not in config.values
    assert "opa2.length" not in config.values
    assert config.gate.opa3_gain_db is None


def test_unit_suffixes():
    config = parse_config(MINIMAL.replace("gain = 30 dB", "gain = 1000"))
    assert config.gate.opa2_gain_db == pytest.approx(30.0)

    text = MINIMAL.replace(
        "ancilla_r = 1.0",
        "ancilla_r = 1.0\nff_attenuation = -10 dB\nphase_error = 1 deg\nfeedforward = no\nl1 = 2.5%",
    )
    gate = parse_config(text).gate
    assert gate.ff_attenuation == pytest.approx(0.1)
    assert gate.phase_error == pytest.approx(np.pi / 180)
    assert gate.feedforward_enabled is False
    assert gate.l1 == pytest.approx(0.025)

    gate = parse_config(MINIMAL.replace("ancilla_r = 1.0", "ancilla_r = 1.0\nff_attenuation = 10%")).gate
    assert gate.ff_attenuation == pytest.approx(0.1)


def test_squeezing_magnitudes_ignore_sign():
    text = MINIMAL.replace(
        "ancilla_r = 1.0", "ancilla_squeezing = -3.6 dB\nancilla_antisqueezing = 9.3 dB"
    )
    assert parse_config(text).gate.ancilla_s_minus == pytest.approx(10 ** -0.36)


def test_comments_and_blank_lines():
    text = "# experiment\n\n" + MINIMAL.replace("T = 0.5", "T = 0.5   ; half\n; whole line")
    assert parse_config(text).gate.T == 0.5


def test_split_opa2_loss_builds_waveguide():
    text = MINIMAL.replace(
        "loss = 0.1\n", "coupling_loss = 11%\npropagation_loss = 5%\nlength = 2\n", 1
    )
    config = parse_config(text)
    gate = config.gate
    assert gate.opa2_spec is not None
    assert gate.opa2_spec.L == 2.0
    assert efficiency(gate.opa2_spec) == pytest.approx(0.95, rel=1e-9)
    assert gate.opa2_spec.gain_db == pytest.approx(30.0, rel=1e-9)
    assert gate.opa2_coupling_loss == pytest.approx(0.11)
    assert gate.l2 == pytest.approx(0.1545)
    assert config.values["opa2.length"] == 2.0


@pytest.mark.parametrize(
    "text, message, line, column",
    [
        ("[gate]\nT = 0.5\nfoo = 1\n", "unknown key `gate.foo`", 3, 1),
        ("[bogus]\nT = 0.5\n", "unknown section [bogus]", 1, 2),
        ("[gate]\nT = 0.5\nT = 0.6\n", "duplicate key `gate.T`", 3, 1),
        ("[gate]\nT 0.5\n", "expected `key = value`", 2, 1),
        ("[gate]\nT = abc\n", "expects a number", 2, 5),
        ("[gate]\nT = 0.5 dB\n", "does not accept suffix", 2, 5),
        ("[gate]\nT = 1.5\n", "must lie in (0, 1]", 2, 5),
        ("[gate]\n  feedforward = maybe\n", "expects a boolean", 2, 17),
        ("T = 0.5\n", "outside of a section", 1, 1),
        ("[gate\n", "malformed section header", 1, 1),
    ],
)
def test_errors_carry_position(text, message, line, column):
    error = _error(text)
    assert message in error.message
    assert (error.line, error.column) == (line, column)
    assert str(error).startswith(f"test.ini:{line}:{column}: ")


def test_missing_required_key():
    error = _error("[gate]\nancilla_r = 1.0\n")
    assert "missing required key `gate.T`" in str(error)
    assert error.key == "gate.T"

    error = _error(MINIMAL.replace("loss = 0.2\n", ""))
    assert "`opa3.loss`" in str(error)


def test_alternative_forms_are_exclusive():
    both = MINIMAL.replace("ancilla_r = 1.0", "ancilla_r = 1.0\nancilla_squeezing = 3 dB\nancilla_antisqueezing = 6 dB")
    assert "cannot be combined" in _error(both).message

    half = MINIMAL.replace("ancilla_r = 1.0", "ancilla_squeezing = 3 dB")
    assert "missing required key `gate.ancilla_antisqueezing`" in _error(half).message

    neither = MINIMAL.replace("ancilla_r = 1.0\n", "")
    assert "`gate.ancilla_r`" in _error(neither).message

    mixed = MINIMAL.replace("loss = 0.1", "loss = 0.1\ncoupling_loss = 0.1\npropagation_loss = 0.05")
    assert "cannot be combined" in _error(mixed).message

    length = MINIMAL.replace("loss = 0.1", "loss = 0.1\nlength = 2")
    assert "`opa2.length`" in _error(length).message


def test_inconsistent_ancilla_pair_is_a_config_error():
    text = MINIMAL.replace("ancilla_r = 1.0", "ancilla_squeezing = 3.6 dB\nancilla_antisqueezing = 1 dB")
    assert "outside [0, 1)" in _error(text).message


def test_yaml_matches_text(experiment, tmp_path):
    path = tmp_path / "experiment.yml"
    path.write_text(EXPERIMENT_YAML)
    config = load_config(path)
    assert config.values == experiment.values
    assert config_digest(config) == config_digest(experiment)


def test_yaml_errors():
    error = _error("gate: [unclosed\n", "yaml")
    assert error.line is not None and error.column is not None
    assert "invalid YAML" in error.message

    error = _error("gate:\n  T: [1, 2]\n", "yaml")
    assert "must be a scalar" in error.message
    assert error.line == 2

    error = _error("gate:\n  T: 0.5\n  nope: 1\n", "yaml")
    assert "unknown key `gate.nope`" in error.message
    assert error.line == 3

    assert "top level" in _error("- 1\n- 2\n", "yaml").message
    with pytest.raises(ConfigError):
        parse_config(MINIMAL, syntax="toml")


def test_load_config_errors(tmp_path):
    with pytest.raises(ConfigError, match="cannot read config"):
        load_config(tmp_path / "absent.ini")

    path = tmp_path / "broken.ini"
    path.write_text("[gate]\nT = zero\n")
    with pytest.raises(ConfigError) as excinfo:
        load_config(path)
    assert str(excinfo.value).startswith(f"{path}:2:5: ")


def test_canonical_text_and_digest(experiment):
    text = canonical_text(experiment)
    lines = text.splitlines()
    assert lines == sorted(lines)
    assert text.endswith("\n")
    assert "gate.T=0.5" in lines
    assert "gate.ff_attenuation=auto" in lines
    assert "gate.feedforward=true" in lines
    assert any(line.startswith("opa2.gain=28.39999999999999") and line.endswith(" dB") for line in lines)

    digest = config_digest(experiment)
    assert len(digest) == 64
    assert digest == config_digest(load_config())
    assert digest != config_digest(parse_config(MINIMAL))


def test_run_manifest(experiment, tmp_path):
    manifest = RunManifest.for_run("sweep", experiment)
    assert manifest.digest == config_digest(experiment)
    assert manifest.config["gate"]["T"] == 0.5
    assert manifest.config["opa2"]["gain"] == pytest.approx(28.4)

    path = tmp_path / "manifest.yml"
    manifest.write(path)
    written = yaml.safe_load(path.read_text())
    assert written == manifest.to_dict()
    assert set(written) == {"command", "config", "version", "digest"}
