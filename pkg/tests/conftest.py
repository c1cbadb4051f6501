"""
Shared fixtures for the squeezing gate test suite
"""
import numpy as np
import pytest

from squeezing_gate_sim.core.config import DEFAULT_CONFIG_PATH, load_config
from squeezing_gate_sim.core.gate import GateConfig

OPERATING_GRID = [0.30, 0.40, 0.50, 0.62]

LOSSLESS_CONFIG_TEXT = """\
[gate]
T = 1.0
ancilla_r = 0.6931471805599453

[opa2]
gain = 0 dB
loss = 0

[opa3]
loss = 0
"""


@pytest.fixture
def default_config_path():
    return DEFAULT_CONFIG_PATH


@pytest.fixture
def experiment():
    """The shipped experiment configuration"""
    return load_config()


@pytest.fixture
def experiment_gate(experiment):
    return experiment.gate


@pytest.fixture
def ideal_gate():
    """Lossless gate with a strong OPA2 and a very weak displacement port"""
    return GateConfig(
        T=0.5,
        ancilla_r=np.log(2),
        opa2_gain_db=80.0,
        displacement_R=1e-4,
    )


@pytest.fixture
def lossless_config_file(tmp_path):
    path = tmp_path / "lossless.ini"
    path.write_text(LOSSLESS_CONFIG_TEXT)
    return path


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
