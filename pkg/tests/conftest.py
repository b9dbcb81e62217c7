import pytest
import numpy as np
import yaml
from pathlib import Path

from core.lattice import ThetaParam, TorusElement, adjoint


@pytest.fixture
def sample_config():
    """Load the actual config.yaml for testing."""
    config_path = Path(__file__).resolve().parent.parent / "config.yaml"
    with open(config_path, "r", encoding="utf-8") as f:
        return yaml.safe_load(f)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def golden():
    return ThetaParam.golden()


@pytest.fixture
def theta_03():
    return ThetaParam(0.3)


@pytest.fixture
def rational_theta():
    """34/89 is exactly representable as a clock-and-shift pair of dimension 89."""
    return ThetaParam.rational(34, 89)


def symmetrize(term: TorusElement) -> TorusElement:
    return term + adjoint(term)


@pytest.fixture
def cosine_element(golden):
    """1 + 1/2 (W + W*) with W = UV, whose circle symbol is 1 + cos(2 pi t)."""
    return TorusElement.constant(golden) + symmetrize(TorusElement.monomial(golden, 1, 1, 0.5))
