"""Make the package importable from source and share small numeric configs."""

from __future__ import annotations

import sys
from pathlib import Path

import pytest

SRC_DIR = Path(__file__).resolve().parents[1] / "src"
if str(SRC_DIR) not in sys.path:
    sys.path.insert(0, str(SRC_DIR))

from levy_drawdown.config import InversionConfig, QuadratureConfig, SimConfig  # noqa: E402
from levy_drawdown.levy_models import BrownianDrift, CramerLundbergExp, JumpDiffusionErlang2  # noqa: E402


@pytest.fixture
def cl_model():
    return CramerLundbergExp(c=1.1, lambda0=2.0, mu_claim=2.0)


@pytest.fixture
def loaded_cl():
    """Large safety loading: ruin probability exp(-x/2) / 2."""
    return CramerLundbergExp(c=2.0, lambda0=1.0, mu_claim=1.0)


@pytest.fixture
def bm_model():
    return BrownianDrift(mu=0.3, sigma=1.0)


@pytest.fixture
def jd_model():
    return JumpDiffusionErlang2(c=3.0, sigma=0.5, lambda0=2.0, alpha=2.0)


@pytest.fixture
def quad_cfg():
    return QuadratureConfig()


@pytest.fixture
def small_inversion():
    return InversionConfig(n_terms=40, euler_terms=12)


@pytest.fixture
def small_sim():
    return SimConfig(n_paths=4000, chunk_size=2000, horizon=60.0, dt=2e-3, max_dt=0.05, seed=7)
