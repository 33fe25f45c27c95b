import numpy as np
import pytest

from ctxlab.lm import TinyLM
from ctxlab.ode import OdeDynamics
from ctxlab.rope import make_basis
from ctxlab.utils.validators import IntegratorConfig, ModelConfig


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def rk4_cfg():
    return IntegratorConfig(method="rk4", steps_per_unit_t=4)


@pytest.fixture
def euler_cfg():
    return IntegratorConfig(method="euler", steps_per_unit_t=4)


@pytest.fixture
def small_dyn():
    return OdeDynamics.initialize(8, 1, np.random.default_rng(7), std=0.1)


@pytest.fixture
def tiny_model_cfg():
    return ModelConfig(vocab_size=16, n_layers=1, n_heads=2, head_dim=4, ffn_mult=2, context_len=8, rope_base=1e4, seed=3)


@pytest.fixture
def tiny_model(tiny_model_cfg):
    return TinyLM(tiny_model_cfg)


@pytest.fixture
def base8():
    return make_basis(8, 1e4)


@pytest.fixture
def out_dir(tmp_path):
    return tmp_path / "run"
