import numpy as np
import pytest

from armplay import kernels
from armplay.arm import load_arm_config


@pytest.fixture(scope="session")
def arm_cfg():
    chain, safety = load_arm_config()
    kernels.warmup()
    return chain, safety


@pytest.fixture(scope="session")
def chain(arm_cfg):
    return arm_cfg[0]


@pytest.fixture(scope="session")
def safety(arm_cfg):
    return arm_cfg[1]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
