# SPDX-License-Identifier: MIT
# Copyright 2026 The qrnet Authors

import logging

import numpy as np
import pytest

from qrnet.lqr import design_lqr
from qrnet.models.linear import double_integrator_config, scalar_config
from qrnet.models.uav import UavConfig

from .testutils import small_burgers


@pytest.fixture
def no_warnings(caplog):
    yield
    for when in ("setup", "call"):
        messages = [x.message for x in caplog.get_records(when) if x.levelno == logging.WARNING]
        if messages:
            pytest.fail("warning messages encountered during testing: {}".format(messages))


@pytest.fixture
def logs_warning(caplog):
    yield
    messages = [x.message for x in caplog.get_records("call") if x.levelno == logging.WARNING]
    if not messages:
        pytest.fail(f"No warning messages were logged: {messages}")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def scalar_model():
    return scalar_config(a=1.0).build()


@pytest.fixture
def double_integrator():
    return double_integrator_config().build()


@pytest.fixture
def bounded_double_integrator():
    config = double_integrator_config()
    config.u_min, config.u_max = [-1.0], [1.0]
    return config.build()


@pytest.fixture
def burgers():
    return small_burgers(8)


@pytest.fixture
def bounded_burgers():
    return small_burgers(8, bounded=True)


@pytest.fixture(scope="session")
def uav():
    return UavConfig().build()


@pytest.fixture(scope="session")
def uav_lqr(uav):
    return design_lqr(uav)


@pytest.fixture
def burgers_lqr(burgers):
    return design_lqr(burgers)
