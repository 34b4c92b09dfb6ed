"""Shared fixtures: presets are built once per session (the p-system build
runs a state-ball shrink loop and an eta/nu estimation sweep)."""

import numpy as np
import pytest

from selfsim.models import preset_model


@pytest.fixture(scope="session")
def burgers():
    return preset_model("burgers-identical")


@pytest.fixture(scope="session")
def linear_pair():
    return preset_model("linear-advection-pair")


@pytest.fixture(scope="session")
def p_system():
    return preset_model("p-system")


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240817)
