"""Shared parameter sets for core tests."""

import pytest
from nhosc.core.auxiliary import constant_case_solution
from tests.fixtures.params import make_params


@pytest.fixture
def linear_params():
    """m = ω = ħ = 1, λ = 0.1·t."""
    return make_params(0.1)


@pytest.fixture
def free_params():
    """m = ω = ħ = 1, λ = 0."""
    return make_params(0.0)


@pytest.fixture
def linear_aux():
    return constant_case_solution(1.0, 1.0, 0.1, (-0.01, 3.01), 3001)


@pytest.fixture
def free_aux():
    return constant_case_solution(1.0, 1.0, 0.0, (-0.01, 3.01), 3001)
