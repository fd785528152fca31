"""Shared fixtures: the builtin models with their canonical test instances.

Each instance is a (model, s0, K) triple known to sit in the interior
regime (budget smaller than the cost of holding the initial level).
"""

import pytest

from peakctl import State, builtin

# canonical interior instances, one per builtin
INSTANCES = {
    "example1": ({}, State(2.0, 2.0), 0.1),
    "sir": ({"beta": 0.5, "alpha": 0.1}, State(0.99, 0.01), 0.5),
    "monod": ({"m": 0.3}, State(2.0, 0.5), 0.5),
    "contois": ({"m": 0.3}, State(2.0, 0.5), 0.5),
}

# grid boxes where the condition checks are expected to hold
BOXES = {
    "example1": (0.0, 3.0, 0.05, 3.0),
    "sir": (0.0, 1.0, 0.01, 1.0),
    "monod": (0.01, 5.0, 0.05, 3.0),
    "contois": (0.01, 5.0, 0.05, 3.0),
}

BUILTIN_NAMES = tuple(INSTANCES)


@pytest.fixture
def example1():
    return builtin("example1")


@pytest.fixture
def sir():
    return builtin("sir", {"beta": 0.5, "alpha": 0.1})


@pytest.fixture
def monod():
    return builtin("monod", {"m": 0.3})


@pytest.fixture
def contois():
    return builtin("contois", {"m": 0.3})


@pytest.fixture(params=BUILTIN_NAMES)
def instance(request):
    """(name, model, s0, K) for every builtin."""
    name = request.param
    params, s0, K = INSTANCES[name]
    return name, builtin(name, params), s0, K
