"""Shared fixtures: small deterministic patterns and models."""

import numpy as np
import pytest

from pplasso.geometry import PointPattern, Window
from pplasso.model import ConstantField, CoordinateField, ModelSpec


@pytest.fixture
def unit_window():
    return Window(0.0, 1.0, 0.0, 1.0)


@pytest.fixture
def pattern_100(unit_window):
    """100 fixed uniform points on the unit window."""
    rng = np.random.default_rng(2024)
    return PointPattern(rng.uniform(0.0, 1.0, (100, 2)), unit_window)


@pytest.fixture
def intercept_model(unit_window):
    return ModelSpec([ConstantField()], unit_window, beta=[0.0])


@pytest.fixture
def intercept_x_model(unit_window):
    return ModelSpec([ConstantField(), CoordinateField("x")],
                     unit_window, beta=[0.0, 0.0])
