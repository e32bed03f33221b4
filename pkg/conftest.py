"""Shared fixtures for the lab tests"""

import numpy as np
import pytest

from src.models.grid import Grid, GridFunction
from src.services.profiles import get_profile

collect_ignore = ["examples"]


@pytest.fixture(autouse=True)
def _log_dir(tmp_path, monkeypatch):
    """Keep rotating log files out of the working tree"""
    monkeypatch.setenv("LAB_LOG_DIR", str(tmp_path / "logs"))


@pytest.fixture
def inner_grid():
    """[0, 3] with h = 1e-3"""
    return Grid.from_interval(0.0, 3.0, 1e-3)


def build_profile(name: str, a: float = 2.0, b: float = 3.0, h: float = 1e-3) -> GridFunction:
    return get_profile(name).build(Grid.from_interval(0.0, b, h), a, b)


@pytest.fixture
def bump():
    """(t - 2)(3 - t) on [2, 3]"""
    return build_profile("bump")


@pytest.fixture
def unit_grid():
    return Grid.from_interval(0.0, 1.0, 1e-3)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def output_dir(tmp_path):
    return str(tmp_path / "results")
