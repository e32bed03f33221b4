"""Built-in test functions with closed-form oracles"""

import math
from typing import Callable, Dict, List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from ..models.grid import Grid, GridFunction
from ..utils.errors import ConfigError

Sampler = Callable[[np.ndarray, float, float], np.ndarray]


class Profile(BaseModel):
    """Named test function supported on [a, b].

    `integral(a, b)` is the exact value of int_a^b f; `moment(n, s, a, b)` is the exact
    T_n f(s) where a closed form exists.
    """
    model_config = ConfigDict(frozen=True)

    name: str
    description: str = Field(..., description="Formula of f on [a, b]")
    sampler: Sampler
    integral: Callable[[float, float], float]
    moment: Optional[Callable[[int, np.ndarray, float, float], np.ndarray]] = None

    def build(self, grid: Grid, a: float, b: float) -> GridFunction:
        return GridFunction.from_callable(grid, lambda t: self.sampler(t, a, b), support=(a, b))


def _power_gap(m: np.ndarray, a: float, s: np.ndarray, p: int) -> np.ndarray:
    """(m/s)^p - (a/s)^p; nodes below a overflow and are masked by the callers"""
    with np.errstate(over="ignore", invalid="ignore"):
        return (m / s) ** p - (a / s) ** p


def _indicator_moment(n: int, s: np.ndarray, a: float, b: float) -> np.ndarray:
    s = np.asarray(s, dtype=np.float64)
    m = np.minimum(s, b)
    return np.where(s >= a, _power_gap(m, a, s, n), 0.0)


def _ramp_moment(n: int, s: np.ndarray, a: float, b: float) -> np.ndarray:
    s = np.asarray(s, dtype=np.float64)
    m = np.minimum(s, b)
    return np.where(s >= a, n * s * _power_gap(m, a, s, n + 1) / (n + 1), 0.0)


def _bump_moment(n: int, s: np.ndarray, a: float, b: float) -> np.ndarray:
    # (t - a)(b - t) = -t^2 + (a + b) t - ab, integrated against n t^(n-1) / s^n
    s = np.asarray(s, dtype=np.float64)
    m = np.minimum(s, b)
    value = (
        -n * s * s * _power_gap(m, a, s, n + 2) / (n + 2)
        + n * (a + b) * s * _power_gap(m, a, s, n + 1) / (n + 1)
        - a * b * _power_gap(m, a, s, n)
    )
    return np.where(s >= a, value, 0.0)


def _zero_moment(n: int, s: np.ndarray, a: float, b: float) -> np.ndarray:
    return np.zeros_like(np.asarray(s, dtype=np.float64))


_PROFILES: Dict[str, Profile] = {
    p.name: p
    for p in (
        Profile(
            name="zero",
            description="f = 0",
            sampler=lambda t, a, b: np.zeros_like(t),
            integral=lambda a, b: 0.0,
            moment=_zero_moment,
        ),
        Profile(
            name="indicator",
            description="f = 1 on [a, b]",
            sampler=lambda t, a, b: np.ones_like(t),
            integral=lambda a, b: b - a,
            moment=_indicator_moment,
        ),
        Profile(
            name="bump",
            description="f = (t - a)(b - t) on [a, b]",
            sampler=lambda t, a, b: (t - a) * (b - t),
            integral=lambda a, b: (b - a) ** 3 / 6,
            moment=_bump_moment,
        ),
        Profile(
            name="sin",
            description="f = sin(t) on [a, b]",
            sampler=lambda t, a, b: np.sin(t),
            integral=lambda a, b: math.cos(a) - math.cos(b),
        ),
        Profile(
            name="ramp",
            description="f = t on [a, b]",
            sampler=lambda t, a, b: np.array(t, dtype=np.float64),
            integral=lambda a, b: (b * b - a * a) / 2,
            moment=_ramp_moment,
        ),
    )
}


def builtin_profiles() -> List[Profile]:
    return list(_PROFILES.values())


def get_profile(name: str) -> Profile:
    try:
        return _PROFILES[name]
    except KeyError:
        raise ConfigError(f"unknown profile {name!r}; choose from {sorted(_PROFILES)}") from None
