"""Composite quadrature on uniform grids.

Integrals of a GridFunction run over its support nodes only, so indicator-type
integrands whose jumps sit on nodes integrate without an O(h) edge error.
"""

import logging
from enum import Enum
from typing import Union

import numpy as np
from scipy.integrate import cumulative_trapezoid, simpson

from ..models.grid import GridFunction
from ..models.lattice import LatticeVector
from ..utils.errors import StructuralError

logger = logging.getLogger(__name__)

Value = Union[float, LatticeVector]


class Rule(str, Enum):
    TRAPEZOID = "trapezoid"
    SIMPSON = "simpson"


class StieltjesRule(str, Enum):
    LEFT_POINT = "left"
    MIDPOINT = "midpoint"


def as_value(array) -> Value:
    """Wrap a scalar or per-component result"""
    array = np.asarray(array, dtype=np.float64)
    if array.ndim == 0:
        return float(array)
    return LatticeVector(values=array)


def value_array(value: Value) -> np.ndarray:
    if isinstance(value, LatticeVector):
        return value.values
    return np.asarray(value, dtype=np.float64)


def _support_values(f: GridFunction) -> np.ndarray:
    i, j = f.support_indices
    return f.values[i:j + 1]


def _cumulative(values: np.ndarray, h: float) -> np.ndarray:
    if values.shape[0] == 1:
        return np.zeros_like(values)
    return cumulative_trapezoid(values, dx=h, axis=0, initial=0)


def integrate(f: GridFunction, rule: Rule = Rule.TRAPEZOID) -> Value:
    """Composite rule over the support of f; lattice-valued f integrates componentwise"""
    values = _support_values(f)
    rule = Rule(rule)
    if rule is Rule.SIMPSON:
        if values.shape[0] % 2 == 0:
            raise StructuralError(
                f"Simpson needs an odd number of nodes, got {values.shape[0]}"
            )
        if values.shape[0] == 1:
            return as_value(np.zeros(values.shape[1:]))
        return as_value(simpson(values, dx=f.grid.h, axis=0))
    # shares the cumulative pass so the end value of cumulative_integral matches bitwise
    return as_value(_cumulative(values, f.grid.h)[-1])


def cumulative_integral(f: GridFunction) -> GridFunction:
    """F(t_i) = trapezoid integral of f over [t0, t_i]"""
    i, j = f.support_indices
    running = np.zeros_like(f.values)
    partial = _cumulative(f.values[i:j + 1], f.grid.h)
    running[i:j + 1] = partial
    running[j + 1:] = partial[-1]
    return f.with_values(running)


def stieltjes_integral(
    g: GridFunction, path: GridFunction, rule: StieltjesRule = StieltjesRule.LEFT_POINT
) -> Value:
    """Riemann-Stieltjes sum of g against path over the whole grid.

    LEFT_POINT evaluates g at the left end of each cell (the Ito sum); MIDPOINT averages
    the two ends.
    """
    if not g.grid.same_as(path.grid):
        raise StructuralError("integrand and integrator live on different grids")
    return as_value(stieltjes_sum(g.values, path.values, StieltjesRule(rule)))


def stieltjes_sum(g: np.ndarray, path: np.ndarray, rule: StieltjesRule) -> np.ndarray:
    """Array form of stieltjes_integral; axis 0 is the grid axis"""
    increments = np.diff(path, axis=0)
    if rule is StieltjesRule.LEFT_POINT:
        weights = g[:-1]
    else:
        weights = 0.5 * (g[:-1] + g[1:])
    if weights.ndim != increments.ndim:
        if weights.ndim == 1:
            weights = weights[:, None]
        else:
            increments = increments[:, None]
    return np.sum(weights * increments, axis=0)
