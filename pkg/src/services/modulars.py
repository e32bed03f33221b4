"""Modular functionals on grid functions, axiom checks and decay experiments"""

import logging
import math
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from ..models.grid import Grid, GridFunction
from ..models.lattice import LatticeVector, OSequenceLadder
from ..models.modular import Measure, ModularKind, ModularSpec
from ..models.reports import AxiomReport, DecayRow, DecayTable, EquiACReport
from .quadrature import Value, integrate, value_array
from .riesz_core import unit_dominance
from ..utils.errors import DomainError, StructuralError

logger = logging.getLogger(__name__)

Functional = Union[ModularSpec, Callable[[GridFunction], Value]]
Family = Union[Mapping[int, GridFunction], Sequence[GridFunction]]
Interval = Tuple[float, float]

CONVEX_WEIGHTS = (0.0, 0.25, 0.5, 0.75, 1.0)
DEFAULT_ALPHAS = (1.0, 1.0 / 3.0, 1.0 / 9.0)


def magnitude(value: Value) -> float:
    """Scalar size of a modular value; lattice values are reduced with the strong unit"""
    if isinstance(value, LatticeVector):
        return unit_dominance(value)
    return abs(float(value))


def eval_modular(rho: Functional, f: GridFunction) -> Value:
    """rho(f) for the built-in modulars, or any callable functional"""
    if not isinstance(rho, ModularSpec):
        return rho(f)
    magnitude_f = f.abs()
    if rho.kind is ModularKind.WEIGHTED_DERIV:
        return integrate(magnitude_f.multiply(rho.w_prime.abs()))
    if rho.measure is Measure.LOG_SCALE:
        if f.grid.t0 <= 0:
            raise DomainError("the dt/t measure needs a grid starting at t0 > 0")
        weights = 1.0 / f.nodes
        if f.is_lattice:
            weights = weights[:, None]
        return integrate(magnitude_f.with_values(magnitude_f.values * weights, f.support_hint))
    return integrate(magnitude_f)


def measure_of(rho: ModularSpec, grid: Grid, interval: Interval) -> float:
    """Measure of [lo, hi] under the modular's underlying measure; lo and hi need not be nodes"""
    lo, hi = interval
    if rho.kind is ModularKind.WEIGHTED_DERIV:
        weight = rho.w_prime.abs()
        inside = (weight.nodes >= lo) & (weight.nodes <= hi)
        return float(integrate(weight.with_values(np.where(inside, weight.values, 0.0))))
    if rho.measure is Measure.LOG_SCALE:
        if lo <= 0:
            raise DomainError("the dt/t measure needs sets inside t > 0")
        return math.log(hi / lo)
    return hi - lo


def _excess(lhs: Value, rhs: Value) -> float:
    """How far lhs <= rhs fails, componentwise"""
    return max(0.0, float(np.max(value_array(lhs) - value_array(rhs))))


def _gap(x: Value, y: Value) -> float:
    return float(np.max(np.abs(value_array(x) - value_array(y))))


def check_axioms(rho: Functional, corpus: List[GridFunction], tolerance: float = 1e-12) -> AxiomReport:
    """Largest violation of rho(0)=0, rho(-f)=rho(f), convex subadditivity and monotonicity"""
    if not corpus:
        raise ValueError("corpus must not be empty")
    grid = corpus[0].grid
    for f in corpus[1:]:
        if not f.grid.same_as(grid):
            raise StructuralError("corpus functions live on different grids")

    evaluations = 0

    def rho_of(f: GridFunction) -> Value:
        nonlocal evaluations
        evaluations += 1
        return eval_modular(rho, f)

    worst: Dict[str, float] = {"rho0": 0.0, "rho1": 0.0, "rho2": 0.0, "monotone": 0.0}
    worst["rho0"] = magnitude(rho_of(GridFunction.zeros_like(corpus[0])))

    cached = []
    for f in corpus:
        value = rho_of(f)
        cached.append(value)
        worst["rho1"] = max(worst["rho1"], _gap(rho_of(f.scale(-1.0)), value))
        worst["monotone"] = max(worst["monotone"], _gap(rho_of(f.abs()), value))

    for i, f in enumerate(corpus):
        for j in range(i, len(corpus)):
            h = corpus[j]
            bound = value_array(cached[i]) + value_array(cached[j])
            for alpha in CONVEX_WEIGHTS:
                mixed = f.combine(h, alpha, 1.0 - alpha)
                worst["rho2"] = max(worst["rho2"], _excess(rho_of(mixed), bound))
            lower = f.with_values(np.minimum(np.abs(f.values), np.abs(h.values)))
            rho_lower = rho_of(lower)
            worst["monotone"] = max(
                worst["monotone"],
                _excess(rho_lower, cached[i]),
                _excess(rho_lower, cached[j]),
            )

    report = AxiomReport(
        rho0_ok=worst["rho0"] <= tolerance,
        rho1_ok=worst["rho1"] <= tolerance,
        rho2_ok=worst["rho2"] <= tolerance,
        monotone_ok=worst["monotone"] <= tolerance,
        worst_violation=max(worst.values()),
        violations=worst,
        tolerance=tolerance,
        samples_used=evaluations,
    )
    logger.info(
        f"Axiom check on {len(corpus)} functions: worst violation "
        f"{report.worst_violation:.3e} ({evaluations} evaluations)"
    )
    return report


def finiteness_scan(
    rho: Functional,
    grid: Grid,
    interval: Interval,
    ladder: Union[OSequenceLadder, Sequence[float]],
) -> List[Tuple[float, float]]:
    """(eps_p, rho(eps_p 1_A)) for each rung; A may end between grid nodes"""
    epsilons = ladder.rungs() if isinstance(ladder, OSequenceLadder) else [float(e) for e in ladder]
    if interval[0] > interval[1]:
        raise StructuralError(f"interval {interval} is reversed")
    if isinstance(rho, ModularSpec):
        return [(eps, abs(eps) * measure_of(rho, grid, interval)) for eps in epsilons]
    lo, hi = interval
    nodes = grid.nodes
    indicator = GridFunction(grid=grid, values=((nodes >= lo) & (nodes <= hi)).astype(np.float64))
    return [(eps, magnitude(eval_modular(rho, indicator.scale(eps)))) for eps in epsilons]


def _non_increasing_to(values: List[float], tolerance: float) -> bool:
    if not values:
        return True
    steady = all(b <= a + 1e-12 for a, b in zip(values, values[1:]))
    return steady and values[-1] <= tolerance


def equi_ac_diagnostic(
    family: List[GridFunction],
    rho: ModularSpec,
    alpha: float,
    small_sets: List[Interval],
    exhaustion: List[Interval],
    tolerance: float,
) -> EquiACReport:
    """Tables for the two equi-absolute-continuity conditions.

    small sets: sup_z rho(alpha f_z 1_B) against the measure of B (largest B first);
    exhaustion: sup_z rho(alpha f_z 1_(G minus B_m)) along the exhausting sets B_m.
    """
    if alpha <= 0:
        raise DomainError("alpha must be positive")
    grid = family[0].grid

    small_table = []
    for interval in sorted(small_sets, key=lambda b: -measure_of(rho, grid, b)):
        sup = max(magnitude(eval_modular(rho, f.scale(alpha).restrict(*interval))) for f in family)
        small_table.append((measure_of(rho, grid, interval), sup))

    tail_table = []
    for lo, hi in exhaustion:
        sup = max(magnitude(eval_modular(rho, f.scale(alpha).exclude(lo, hi))) for f in family)
        tail_table.append((hi, sup))

    report = EquiACReport(
        alpha=alpha,
        tolerance=tolerance,
        small_set_table=small_table,
        exhaustion_table=tail_table,
        ac1_ok=_non_increasing_to([v for _, v in small_table], tolerance),
        ac2_ok=_non_increasing_to([v for _, v in tail_table], tolerance),
    )
    if not report.passed:
        logger.warning(f"Equi-absolute continuity not observed for alpha={alpha:g}")
    return report


def _indexed(family: Family) -> List[Tuple[int, GridFunction]]:
    if isinstance(family, Mapping):
        return sorted(family.items())
    return list(enumerate(family, start=1))


def vitali_decay(
    family: Family, rho: Functional, alpha_grid: Sequence[float] = DEFAULT_ALPHAS
) -> DecayTable:
    """n -> rho(alpha f_n) for each alpha"""
    members = _indexed(family)
    if not members:
        raise ValueError("family must not be empty")
    rows = []
    for alpha in alpha_grid:
        for n, f in members:
            rows.append(DecayRow(n=n, alpha=alpha, rho_value=magnitude(eval_modular(rho, f.scale(alpha)))))
    return DecayTable(rows=rows)


def dominated_decay(
    family: Family,
    dominant: GridFunction,
    rho: Functional,
    alpha_grid: Sequence[float] = (1.0,),
) -> DecayTable:
    """vitali_decay after checking |f_n| <= g at every node"""
    bound = np.abs(dominant.values)
    for n, f in _indexed(family):
        magnitude_f = np.abs(f.values)
        if magnitude_f.ndim == 2 and bound.ndim == 1:
            magnitude_f = magnitude_f.max(axis=1)
        if np.any(magnitude_f > bound):
            raise DomainError(f"member {n} is not dominated by the given function")
    return vitali_decay(family, rho, alpha_grid)


def eventual_start(series: Sequence[float], slack: float = 0.0) -> Optional[int]:
    """First position from which the series never increases by more than slack"""
    start = len(series) - 1 if series else None
    for k in range(len(series) - 1, 0, -1):
        if series[k] <= series[k - 1] + slack:
            start = k - 1
        else:
            break
    return start


def in_measure_table(
    family: Family, limit: GridFunction, epsilon: float, rho: ModularSpec
) -> List[Tuple[int, float]]:
    """(n, measure{|f_n - f| > eps}) for convergence in measure"""
    rows = []
    for n, f in _indexed(family):
        gap = np.abs(f.values - limit.values)
        if gap.ndim == 2:
            gap = gap.max(axis=1)
        indicator = f.with_values((gap > epsilon).astype(np.float64))
        rows.append((n, magnitude(eval_modular(ModularSpec.l1(rho.measure), indicator))))
    return rows


def uniform_table(family: Family, limit: GridFunction) -> List[Tuple[int, float]]:
    """(n, sup |f_n - f|) over the grid nodes"""
    return [(n, float(np.max(np.abs(f.values - limit.values)))) for n, f in _indexed(family)]
