"""Brownian paths, Ito sums and Monte Carlo experiments.

Increments come from a Philox counter-based generator keyed by (seed, trial). Raw word
pair (2i, 2i+1) of that stream turns into increment i through Box-Muller, so every path
is reproducible on its own and trials can run in any order or on any number of workers.
"""

import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from ..models.grid import Grid, GridFunction
from ..models.moment import InnerRule
from ..models.process import (
    BrownianPath,
    IncrementCovariance,
    MonteCarloReport,
    ProcessKind,
    RegularProcessSpec,
    SmoothedConvergenceReport,
    SmoothedRow,
)
from .moment_ops import moment_values
from .quadrature import StieltjesRule, stieltjes_integral, stieltjes_sum
from ..utils.errors import DomainError, StructuralError

logger = logging.getLogger(__name__)

MIN_TRIALS = 100
_UNIT = 2.0 ** -53


def standard_normals(seed: int, trial: int, count: int) -> np.ndarray:
    """count standard normals; entry i depends only on (seed, trial, i)"""
    generator = np.random.Philox(key=np.array([seed, trial], dtype=np.uint64))
    raw = generator.random_raw(2 * count).reshape(count, 2)
    # 53-bit uniforms in the open interval (0, 1)
    u = ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * _UNIT
    return np.sqrt(-2.0 * np.log(u[:, 0])) * np.cos(2.0 * np.pi * u[:, 1])


def simulate_brownian(seed: int, grid: Grid, trial: int = 0) -> BrownianPath:
    """B(0) = 0 and B(t_(i+1)) = B(t_i) + sqrt(h) Z_i"""
    if grid.t0 != 0:
        raise DomainError(f"Brownian paths start at t0 = 0, got {grid.t0}")
    steps = math.sqrt(grid.h) * standard_normals(seed, trial, grid.n_points - 1)
    values = np.concatenate([[0.0], np.cumsum(steps)])
    return BrownianPath(grid=grid, values=values, seed=seed, trial=trial)


def holder_lags(n_points: int, count: int = 64) -> np.ndarray:
    """Geometric set of node lags from 1 to n_points - 1"""
    if n_points < 2:
        return np.array([], dtype=np.int64)
    return np.unique(np.round(np.geomspace(1, n_points - 1, count)).astype(np.int64))


def holder_witness(path: BrownianPath, lags: Optional[Sequence[int]] = None) -> float:
    """max |B(t + d) - B(t)| / d^(1/4) over all start nodes and a geometric set of lags d"""
    values = path.values
    lags = holder_lags(values.size) if lags is None else np.asarray(lags, dtype=np.int64)
    witness = 0.0
    for lag in lags:
        if lag < 1 or lag >= values.size:
            continue
        rise = np.abs(values[lag:] - values[:-lag]).max()
        witness = max(witness, float(rise / (lag * path.grid.h) ** 0.25))
    return witness


def bridge_process(path: BrownianPath, a: float, T_end: float) -> GridFunction:
    """f(t) = (t - T)(B(t) - B(a)) on [a, T], zero elsewhere"""
    if not 1 < a < T_end:
        raise DomainError(f"the bridge needs 1 < a < T, got a={a}, T={T_end}")
    grid = path.grid
    i, j = grid.index_of(a), grid.index_of(T_end)
    t = grid.nodes
    values = np.zeros(grid.n_points)
    # t_j itself, not T_end, so the end value is an exact zero
    values[i:j + 1] = (t[i:j + 1] - t[j]) * (path.values[i:j + 1] - path.values[i])
    return GridFunction(grid=grid, values=values, support_hint=(float(t[i]), float(t[j])))


def ito_sum(Y: GridFunction, path: BrownianPath) -> float:
    """sum_i Y(t_i) (B(t_(i+1)) - B(t_i)); Y(t_i) must not look at increments from i on"""
    if not Y.grid.same_as(path.grid):
        raise StructuralError("integrand and path live on different grids")
    return float(stieltjes_integral(Y, path.as_function(), StieltjesRule.LEFT_POINT))


def clamp_truncate(x: float, M: float) -> float:
    """x ^ M for x > 0, x v (-M) otherwise"""
    if M <= 0:
        raise DomainError(f"clamp bound must be positive, got {M}")
    return min(x, M) if x > 0 else max(x, -M)


def clamp_array(x: np.ndarray, M: float) -> np.ndarray:
    if M <= 0:
        raise DomainError(f"clamp bound must be positive, got {M}")
    return np.clip(x, -M, M)


def step_values(spec: RegularProcessSpec, grid: Grid) -> np.ndarray:
    t = grid.nodes
    values = np.zeros(grid.n_points)
    for lo, hi, value in spec.steps:
        values[(t >= lo) & (t < hi)] += value
    return values


def realize(spec: RegularProcessSpec, path: BrownianPath) -> GridFunction:
    """The integrand Y of one trajectory"""
    grid = path.grid
    if spec.kind is ProcessKind.CONSTANT:
        return GridFunction(grid=grid, values=np.full(grid.n_points, spec.c))
    if spec.kind is ProcessKind.STEP:
        return GridFunction(grid=grid, values=step_values(spec, grid))
    f = bridge_process(path, spec.a, spec.T)
    if spec.kind is ProcessKind.BRIDGE:
        return f
    return GridFunction(grid=grid, values=moment_values(f, spec.n, grid.nodes))


def _run_trials(work: Callable[[int], object], trials: int, workers: int) -> List[object]:
    """Results in trial order whatever the worker count"""
    if workers <= 1:
        return [work(k) for k in range(trials)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(work, range(trials)))


def _mean_and_se(samples: np.ndarray) -> Tuple[float, float]:
    """fsum mean and its standard error, independent of summation order"""
    count = samples.size
    mean = math.fsum(samples) / count
    variance = math.fsum((samples - mean) ** 2) / (count - 1)
    return mean, math.sqrt(variance / count)


def mc_ito_moments(
    spec: RegularProcessSpec,
    grid: Grid,
    trials: int,
    seed: int,
    workers: int = 1,
    keep_samples: bool = False,
) -> MonteCarloReport:
    """Mean and second moment of the Ito sum against the bound K T"""
    if trials < MIN_TRIALS:
        raise DomainError(f"need at least {MIN_TRIALS} trials, got {trials}")
    started = time.time()

    def one(trial: int) -> float:
        path = simulate_brownian(seed, grid, trial)
        return ito_sum(realize(spec, path), path)

    sums = np.array(_run_trials(one, trials, workers), dtype=np.float64)
    mean, mean_se = _mean_and_se(sums)
    second, second_se = _mean_and_se(sums * sums)
    bound = spec.K_bound * (grid.end - grid.t0)

    isometry = None
    if spec.kind in (ProcessKind.CONSTANT, ProcessKind.STEP):
        y = realize(spec, simulate_brownian(seed, grid)).values
        isometry = math.fsum(y[:-1] ** 2 * grid.h)

    report = MonteCarloReport(
        spec=spec.describe(),
        trials=trials,
        estimate_mean=mean,
        mean_standard_error=mean_se,
        estimate_second_moment=second,
        standard_error=second_se,
        bound_KT=bound,
        bound_satisfied_within_3se=second <= bound + 3 * second_se,
        mean_within_3se=abs(mean) <= 3 * mean_se,
        isometry_value=isometry,
        samples=sums.tolist() if keep_samples else None,
    )
    level = logging.INFO if report.passed else logging.WARNING
    logger.log(
        level,
        f"Ito moments ({spec.kind.value}, {trials} trials): E S^2 = {second:.5f} "
        f"+/- {second_se:.5f}, K T = {bound:.5f} in {time.time() - started:.2f}s",
    )
    return report


def increment_covariance(seed: int, grid: Grid, trials: int, split: Optional[float] = None) -> IncrementCovariance:
    """Sample covariance of B(split) and B(T) - B(split)"""
    if trials < MIN_TRIALS:
        raise DomainError(f"need at least {MIN_TRIALS} trials, got {trials}")
    k = grid.index_of(split) if split is not None else (grid.n_points - 1) // 2
    first = np.empty(trials)
    second = np.empty(trials)
    for trial in range(trials):
        values = simulate_brownian(seed, grid, trial).values
        first[trial] = values[k]
        second[trial] = values[-1] - values[k]
    m1, m2 = math.fsum(first) / trials, math.fsum(second) / trials
    products = (first - m1) * (second - m2)
    covariance = math.fsum(products) / (trials - 1)
    spread = math.sqrt(math.fsum((products - covariance) ** 2) / (trials - 1))
    return IncrementCovariance(
        trials=trials,
        split=float(grid.nodes[k]),
        covariance=covariance,
        standard_error=spread / math.sqrt(trials),
    )


def smoothed_convergence_experiment(
    a: float,
    T_end: float,
    n_list: Sequence[int],
    grid: Grid,
    trials: int,
    seed: int,
    workers: int = 1,
    rule: InnerRule = InnerRule.TRAPEZOID,
    keep_samples: bool = False,
    integrand: Optional[RegularProcessSpec] = None,
) -> SmoothedConvergenceReport:
    """Mean-square distance between int T_n f dB and the Ito integral of the bridge f.

    Both integrals are left-point sums on the same path; T_n f is computed path by path,
    and T_n f(s) only sees f on [0, s]. `integrand` replaces the bridge by another
    regular process; T_n leaves constants unchanged, so the constant-zero process gives
    identically zero errors.
    """
    if not 1 < a < T_end:
        raise DomainError(f"need 1 < a < T, got a={a}, T={T_end}")
    if any(n < 2 for n in n_list):
        raise DomainError("every n in n_list must be >= 2")
    if trials < MIN_TRIALS:
        raise DomainError(f"need at least {MIN_TRIALS} trials, got {trials}")
    if integrand is not None and integrand.kind is ProcessKind.STEP:
        raise DomainError("step integrands have no declared support for T_n")
    if abs(grid.end - T_end) > 1e-9 * T_end:
        raise StructuralError(f"the grid ends at {grid.end}, expected T = {T_end}")
    started = time.time()
    n_list = list(n_list)
    nodes = grid.nodes

    def one(trial: int):
        path = simulate_brownian(seed, grid, trial)
        f = bridge_process(path, a, T_end) if integrand is None else realize(integrand, path)
        reference = ito_sum(f, path)
        smoothed = np.empty(len(n_list))
        deviation = np.empty((len(n_list), grid.n_points))
        for k, n in enumerate(n_list):
            t_n = moment_values(f, n, nodes, rule) if f.support_hint is not None else f.values
            smoothed[k] = stieltjes_sum(t_n, path.values, StieltjesRule.LEFT_POINT)
            deviation[k] = (t_n - f.values) ** 2
        return reference, smoothed, deviation

    results = _run_trials(one, trials, workers)
    references = np.array([r[0] for r in results])
    smoothed = np.stack([r[1] for r in results])
    # pairwise sum over a fixed trial axis: the same digits for any worker count
    mean_deviation = np.stack([r[2] for r in results]).sum(axis=0) / trials

    bound = float(np.max(np.abs(references)))
    rows = []
    for k, n in enumerate(n_list):
        errors = (smoothed[:, k] - references) ** 2
        mse, se = _mean_and_se(errors)
        clamped = smoothed[:, k] if bound == 0 else clamp_array(smoothed[:, k], bound)
        rows.append(SmoothedRow(
            n=n,
            mean_square_error=mse,
            standard_error=se,
            rms=math.sqrt(mse),
            uniform_l2=float(np.sqrt(mean_deviation[k].max())),
            clamped_mse=math.fsum((clamped - references) ** 2) / trials,
        ))
        logger.debug(f"smoothed n={n}: mse={mse:.4e} se={se:.1e}")

    mses = [r.mean_square_error for r in rows]
    decreasing = all(
        later <= earlier + row.standard_error for earlier, later, row in zip(mses, mses[1:], rows)
    )
    margin = len(rows) < 2 or mses[0] == 0 or mses[0] - mses[-1] > rows[0].standard_error
    samples = None
    if keep_samples:
        samples = {"reference": references.tolist()}
        for k, n in enumerate(n_list):
            samples[f"T{n}"] = smoothed[:, k].tolist()

    report = SmoothedConvergenceReport(
        a=a,
        T_end=T_end,
        h=grid.h,
        trials=trials,
        reference_second_moment=math.fsum(references ** 2) / trials,
        clamp_M=bound,
        rows=rows,
        decreasing_within_se=decreasing,
        margin_ok=margin,
        samples=samples,
    )
    logger.info(
        f"Smoothed convergence over n={n_list} ({trials} trials): "
        f"mse {[f'{m:.3e}' for m in mses]} in {time.time() - started:.2f}s"
    )
    return report


def trial_frame(samples: Dict[str, List[float]]):
    """Per-trial raw values as a frame with a leading trial column"""
    frame = pd.DataFrame(samples)
    frame.insert(0, "trial", np.arange(len(frame)))
    return frame
