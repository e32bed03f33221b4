"""Moment kernels M_n(w) = n w^n 1_(0,1)(w) and the operators

    T_n f(s) = (n / s^n) int_0^s t^(n-1) f(t) dt.

The inner integral is accumulated once per n as G(x) = int_a^x (t/b)^(n-1) f(t) dt, so
T_n f(s) = (n/b) (b/s)^n G(min(s, b)). Dividing by b^(n-1) keeps every intermediate
finite for large n; beyond b the same formula is the closed-form tail n K_n / s^n.
"""

import logging
import math
import time
from typing import List, Optional, Sequence, Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.integrate import cumulative_trapezoid

from ..models.grid import Grid, GridFunction
from ..models.moment import InnerRule, MomentTransform
from ..models.reports import (
    BoundReport,
    DerivativeCheck,
    UniformDerivativeReport,
    UniformDerivativeRow,
    WeakConvergenceRow,
    WeakConvergenceTable,
)
from .quadrature import StieltjesRule, Value, as_value, integrate, stieltjes_integral, value_array
from ..utils.errors import DomainError, StructuralError

logger = logging.getLogger(__name__)

# exp(709) is the largest finite double; leave headroom for the moment multiplied in afterwards
SEGMENT_EXPONENT = 600.0
LIPSCHITZ_SLACK = 1e-9
TAIL_SLACK = 1e-12


def kernel_eval(n: int, w: float) -> float:
    """M_n(w) = n w^n on the open interval (0, 1), zero elsewhere"""
    if n < 1:
        raise DomainError(f"kernel order must be >= 1, got {n}")
    if 0.0 < w < 1.0:
        return n * w ** n
    return 0.0


def kernel_table(n: int, ws: Sequence[float]) -> List[Tuple[float, float]]:
    return [(float(w), kernel_eval(n, float(w))) for w in ws]


def _power_increment(lo: np.ndarray, hi: np.ndarray, p: float, b: float) -> np.ndarray:
    """(hi/b)^p - (lo/b)^p without cancellation when hi is close to lo"""
    out = np.empty_like(hi)
    positive = lo > 0
    ratio = lo[positive] / b
    out[positive] = ratio ** p * np.expm1(p * np.log1p((hi[positive] - lo[positive]) / lo[positive]))
    out[~positive] = (hi[~positive] / b) ** p
    return out


def scaled_moments(
    f: GridFunction, power: float, b: float, rule: InnerRule, stop: Optional[float] = None
) -> np.ndarray:
    """G at every node of f's grid: int_(t0)^(t_i) (t/b)^(power-1) f(t) dt, constant past the support

    With `stop`, accumulation ends at the first node >= stop and is held constant after it.
    """
    i, j = f.support_indices
    if stop is not None:
        j = max(i, min(j, int(np.searchsorted(f.nodes, stop, side="left"))))
    t = f.nodes[i:j + 1]
    values = f.values[i:j + 1]
    running = np.zeros_like(f.values)
    if j == i:
        return running

    if InnerRule(rule) is InnerRule.TRAPEZOID:
        if power < 1 and t[0] == 0:
            raise DomainError(
                f"t^{power - 1:g} is unbounded at 0; use the linear_exact inner rule"
            )
        weights = (t / b) ** (power - 1)
        if values.ndim == 2:
            weights = weights[:, None]
        partial = cumulative_trapezoid(weights * values, dx=f.grid.h, axis=0, initial=0)
    else:
        lo, hi = t[:-1], t[1:]
        # int over the cell of (t/b)^(p-1) and of (t/b)^(p-1) (t - lo)
        base = b * _power_increment(lo, hi, power, b) / power
        first = b * b * _power_increment(lo, hi, power + 1, b) / (power + 1) - lo * base
        slope = np.diff(values, axis=0) / f.grid.h
        if values.ndim == 2:
            base, first = base[:, None], first[:, None]
        cells = values[:-1] * base + slope * first
        partial = np.concatenate([np.zeros((1,) + values.shape[1:]), np.cumsum(cells, axis=0)])

    running[i:j + 1] = partial
    running[j + 1:] = partial[-1]
    return running


def _moment_support(f: GridFunction) -> Tuple[float, float]:
    if f.support_hint is None:
        raise StructuralError("the moment transform needs f with a declared support [a, b]")
    a, b = f.support_hint
    if b <= 0:
        raise DomainError(f"support [{a}, {b}] must end at b > 0")
    return a, b


def _interp_moments(f: GridFunction, moments: np.ndarray, x: np.ndarray) -> np.ndarray:
    if moments.ndim == 1:
        return np.interp(x, f.nodes, moments)
    return np.stack([np.interp(x, f.nodes, moments[:, k]) for k in range(moments.shape[1])], axis=-1)


def _apply_moment(
    f: GridFunction,
    moments: np.ndarray,
    power: float,
    a: float,
    b: float,
    s: np.ndarray,
    rule: InnerRule = InnerRule.TRAPEZOID,
) -> np.ndarray:
    """(power/c) (c/s)^power G_c(min(s, b)) at the nodes s; zero where s < a or s = 0.

    `moments` is G_b. Nodes far below b are served by anchors c < b, each covering the
    nodes with power * ln(c/s) < SEGMENT_EXPONENT, so the factor never overflows.
    """
    clipped = np.minimum(s, b)
    active = (s >= a) & (s > 0)
    out = np.zeros(s.shape + moments.shape[1:])
    if not np.any(active):
        return out
    smallest = float(s[active].min())

    anchor, upper, segments = b, np.inf, 0
    while True:
        lower = anchor * math.exp(-SEGMENT_EXPONENT / power)
        segment = active & (s > lower) & (s <= upper)
        if np.any(segment):
            factor = (power / anchor) * (anchor / s[segment]) ** power
            g = _interp_moments(f, moments, clipped[segment])
            out[segment] = (factor[:, None] if g.ndim == 2 else factor) * g
        segments += 1
        if lower < smallest:
            break
        anchor = upper = lower
        moments = scaled_moments(f, power, anchor, rule, stop=anchor)
    if segments > 1:
        logger.debug(f"(b/s)^{power:g} split over {segments} anchors down to s = {smallest:g}")
    return out


def moment_values(
    f: GridFunction, n: int, s: np.ndarray, rule: InnerRule = InnerRule.TRAPEZOID
) -> np.ndarray:
    """T_n f at arbitrary nodes s >= 0; T_n f(0) = 0"""
    a, b = _moment_support(f)
    return _apply_moment(f, scaled_moments(f, n, b, rule), n, a, b, np.asarray(s, dtype=np.float64), rule)


def transform(
    f: GridFunction, n: int, eval_grid: Grid, rule: InnerRule = InnerRule.TRAPEZOID
) -> MomentTransform:
    """T_n f on eval_grid; f must declare its support [a, b]"""
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    if eval_grid.t0 <= 0:
        raise DomainError("the evaluation grid must start at t0 > 0")
    a, b = _moment_support(f)
    # a = 0 is accepted only as the first node of an inner grid starting at 0
    if a < 0:
        raise DomainError(f"support must start at a >= 0, got {a}")

    moments = scaled_moments(f, n, b, rule)
    output = _apply_moment(f, moments, n, a, b, eval_grid.nodes, rule)
    scaled_end = moments[-1]
    k_n = None
    if b <= 1 or (n - 1) * math.log(b) < SEGMENT_EXPONENT:
        k_n = as_value(b ** (n - 1) * scaled_end)
    else:
        logger.debug(f"K_n = b^(n-1) G(b) is not a finite double for n = {n}, b = {b}; reporting G(b) only")

    return MomentTransform(
        n=n,
        input=f,
        output=GridFunction(grid=eval_grid, values=output),
        K_n=k_n,
        scaled_moment=as_value(scaled_end),
        M_f=float(np.max(np.abs(f.values))) if f.values.size else 0.0,
        a=a,
        b=b,
        inner_rule=rule,
    )


def default_eval_grid(f: GridFunction, s_max: Optional[float] = None) -> Grid:
    """Grid from the first positive node of f's grid up to s_max (default 2b), step h"""
    _, b = _moment_support(f)
    h = f.grid.h
    start = f.grid.t0 if f.grid.t0 > 0 else f.grid.t0 + h
    stop = s_max if s_max is not None else 2 * b
    return Grid.from_interval(start, stop, h)


def _tail_mass(T: MomentTransform, start: float) -> np.ndarray:
    """int_start^inf |T_n f| for start >= b, componentwise"""
    if T.n < 2:
        raise DomainError("int T_1 f diverges: the tail n K_n / s^n is integrable only for n >= 2")
    n, b = T.n, T.b
    return (n / (n - 1)) * np.abs(value_array(T.scaled_moment)) * (b / start) ** (n - 1)


def total_integral(T: MomentTransform) -> Value:
    """int_0^inf T_n f: grid part over [t0, b] plus n K_n / ((n-1) b^(n-1))"""
    if T.n < 2:
        raise DomainError("T_1 f is not integrable on (0, inf); total_integral needs n >= 2")
    grid = T.output.grid
    if grid.t0 > T.a:
        raise StructuralError(f"the evaluation grid starts at {grid.t0} > a = {T.a}; T_n f is missed on [a, t0]")
    grid_part = value_array(integrate(T.output.restrict(grid.t0, T.b)))
    tail = (T.n / (T.n - 1)) * value_array(T.scaled_moment)
    return as_value(grid_part + tail)


def consfubini_residual(
    f: GridFunction, n: int, rule: InnerRule = InnerRule.TRAPEZOID, s_max: Optional[float] = None
) -> float:
    """|int_0^inf T_n f - n/(n-1) int f|, reduced with the unit norm for lattice-valued f"""
    started = time.time()
    T = transform(f, n, default_eval_grid(f, s_max), rule)
    lhs = value_array(total_integral(T))
    rhs = (n / (n - 1)) * value_array(integrate(f))
    residual = float(np.max(np.abs(lhs - rhs)))
    logger.debug(f"consfubini n={n}: residual {residual:.3e} in {time.time() - started:.3f}s")
    return residual


def _input_on(T: MomentTransform) -> np.ndarray:
    return T.input.evaluate_at(T.output.nodes)


def derivative(T: MomentTransform) -> GridFunction:
    """(T_n f)'(s) = (n/s) (f(s) - T_n f(s)) on the evaluation grid"""
    s = T.output.nodes
    factor = T.n / s
    if T.output.is_lattice:
        factor = factor[:, None]
    return T.output.with_values(factor * (_input_on(T) - T.output.values))


def recover_input(T: MomentTransform) -> GridFunction:
    """f(s) = T_n f(s) + (s/n) (T_n f)'(s) with a central-difference derivative"""
    s = T.output.nodes
    slope = np.gradient(T.output.values, T.output.grid.h, axis=0)
    factor = s / T.n
    if T.output.is_lattice:
        factor = factor[:, None]
    return T.output.with_values(T.output.values + factor * slope)


def _smooth_interior(T: MomentTransform, margin: int = 2) -> np.ndarray:
    """Interior node mask that stays `margin` nodes away from the support ends"""
    s = T.output.nodes
    h = T.output.grid.h
    mask = np.zeros(s.size, dtype=bool)
    mask[1:-1] = True
    for edge in (T.a, T.b):
        mask &= np.abs(s - edge) > margin * h * (1 + 1e-9)
    return mask


def recupero_check(T: MomentTransform, tolerance: float = 1e-3) -> DerivativeCheck:
    """Central differences of T_n f against (n/s)(f - T_n f), away from the kinks at a and b"""
    values = T.output.values
    h = T.output.grid.h
    central = np.zeros_like(values)
    central[1:-1] = (values[2:] - values[:-2]) / (2 * h)
    gap = np.abs(central - derivative(T).values)
    if gap.ndim == 2:
        gap = gap.max(axis=1)
    mask = _smooth_interior(T)
    deviation = float(gap[mask].max()) if np.any(mask) else 0.0
    return DerivativeCheck(
        n=T.n, max_deviation=deviation, nodes_checked=int(np.count_nonzero(mask)), tolerance=tolerance
    )


def uniform_derivative_check(
    T: MomentTransform, deltas: Sequence[float] = (0.05, 0.02, 0.01, 0.005)
) -> UniformDerivativeReport:
    """sup |(T(v) - T(u)) / (v - u) - T'(x)| over nodes u <= x <= v with 0 < v - u <= delta"""
    values = T.output.values
    slope = derivative(T).values
    if values.ndim == 2:
        values, slope = values.max(axis=1), slope.max(axis=1)
    h = T.output.grid.h
    rows = []
    for delta in sorted(deltas, reverse=True):
        span = min(int(math.floor(delta / h + 1e-9)), values.size - 1)
        worst = 0.0
        for m in range(1, span + 1):
            quotient = (values[m:] - values[:-m]) / (m * h)
            window = sliding_window_view(slope, m + 1)
            worst = max(
                worst,
                float(np.max(quotient - window.min(axis=1))),
                float(np.max(window.max(axis=1) - quotient)),
            )
        rows.append(UniformDerivativeRow(delta=float(delta), sup_deviation=worst))
    return UniformDerivativeReport(rows=rows)


def _norm_rows(array: np.ndarray) -> np.ndarray:
    array = np.abs(array)
    return array.max(axis=1) if array.ndim == 2 else array


def bound_checks(
    T: MomentTransform,
    pair_samples: int = 10_000,
    seed: int = 0,
    modulus: Optional[Tuple[float, float]] = None,
) -> BoundReport:
    """Lipschitz, tail and equi-absolute-continuity bounds of T_n f plus its errors against f.

    `modulus` = (gamma, sigma) with |f(x) - f(y)| <= sigma whenever |x - y| <= gamma adds
    the analytic bound 2 M_f (1 - gamma/(2b))^n + sigma + M_f / 2^n on the uniform error.
    """
    started = time.time()
    n, b, M_f = T.n, T.b, T.M_f
    s = T.output.nodes
    values = T.output.values

    try:
        lipschitz = T.M * (1 + n)
    except OverflowError:
        lipschitz = math.inf
    rng = np.random.default_rng(seed)
    pairs = rng.integers(0, s.size, size=(pair_samples, 2))
    pairs = pairs[pairs[:, 0] != pairs[:, 1]]
    rise = _norm_rows(values[pairs[:, 0]] - values[pairs[:, 1]])
    run = np.abs(s[pairs[:, 0]] - s[pairs[:, 1]])
    excess = rise - lipschitz * run
    witness = None
    worst_lipschitz = 0.0
    if excess.size:
        k = int(np.argmax(excess))
        worst_lipschitz = float(excess[k])
        if worst_lipschitz > LIPSCHITZ_SLACK:
            witness = (float(s[pairs[k, 0]]), float(s[pairs[k, 1]]))

    beyond = s > b
    tail_excess = _norm_rows(values[beyond]) - M_f * (b / s[beyond]) ** n
    worst_tail = float(tail_excess.max()) if tail_excess.size else 0.0

    if n < 2:
        raise DomainError("the L1 error and tail mass need n >= 2")
    f_on_grid = _input_on(T)
    gap = T.output.with_values(np.abs(values - f_on_grid))
    uniform_error = float(_norm_rows(gap.values).max())
    l1_grid = value_array(integrate(gap))
    l1_error = float(np.max(l1_grid + _tail_mass(T, max(T.s_max, b))))
    tail_mass = float(np.max(_tail_mass(T, 2 * b)))
    equi_ac_tail = M_f * b / 2 ** (n - 1)

    uniform_bound = None
    if modulus is not None:
        gamma, sigma = modulus
        uniform_bound = 2 * M_f * (1 - gamma / (2 * b)) ** n + sigma + M_f / 2 ** n

    report = BoundReport(
        n=n,
        lipschitz_ok=worst_lipschitz <= LIPSCHITZ_SLACK,
        lipschitz_constant=lipschitz,
        worst_lipschitz_excess=max(worst_lipschitz, 0.0),
        lipschitz_witness=witness,
        pairs_checked=int(pairs.shape[0]),
        tail_ok=worst_tail <= TAIL_SLACK,
        worst_tail_excess=max(worst_tail, 0.0),
        uniform_error=uniform_error,
        l1_error=l1_error,
        equi_ac_tail=equi_ac_tail,
        tail_mass_beyond_2b=tail_mass,
        equi_ac_ok=tail_mass <= equi_ac_tail + TAIL_SLACK,
        uniform_error_bound=uniform_bound,
    )
    logger.info(
        f"Bounds n={n}: lipschitz_ok={report.lipschitz_ok} tail_ok={report.tail_ok} "
        f"sup_err={uniform_error:.3e} l1_err={l1_error:.3e} in {time.time() - started:.2f}s"
    )
    return report


def ode_solve(
    nu: float,
    f: GridFunction,
    c: float,
    eval_grid: Grid,
    rule: InnerRule = InnerRule.TRAPEZOID,
) -> GridFunction:
    """phi(s) = s^(-nu) (c + nu int_0^s f(t) t^(nu-1) dt), the solution of s phi' + nu phi = nu f"""
    if nu <= 0:
        raise DomainError(f"nu must be positive, got {nu}")
    if eval_grid.t0 <= 0:
        raise DomainError("the evaluation grid must start at t0 > 0")
    a, b = f.support
    if b <= 0:
        raise DomainError("f must be supported away from the origin")
    moments = scaled_moments(f, nu, b, rule)
    s = eval_grid.nodes
    phi = _apply_moment(f, moments, nu, a, b, s, rule)
    if c != 0:
        homogeneous = c * s ** (-nu)
        phi = phi + (homogeneous[:, None] if phi.ndim == 2 else homogeneous)
    return GridFunction(grid=eval_grid, values=phi)


def ode_residual(phi: GridFunction, nu: float, f: GridFunction, margin: Tuple[float, ...] = ()) -> float:
    """max |s phi'(s) + nu phi(s) - nu f(s)| over interior nodes, phi' by central differences.

    Nodes within two steps of any point in `margin` (kinks of f) are skipped.
    """
    s = phi.nodes
    h = phi.grid.h
    values = phi.values
    central = (values[2:] - values[:-2]) / (2 * h)
    inner = s[1:-1]
    f_inner = f.evaluate_at(inner)
    scale = inner[:, None] if values.ndim == 2 else inner
    residual = _norm_rows(scale * central + nu * values[1:-1] - nu * f_inner)
    mask = np.ones(inner.size, dtype=bool)
    for edge in margin:
        mask &= np.abs(inner - edge) > 2 * h * (1 + 1e-9)
    return float(residual[mask].max()) if np.any(mask) else 0.0


def weak_convergence_experiment(
    f: GridFunction,
    w: GridFunction,
    n_list: Sequence[int],
    tolerance: float = 0.25,
    rule: InnerRule = InnerRule.TRAPEZOID,
) -> WeakConvergenceTable:
    """Per n: |int T_n f w' - int f w'| and |int w d(T_n f) - int w df| on w's grid.

    Both columns must be non-increasing and end at or below `tolerance`; the deltas shrink like 1/n.
    """
    started = time.time()
    grid = w.grid
    w_prime = w.with_values(np.gradient(w.values, grid.h, axis=0))
    if w.support_hint is not None:
        w_prime = w_prime.restrict(*w.support_hint)
    f_on = GridFunction(grid=grid, values=f.evaluate_at(grid.nodes))
    reference_weak = value_array(integrate(f_on.multiply(w_prime)))
    reference_stieltjes = value_array(stieltjes_integral(w, f_on, StieltjesRule.MIDPOINT))

    _, b = _moment_support(f)
    M_f = float(np.max(np.abs(f.values)))
    rows = []
    for n in n_list:
        t_n = GridFunction(grid=grid, values=moment_values(f, n, grid.nodes, rule))
        delta_weak = np.abs(value_array(integrate(t_n.multiply(w_prime))) - reference_weak)
        delta_stieltjes = np.abs(
            value_array(stieltjes_integral(w, t_n, StieltjesRule.MIDPOINT)) - reference_stieltjes
        )
        rows.append(WeakConvergenceRow(
            n=n, delta_weak=float(np.max(delta_weak)), delta_stieltjes=float(np.max(delta_stieltjes))
        ))
        logger.debug(f"weak n={n}: {rows[-1].delta_weak:.3e} / {rows[-1].delta_stieltjes:.3e}")

    def steady(column: List[float]) -> bool:
        return all(later <= earlier + TAIL_SLACK for earlier, later in zip(column, column[1:]))

    tail_bound = 0.0
    if n_list:
        tail_bound = M_f * b / 2 ** (min(n_list) - 1) * float(np.max(np.abs(w_prime.values)))
    table = WeakConvergenceTable(
        rows=rows,
        tolerance=tolerance,
        tail_bound=tail_bound,
        decreasing=steady([r.delta_weak for r in rows]) and steady([r.delta_stieltjes for r in rows]),
        last_within_tolerance=not rows or max(rows[-1].delta_weak, rows[-1].delta_stieltjes) <= tolerance,
    )
    logger.info(f"Weak convergence over n={list(n_list)} in {time.time() - started:.2f}s")
    return table
