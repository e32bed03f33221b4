"""Finite-horizon filter membership and filter convergence verdicts.

Every verdict is relative to the horizon H. Free filters are blind to finite
modifications, so exceptions inside {1..cutoff} (cutoff = H/2 by default) are treated as
the finitely many that a free filter forgives; exceptions beyond the cutoff cannot be
told apart from infinitely many.
"""

import logging
from typing import Callable, Union

import numpy as np

from ..models.filters import FilterKind, FilterSpec, IndexSet, Verdict
from ..models.lattice import OSequenceLadder
from ..models.reports import ConvergenceReport, RungResult

logger = logging.getLogger(__name__)

# index array (k >= 1) -> values, shape (m,) for scalars or (m, d) for lattice vectors
SequenceGenerator = Callable[[np.ndarray], np.ndarray]

CHUNK = 1 << 20


def density(s: Union[IndexSet, np.ndarray], horizon: int) -> float:
    """|s n {1..H}| / H"""
    mask = s if isinstance(s, np.ndarray) else s.mask(horizon)
    return int(np.count_nonzero(mask[:horizon])) / horizon


def window_density(mask: np.ndarray, start: int) -> float:
    """Density of the set on (start, H]"""
    window = mask[start:]
    if window.size == 0:
        return 1.0
    return int(np.count_nonzero(window)) / window.size


def contains(f: FilterSpec, s: Union[IndexSet, np.ndarray]) -> Verdict:
    """Horizon-relative membership of s in the filter f"""
    mask = s if isinstance(s, np.ndarray) else s.mask(f.horizon)
    if f.kind is FilterKind.COFINITE:
        missing = np.flatnonzero(~mask)
        if missing.size == 0 or missing[-1] + 1 <= f.cutoff:
            return Verdict.IN_FILTER
        return Verdict.UNDECIDABLE
    if f.kind is FilterKind.DENSITY:
        # same forgiveness window as the cofinite rule: only (cutoff, H] is measured
        if window_density(mask, f.cutoff) >= f.density_threshold:
            return Verdict.IN_FILTER
        return Verdict.NOT_IN_FILTER
    for base in f.base_sets:
        b = base.mask(f.horizon)
        if not np.any(b & ~mask):
            return Verdict.IN_FILTER
    return Verdict.NOT_IN_FILTER


def distances(x: SequenceGenerator, limit: float, horizon: int) -> np.ndarray:
    """|x_k - limit| for k = 1..H, reduced with the unit norm for lattice-valued terms"""
    out = np.empty(horizon, dtype=np.float64)
    for start in range(1, horizon + 1, CHUNK):
        k = np.arange(start, min(start + CHUNK, horizon + 1), dtype=np.int64)
        diff = np.abs(np.asarray(x(k), dtype=np.float64) - limit)
        if diff.ndim == 2:
            diff = diff.max(axis=1)
        out[start - 1:start - 1 + k.size] = diff
    return out


def filter_limit_verdict(
    x: SequenceGenerator,
    limit: float,
    ladder: OSequenceLadder,
    f: FilterSpec,
) -> ConvergenceReport:
    """Check that {z : |x_z - limit| <= eps_p} belongs to the filter for every rung"""
    gaps = distances(x, limit, f.horizon)
    rungs = []
    for eps in ladder.rungs():
        mask = gaps <= eps
        verdict = contains(f, mask)
        rungs.append(RungResult(
            epsilon=eps,
            set_size=int(np.count_nonzero(mask)),
            density=density(mask, f.horizon),
            verdict=verdict,
        ))
        logger.debug(f"rung eps={eps:g}: |S|={rungs[-1].set_size} -> {verdict.value}")
    passed = all(r.verdict is Verdict.IN_FILTER for r in rungs)
    logger.info(
        f"Filter limit ({f.kind.value}, H={f.horizon}): "
        f"{sum(r.verdict is Verdict.IN_FILTER for r in rungs)}/{len(rungs)} rungs in filter"
    )
    return ConvergenceReport(
        horizon=f.horizon, filter=f.describe(), limit=limit, rungs=rungs, pass_=passed
    )


def eventually_within(x: SequenceGenerator, limit: float, eps: float, horizon: int, cutoff: int) -> bool:
    """Direct check: every term after `cutoff` lies within eps of the limit"""
    return bool(np.all(distances(x, limit, horizon)[cutoff:] <= eps))
