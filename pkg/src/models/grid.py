from functools import cached_property
from typing import Callable, List, Optional, Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .lattice import frozen_array
from ..utils.errors import StructuralError

# Relative slack used to decide whether a coordinate is a grid node
NODE_TOLERANCE = 1e-9


class Grid(BaseModel):
    """Uniform grid t_i = t0 + i*h, i = 0..n_points-1"""
    model_config = ConfigDict(frozen=True)

    t0: float = Field(0.0, ge=0, description="First node")
    h: float = Field(..., gt=0, description="Step")
    n_points: int = Field(..., ge=2, description="Number of nodes")

    @classmethod
    def from_interval(cls, start: float, stop: float, h: float) -> "Grid":
        """Grid from start to stop inclusive; stop must be reachable in whole steps"""
        if stop <= start:
            raise StructuralError(f"empty interval [{start}, {stop}]")
        steps = int(round((stop - start) / h))
        if abs(start + steps * h - stop) > NODE_TOLERANCE * max(1.0, abs(stop)):
            raise StructuralError(f"[{start}, {stop}] is not a whole number of steps {h}")
        return cls(t0=start, h=h, n_points=steps + 1)

    @cached_property
    def nodes(self) -> np.ndarray:
        return frozen_array(self.t0 + self.h * np.arange(self.n_points))

    @property
    def end(self) -> float:
        return float(self.t0 + self.h * (self.n_points - 1))

    def index_of(self, t: float) -> int:
        """Index of the node at t; raises if t is not a node"""
        i = int(round((t - self.t0) / self.h))
        if i < 0 or i >= self.n_points:
            raise StructuralError(f"{t} lies outside the grid [{self.t0}, {self.end}]")
        if abs(self.t0 + i * self.h - t) > NODE_TOLERANCE * max(1.0, abs(t)):
            raise StructuralError(f"{t} is not a grid node (step {self.h})")
        return i

    def same_as(self, other: "Grid") -> bool:
        return self.t0 == other.t0 and self.h == other.h and self.n_points == other.n_points

    def require_same(self, other: "Grid"):
        if not self.same_as(other):
            raise StructuralError(f"grid mismatch: {self} vs {other}")


class GridFunction(BaseModel):
    """Function sampled on a Grid, scalar (shape (n,)) or lattice valued (shape (n, d)).

    `support_hint` = (a, b) declares that the function vanishes outside [a, b]; a and b
    are grid nodes and all integrals run over [a, b] only.
    """
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    grid: Grid
    values: np.ndarray
    support_hint: Optional[Tuple[float, float]] = None

    @field_validator("values", mode="before")
    @classmethod
    def _coerce(cls, v):
        array = frozen_array(v)
        if array.ndim not in (1, 2):
            raise ValueError(f"values must be 1-d or 2-d, got shape {array.shape}")
        if not np.all(np.isfinite(array)):
            raise ValueError("grid function values must be finite")
        return array

    @model_validator(mode="after")
    def _check_layout(self):
        if self.values.shape[0] != self.grid.n_points:
            raise StructuralError(
                f"{self.values.shape[0]} values for a grid of {self.grid.n_points} nodes"
            )
        if self.support_hint is not None:
            lo, hi = self.support_hint
            i, j = self.grid.index_of(lo), self.grid.index_of(hi)
            if i > j:
                raise StructuralError(f"support [{lo}, {hi}] is reversed")
            outside = np.ones(self.grid.n_points, dtype=bool)
            outside[i:j + 1] = False
            if np.any(self.values[outside] != 0):
                raise ValueError(f"values do not vanish outside the support [{lo}, {hi}]")
        return self

    @classmethod
    def from_callable(
        cls,
        grid: Grid,
        fn: Callable[[np.ndarray], np.ndarray],
        support: Optional[Tuple[float, float]] = None,
    ) -> "GridFunction":
        """Sample fn on the grid, zeroing everything outside `support`"""
        values = np.array(fn(grid.nodes), dtype=np.float64)
        if values.ndim == 0:
            values = np.full(grid.n_points, float(values))
        if support is not None:
            i, j = grid.index_of(support[0]), grid.index_of(support[1])
            mask = np.zeros(grid.n_points, dtype=bool)
            mask[i:j + 1] = True
            values = np.where(_column(mask, values), values, 0.0)
            support = (float(grid.nodes[i]), float(grid.nodes[j]))
        return cls(grid=grid, values=values, support_hint=support)

    @classmethod
    def zeros_like(cls, other: "GridFunction") -> "GridFunction":
        return cls(grid=other.grid, values=np.zeros_like(other.values))

    @property
    def nodes(self) -> np.ndarray:
        return self.grid.nodes

    @property
    def is_lattice(self) -> bool:
        return self.values.ndim == 2

    @property
    def support_indices(self) -> Tuple[int, int]:
        """Inclusive node range that integrals run over"""
        if self.support_hint is None:
            return 0, self.grid.n_points - 1
        return self.grid.index_of(self.support_hint[0]), self.grid.index_of(self.support_hint[1])

    @property
    def support(self) -> Tuple[float, float]:
        i, j = self.support_indices
        return float(self.nodes[i]), float(self.nodes[j])

    def with_values(self, values, support_hint=None) -> "GridFunction":
        return GridFunction(grid=self.grid, values=values, support_hint=support_hint)

    def abs(self) -> "GridFunction":
        return self.with_values(np.abs(self.values), self.support_hint)

    def scale(self, c: float) -> "GridFunction":
        return self.with_values(c * self.values, self.support_hint)

    def combine(self, other: "GridFunction", alpha: float = 1.0, beta: float = 1.0) -> "GridFunction":
        """alpha*self + beta*other; the support is the hull of both supports"""
        self.grid.require_same(other.grid)
        return self.with_values(
            alpha * self.values + beta * other.values, _hull(self, other)
        )

    def minus(self, other: "GridFunction") -> "GridFunction":
        return self.combine(other, 1.0, -1.0)

    def multiply(self, other: "GridFunction") -> "GridFunction":
        """Pointwise product; the support is the intersection of both supports"""
        self.grid.require_same(other.grid)
        a, b = self.values, other.values
        if a.ndim != b.ndim:
            a, b = _column(a, b), _column(b, a)
        lo = max(self.support[0], other.support[0])
        hi = min(self.support[1], other.support[1])
        if lo > hi:
            return self.with_values(np.zeros(np.broadcast(a, b).shape))
        return self.with_values(a * b, _hint_or_none(self.grid, lo, hi))

    def restrict(self, lo: float, hi: float) -> "GridFunction":
        """self * 1_[lo, hi] with lo and hi snapped to nodes"""
        i, j = self.grid.index_of(lo), self.grid.index_of(hi)
        s_i, s_j = self.support_indices
        i, j = max(i, s_i), min(j, s_j)
        if i > j:
            return GridFunction.zeros_like(self)
        mask = np.zeros(self.grid.n_points, dtype=bool)
        mask[i:j + 1] = True
        values = np.where(_column(mask, self.values), self.values, 0.0)
        return self.with_values(values, (float(self.nodes[i]), float(self.nodes[j])))

    def exclude(self, lo: float, hi: float) -> "GridFunction":
        """self * 1_(G \\ [lo, hi]); nodes inside [lo, hi] are zeroed"""
        i, j = self.grid.index_of(lo), self.grid.index_of(hi)
        mask = np.ones(self.grid.n_points, dtype=bool)
        mask[i:j + 1] = False
        values = np.where(_column(mask, self.values), self.values, 0.0)
        return self.with_values(values, self.support_hint)

    def evaluate_at(self, t) -> np.ndarray:
        """Linear interpolation between nodes, zero off the grid"""
        t = np.asarray(t, dtype=np.float64)
        return interpolate_columns(t, self.nodes, self.values)

    def component(self, k: int) -> "GridFunction":
        if not self.is_lattice:
            raise StructuralError("scalar grid function has no components")
        return self.with_values(self.values[:, k], self.support_hint)

    def column_names(self) -> List[str]:
        if self.is_lattice:
            return [f"v{k}" for k in range(self.values.shape[1])]
        return ["value"]

    def to_frame(self) -> pd.DataFrame:
        """Table with a `t` column followed by `value` or `v0, v1, ...`"""
        data = {"t": self.nodes}
        columns = self.values if self.is_lattice else self.values[:, None]
        for k, name in enumerate(self.column_names()):
            data[name] = columns[:, k]
        return pd.DataFrame(data)


def _column(mask: np.ndarray, like: np.ndarray) -> np.ndarray:
    """Broadcast a per-node array against lattice-valued data"""
    if like.ndim == 2 and mask.ndim == 1:
        return mask[:, None]
    return mask


def _hull(f: GridFunction, g: GridFunction) -> Optional[Tuple[float, float]]:
    if f.support_hint is None or g.support_hint is None:
        return None
    return min(f.support_hint[0], g.support_hint[0]), max(f.support_hint[1], g.support_hint[1])


def _hint_or_none(grid: Grid, lo: float, hi: float) -> Optional[Tuple[float, float]]:
    if lo <= grid.t0 and hi >= grid.end:
        return None
    return lo, hi


def interpolate_columns(t: np.ndarray, nodes: np.ndarray, values: np.ndarray) -> np.ndarray:
    """np.interp applied column by column, zero outside [nodes[0], nodes[-1]]"""
    if values.ndim == 1:
        return np.interp(t, nodes, values, left=0.0, right=0.0)
    return np.stack(
        [np.interp(t, nodes, values[:, k], left=0.0, right=0.0) for k in range(values.shape[1])],
        axis=-1,
    )
