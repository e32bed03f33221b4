from enum import Enum
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .grid import Grid, GridFunction
from .lattice import frozen_array
from .reports import Report


class BrownianPath(BaseModel):
    """Discretised Brownian trajectory; increment i is a function of (seed, trial, i) only"""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    grid: Grid
    values: np.ndarray
    seed: int = Field(..., ge=0, lt=2 ** 64)
    trial: int = Field(0, ge=0, lt=2 ** 64)

    @field_validator("values", mode="before")
    @classmethod
    def _coerce(cls, v):
        return frozen_array(v, ndim=1)

    @model_validator(mode="after")
    def _starts_at_origin(self):
        if self.grid.t0 != 0:
            raise ValueError("Brownian paths start at t0 = 0")
        if self.values.size != self.grid.n_points:
            raise ValueError(f"{self.values.size} values for {self.grid.n_points} nodes")
        if self.values[0] != 0:
            raise ValueError("B(0) must be 0")
        return self

    @property
    def increments(self) -> np.ndarray:
        return np.diff(self.values)

    def as_function(self) -> GridFunction:
        return GridFunction(grid=self.grid, values=self.values)

    def to_frame(self):
        return self.as_function().to_frame().rename(columns={"value": "B"})


class ProcessKind(str, Enum):
    CONSTANT = "constant"
    BRIDGE = "bridge"
    SMOOTHED_BRIDGE = "smoothed_bridge"
    STEP = "step"


class RegularProcessSpec(BaseModel):
    """Integrand Y built path by path; K_bound is the declared sup_t E(Y(t)^2)"""
    model_config = ConfigDict(frozen=True)

    kind: ProcessKind
    c: float = 0.0
    a: Optional[float] = None
    T: Optional[float] = None
    n: Optional[int] = Field(None, ge=1)
    # deterministic step function: (lo, hi, value) on the half-open [lo, hi)
    steps: List[Tuple[float, float, float]] = Field(default_factory=list)
    K_bound: Optional[float] = Field(None, ge=0)

    @model_validator(mode="after")
    def _check_kind(self):
        if self.kind in (ProcessKind.BRIDGE, ProcessKind.SMOOTHED_BRIDGE):
            if self.a is None or self.T is None:
                raise ValueError(f"{self.kind.value} needs a and T")
            if not 1 < self.a < self.T:
                raise ValueError(f"bridge needs 1 < a < T, got a={self.a}, T={self.T}")
        if self.kind is ProcessKind.SMOOTHED_BRIDGE and self.n is None:
            raise ValueError("smoothed_bridge needs the operator order n")
        if self.kind is ProcessKind.STEP:
            if not self.steps:
                raise ValueError("step process needs at least one step")
            for lo, hi, _ in self.steps:
                if hi <= lo:
                    raise ValueError(f"empty step [{lo}, {hi})")
        if self.K_bound is None:
            object.__setattr__(self, "K_bound", self.analytic_bound())
        return self

    def analytic_bound(self) -> float:
        if self.kind is ProcessKind.CONSTANT:
            return self.c * self.c
        if self.kind is ProcessKind.STEP:
            return max(v * v for _, _, v in self.steps)
        # max over [a, T] of (t - T)^2 (t - a), reached at t = a + (T - a)/3;
        # T_n only averages, so the smoothed bridge shares the bound
        length = self.T - self.a
        return 4 * length ** 3 / 27

    @classmethod
    def constant(cls, c: float) -> "RegularProcessSpec":
        return cls(kind=ProcessKind.CONSTANT, c=c)

    @classmethod
    def bridge(cls, a: float, T: float) -> "RegularProcessSpec":
        return cls(kind=ProcessKind.BRIDGE, a=a, T=T)

    @classmethod
    def smoothed_bridge(cls, a: float, T: float, n: int) -> "RegularProcessSpec":
        return cls(kind=ProcessKind.SMOOTHED_BRIDGE, a=a, T=T, n=n)

    @classmethod
    def step(cls, steps: List[Tuple[float, float, float]]) -> "RegularProcessSpec":
        return cls(kind=ProcessKind.STEP, steps=steps)

    def describe(self) -> Dict[str, object]:
        return self.model_dump(mode="json", exclude_none=True, exclude_defaults=False)


class MonteCarloReport(Report):
    spec: Dict[str, object]
    trials: int = Field(..., ge=2)
    estimate_mean: float
    mean_standard_error: float = Field(..., ge=0)
    estimate_second_moment: float
    standard_error: float = Field(..., ge=0, description="SE of the second-moment estimate")
    bound_KT: float
    bound_satisfied_within_3se: bool
    mean_within_3se: bool
    isometry_value: Optional[float] = Field(
        None, description="Left Riemann sum of Y^2 dt for deterministic integrands"
    )
    samples: Optional[List[float]] = Field(None, exclude=True)

    @property
    def passed(self) -> bool:
        return self.bound_satisfied_within_3se


class SmoothedRow(BaseModel):
    n: int
    mean_square_error: float = Field(..., description="E(int T_n f dB - (I) int f dB)^2")
    standard_error: float
    rms: float
    uniform_l2: float = Field(..., description="sup_s ||T_n f(s) - f(s)||_2 over the sample ensemble")
    clamped_mse: float


class SmoothedConvergenceReport(Report):
    a: float
    T_end: float
    h: float
    trials: int
    reference_second_moment: float
    clamp_M: float
    rows: List[SmoothedRow]
    decreasing_within_se: bool
    margin_ok: bool
    samples: Optional[Dict[str, List[float]]] = Field(None, exclude=True)

    @property
    def passed(self) -> bool:
        return self.decreasing_within_se and self.margin_ok

    def to_frame(self):
        return pd.DataFrame([r.model_dump() for r in self.rows])


class IncrementCovariance(Report):
    trials: int
    split: float
    covariance: float
    standard_error: float

    @property
    def passed(self) -> bool:
        return abs(self.covariance) <= 3 * self.standard_error
