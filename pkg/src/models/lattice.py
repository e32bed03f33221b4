from typing import List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


def frozen_array(values, ndim: Optional[int] = None) -> np.ndarray:
    """Copy values into a read-only float64 array"""
    array = np.array(values, dtype=np.float64, copy=True)
    if ndim is not None and array.ndim != ndim:
        raise ValueError(f"expected a {ndim}-d array, got shape {array.shape}")
    array.setflags(write=False)
    return array


class LatticeVector(BaseModel):
    """Element of R^d with the componentwise order; the strong unit is the all-ones vector.

    Also used as a random variable sampled on d outcomes.
    """
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    values: np.ndarray = Field(..., description="Finite components")

    @field_validator("values", mode="before")
    @classmethod
    def _coerce(cls, v):
        array = frozen_array(np.atleast_1d(np.asarray(v, dtype=np.float64)), ndim=1)
        if array.size < 1:
            raise ValueError("a lattice vector needs at least one component")
        if not np.all(np.isfinite(array)):
            raise ValueError("lattice vector entries must be finite")
        return array

    @property
    def dim(self) -> int:
        return int(self.values.size)

    @classmethod
    def of(cls, *components: float) -> "LatticeVector":
        return cls(values=list(components))

    @classmethod
    def unit(cls, dim: int) -> "LatticeVector":
        """The strong unit e"""
        return cls(values=np.ones(dim))

    @classmethod
    def zeros(cls, dim: int) -> "LatticeVector":
        return cls(values=np.zeros(dim))

    def __len__(self) -> int:
        return self.dim

    def __getitem__(self, i: int) -> float:
        return float(self.values[i])

    def tolist(self) -> List[float]:
        return [float(v) for v in self.values]

    def __eq__(self, other) -> bool:
        if not isinstance(other, LatticeVector):
            return NotImplemented
        return self.dim == other.dim and bool(np.array_equal(self.values, other.values))

    def __hash__(self) -> int:
        return hash(self.values.tobytes())


class OSequenceLadder(BaseModel):
    """Finite stand-in for a decreasing real sequence with infimum 0.

    The last rung must sit at or below `tolerance`.
    """
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    values: np.ndarray
    tolerance: float = Field(..., gt=0)

    @field_validator("values", mode="before")
    @classmethod
    def _coerce(cls, v):
        array = frozen_array(v, ndim=1)
        if array.size == 0:
            raise ValueError("a ladder needs at least one rung")
        if not np.all(np.isfinite(array)) or np.any(array <= 0):
            raise ValueError("ladder rungs must be finite and strictly positive")
        if np.any(np.diff(array) > 0):
            raise ValueError("ladder rungs must be non-increasing")
        return array

    @model_validator(mode="after")
    def _reaches_tolerance(self):
        if self.values[-1] > self.tolerance:
            raise ValueError(
                f"last rung {self.values[-1]:g} is above the tolerance {self.tolerance:g}"
            )
        return self

    @classmethod
    def from_values(cls, values, tolerance: Optional[float] = None) -> "OSequenceLadder":
        """Ladder whose tolerance defaults to its own last rung"""
        values = list(values)
        if tolerance is None and values:
            tolerance = float(values[-1])
        return cls(values=values, tolerance=tolerance)

    @classmethod
    def geometric(cls, start: float, ratio: float, tolerance: float) -> "OSequenceLadder":
        """start, start*ratio, ... down to the first rung at or below tolerance"""
        if not 0 < ratio < 1:
            raise ValueError("ratio must lie in (0, 1)")
        if start <= 0:
            raise ValueError("start must be positive")
        rungs = [float(start)]
        while rungs[-1] > tolerance:
            rungs.append(rungs[-1] * ratio)
        return cls(values=rungs, tolerance=tolerance)

    def __len__(self) -> int:
        return int(self.values.size)

    def rungs(self) -> List[float]:
        return [float(v) for v in self.values]
