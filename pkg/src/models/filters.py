from enum import Enum
from typing import Callable, List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from ..utils.errors import StructuralError

# Index predicates are vectorised: they receive an int64 array of indices k >= 1
IndexPredicate = Callable[[np.ndarray], np.ndarray]

DEFAULT_DENSITY_THRESHOLD = 0.999


class FilterKind(str, Enum):
    COFINITE = "cofinite"
    DENSITY = "density"
    EXPLICIT_BASE = "explicit_base"


class Verdict(str, Enum):
    IN_FILTER = "InFilter"
    NOT_IN_FILTER = "NotInFilter"
    UNDECIDABLE = "Undecidable"


class IndexSet(BaseModel):
    """Subset of N = {1, 2, ...}, as an explicit sorted list or a tagged predicate"""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    tag: str = Field(..., description="Human readable name used in reports")
    indices: Optional[np.ndarray] = None
    predicate: Optional[IndexPredicate] = None

    @field_validator("indices", mode="before")
    @classmethod
    def _coerce(cls, v):
        if v is None:
            return None
        array = np.unique(np.asarray(v, dtype=np.int64))
        if array.size and array[0] < 1:
            raise ValueError("indices start at 1")
        array.setflags(write=False)
        return array

    @classmethod
    def explicit(cls, indices, tag: str = "explicit") -> "IndexSet":
        return cls(tag=tag, indices=indices)

    @classmethod
    def where(cls, tag: str, predicate: IndexPredicate) -> "IndexSet":
        return cls(tag=tag, predicate=predicate)

    def mask(self, horizon: int) -> np.ndarray:
        """Membership of 1..horizon as a boolean array (position k-1 holds k)"""
        if self.indices is not None:
            mask = np.zeros(horizon, dtype=bool)
            inside = self.indices[self.indices <= horizon]
            mask[inside - 1] = True
            return mask
        if self.predicate is None:
            raise ValueError(f"index set {self.tag!r} has neither indices nor a predicate")
        k = np.arange(1, horizon + 1, dtype=np.int64)
        return np.asarray(self.predicate(k), dtype=bool)

    def complement(self) -> "IndexSet":
        return IndexSet.where(f"not({self.tag})", lambda k: ~self._member(k))

    def intersect(self, other: "IndexSet") -> "IndexSet":
        return IndexSet.where(
            f"({self.tag})&({other.tag})", lambda k: self._member(k) & other._member(k)
        )

    def _member(self, k: np.ndarray) -> np.ndarray:
        if self.indices is not None:
            return np.isin(k, self.indices)
        return np.asarray(self.predicate(k), dtype=bool)


def is_square(k: np.ndarray) -> np.ndarray:
    r = np.floor(np.sqrt(k.astype(np.float64))).astype(np.int64)
    # correct the float root near large perfect squares
    r = np.where((r + 1) * (r + 1) <= k, r + 1, r)
    r = np.where(r * r > k, r - 1, r)
    return r * r == k


def everything() -> IndexSet:
    return IndexSet.where("all", lambda k: np.ones(k.shape, dtype=bool))


def evens() -> IndexSet:
    return IndexSet.where("evens", lambda k: k % 2 == 0)


def squares() -> IndexSet:
    return IndexSet.where("squares", is_square)


def non_squares() -> IndexSet:
    return IndexSet.where("non_squares", lambda k: ~is_square(k))


def tail(start: int) -> IndexSet:
    """{k : k >= start}"""
    return IndexSet.where(f"k>={start}", lambda k: k >= start)


class FilterSpec(BaseModel):
    """Free filter on N evaluated at a finite horizon H"""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    kind: FilterKind
    horizon: int = Field(..., ge=1)
    density_threshold: float = Field(DEFAULT_DENSITY_THRESHOLD, gt=0, le=1)
    base_sets: List[IndexSet] = Field(default_factory=list)
    # exceptions in {1..cutoff_fraction*H} count as finitely many
    cutoff_fraction: float = Field(0.5, gt=0, lt=1)

    @property
    def cutoff(self) -> int:
        return int(self.horizon * self.cutoff_fraction)

    @property
    def density_slack(self) -> float:
        return 1.0 - self.density_threshold

    def describe(self) -> dict:
        description = {"kind": self.kind.value, "horizon": self.horizon, "cutoff": self.cutoff}
        if self.kind is FilterKind.DENSITY:
            description["density_threshold"] = self.density_threshold
            description["density_slack"] = self.density_slack
        if self.kind is FilterKind.EXPLICIT_BASE:
            description["base_sets"] = [s.tag for s in self.base_sets]
        return description

    @model_validator(mode="after")
    def _check_base(self):
        if self.kind is not FilterKind.EXPLICIT_BASE:
            return self
        if not self.base_sets:
            raise ValueError("an explicit filter needs at least one base set")
        masks = [s.mask(self.horizon) for s in self.base_sets]
        for s, m in zip(self.base_sets, masks):
            if not m.any():
                raise StructuralError(f"base set {s.tag!r} is empty up to the horizon")
        for i, a in enumerate(masks):
            for b in masks[i + 1:]:
                both = a & b
                if not any(not np.any(c & ~both) and c.any() for c in masks):
                    raise StructuralError(
                        "base is not closed under intersection up to the horizon"
                    )
        return self
