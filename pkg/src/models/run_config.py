from enum import Enum
from typing import List, Literal, Optional, Tuple

from pydantic import BaseModel, Field, field_validator

from .filters import FilterKind
from .moment import InnerRule
from .process import ProcessKind
from ..utils.errors import ConfigError

COMMANDS = (
    "kernel",
    "transform",
    "identity",
    "bounds",
    "ode",
    "weak",
    "filter",
    "modular",
    "brownian",
    "ito",
    "smooth-converge",
    "figure1",
)


class SequenceName(str, Enum):
    INVERSE = "inverse"  # x_k = 1/k
    SQUARE_INDICATOR = "square_indicator"  # 1 on perfect squares, 1/k elsewhere


class ModularName(str, Enum):
    LEBESGUE = "lebesgue"
    LOG_SCALE = "log_scale"
    WEIGHTED_DERIV = "weighted_deriv"


class ToleranceConfig(BaseModel):
    identity: float = Field(1e-4, gt=0)
    transform: float = Field(1e-4, gt=0)
    ode: float = Field(1e-3, gt=0)
    axioms: float = Field(1e-12, gt=0)
    weak: float = Field(0.25, gt=0)
    vitali: float = Field(5e-2, gt=0)


def _split_list(v):
    """Accept "50,80" from flat key=value files as well as real lists"""
    if isinstance(v, str):
        return [item.strip() for item in v.split(",") if item.strip()]
    return v


class DefaultsConfig(BaseModel):
    """Every tunable parameter with its documented default"""
    seed: int = Field(20240917, ge=0, lt=2 ** 64)
    a: float = Field(1.5, ge=0)
    b: float = Field(3.0, gt=0)
    T: float = Field(3.0, gt=0, description="End of the time interval for path experiments")
    h: float = Field(1e-3, gt=0)
    n: int = Field(50, ge=1)
    n_list: List[int] = Field(default_factory=lambda: [5, 20, 80])
    figure_n: List[int] = Field(default_factory=lambda: [50, 80])
    smax: Optional[float] = Field(None, gt=0, description="End of the evaluation window; 2b when unset")
    profile: str = "bump"
    inner_rule: InnerRule = InnerRule.TRAPEZOID
    nu: float = Field(1.0, gt=0)
    c: float = 0.0
    w: float = Field(0.5, ge=0)
    w_support: Tuple[float, float] = (1.0, 4.0)
    pairs: int = Field(10_000, ge=1)
    trials: int = Field(10_000, ge=1)
    workers: int = Field(1, ge=1)
    process: ProcessKind = ProcessKind.BRIDGE
    horizon: int = Field(1_000_000, ge=1)
    kind: FilterKind = FilterKind.DENSITY
    threshold: float = Field(0.999, gt=0, le=1)
    sequence: SequenceName = SequenceName.SQUARE_INDICATOR
    ladder: List[float] = Field(default_factory=lambda: [0.1, 0.01, 0.001])
    modular: ModularName = ModularName.LEBESGUE
    corpus_size: int = Field(50, ge=1)
    dump_trials: bool = False
    output_dir: str = "results"
    format: Literal["csv", "json"] = "csv"
    tolerances: ToleranceConfig = Field(default_factory=ToleranceConfig)

    @field_validator("n_list", "figure_n", "ladder", "w_support", mode="before")
    @classmethod
    def _split(cls, v):
        return _split_list(v)

    @field_validator("n_list", "figure_n")
    @classmethod
    def _positive_orders(cls, v: List[int]) -> List[int]:
        if any(n < 1 for n in v):
            raise ValueError("operator orders must be >= 1")
        return v


class RunConfig(DefaultsConfig):
    """Fully resolved parameters of one subcommand run"""
    command: Literal[COMMANDS]

    @property
    def s_max(self) -> float:
        return self.smax if self.smax is not None else 2 * self.b

    @property
    def starts_at_origin(self) -> bool:
        """Moment subcommands whose support starts at a = 0"""
        return self.a == 0 and self.command in ("transform", "identity", "bounds", "ode", "weak")

    def check_preconditions(self):
        """Raise ConfigError when the target operation cannot accept these parameters"""
        if self.a >= self.b and self.command in ("transform", "identity", "bounds", "weak", "ode"):
            raise ConfigError(f"support needs a < b, got a={self.a}, b={self.b}")
        if self.command in ("identity", "bounds") and self.n < 2:
            raise ConfigError(f"{self.command} needs n >= 2 for an integrable tail")
        if self.command in ("ito", "smooth-converge", "figure1"):
            bridged = self.command != "ito" or self.process in (
                ProcessKind.BRIDGE, ProcessKind.SMOOTHED_BRIDGE
            )
            if bridged and not 1 < self.a < self.T:
                raise ConfigError(f"the bridge needs 1 < a < T, got a={self.a}, T={self.T}")
        if self.command == "smooth-converge" and any(n < 2 for n in self.n_list):
            raise ConfigError("smooth-converge needs every n >= 2")
        if self.command in ("ito", "smooth-converge") and self.trials < 100:
            raise ConfigError(f"Monte Carlo runs need at least 100 trials, got {self.trials}")
        if self.w_support[0] >= self.w_support[1]:
            raise ConfigError(f"empty w support {self.w_support}")
        return self
