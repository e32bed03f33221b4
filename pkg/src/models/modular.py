from enum import Enum
from typing import Optional

from pydantic import BaseModel, ConfigDict, model_validator

from .grid import GridFunction


class ModularKind(str, Enum):
    L1 = "l1"
    WEIGHTED_DERIV = "weighted_deriv"


class Measure(str, Enum):
    LEBESGUE = "lebesgue"
    LOG_SCALE = "log_scale"  # dt / t


class ModularSpec(BaseModel):
    """Which modular functional rho to evaluate on grid functions"""
    model_config = ConfigDict(frozen=True)

    kind: ModularKind = ModularKind.L1
    measure: Measure = Measure.LEBESGUE
    w_prime: Optional[GridFunction] = None
    description: str = ""

    @model_validator(mode="after")
    def _check_weight(self):
        if self.kind is ModularKind.WEIGHTED_DERIV:
            if self.w_prime is None:
                raise ValueError("weighted_deriv modular needs w_prime")
            if self.w_prime.support_hint is None:
                raise ValueError("w_prime must carry a compact support_hint")
        return self

    @classmethod
    def l1(cls, measure: Measure = Measure.LEBESGUE) -> "ModularSpec":
        name = "int |f| dt" if measure is Measure.LEBESGUE else "int |f| dt/t"
        return cls(kind=ModularKind.L1, measure=measure, description=name)

    @classmethod
    def weighted_deriv(cls, w_prime: GridFunction) -> "ModularSpec":
        return cls(kind=ModularKind.WEIGHTED_DERIV, w_prime=w_prime, description="int |f| |w'| ds")
