from enum import Enum
from typing import Optional, Union

from pydantic import BaseModel, ConfigDict, Field

from .grid import GridFunction
from .lattice import LatticeVector


class InnerRule(str, Enum):
    """How the inner integral of t^(n-1) f(t) is accumulated"""
    TRAPEZOID = "trapezoid"
    # t^(n-1) times the piecewise-linear interpolant of f, integrated cell by cell in closed form
    LINEAR_EXACT = "linear_exact"


class MomentTransform(BaseModel):
    """T_n f sampled on an evaluation grid, with the data its closed-form tail needs"""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    n: int = Field(..., ge=1)
    input: GridFunction
    output: GridFunction
    K_n: Optional[Union[float, LatticeVector]] = Field(
        None, description="int_0^b t^(n-1) f(t) dt; None when b^(n-1) is not a finite double"
    )
    scaled_moment: Union[float, LatticeVector] = Field(
        ..., description="K_n / b^(n-1), the same moment without the overflowing factor"
    )
    M_f: float = Field(..., ge=0, description="Grid maximum of |f|")
    a: float
    b: float
    inner_rule: InnerRule = InnerRule.TRAPEZOID

    @property
    def eval_grid(self):
        return self.output.grid

    @property
    def s_max(self) -> float:
        return self.output.grid.end

    @property
    def M(self) -> float:
        """n b^n M_f"""
        return self.n * self.b ** self.n * self.M_f

    def to_frame(self):
        """Columns s, f, Tn_f (scalar transforms only)"""
        frame = self.output.to_frame().rename(columns={"t": "s", "value": "Tn_f"})
        frame.insert(1, "f", self.input.evaluate_at(self.output.nodes))
        return frame
