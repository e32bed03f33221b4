from typing import Any, Dict, List, Optional, Tuple

import pandas as pd
from pydantic import BaseModel, Field

from .filters import Verdict

UNDER_APPROXIMATION_NOTE = (
    "finite diagnostic: the defining conditions quantify over every (o)-sequence and "
    "every small set; only the listed rungs and sets were evaluated"
)


class Report(BaseModel):
    """Common surface of every verdict object"""

    def to_json_dict(self) -> Dict[str, Any]:
        return self.model_dump(mode="json")

    @property
    def passed(self) -> bool:
        return True


class RungResult(BaseModel):
    epsilon: float
    set_size: int
    density: float = Field(..., description="Plain finite-horizon density of the rung set")
    verdict: Verdict


class ConvergenceReport(Report):
    horizon: int
    filter: Dict[str, Any]
    limit: float
    rungs: List[RungResult]
    pass_: bool = Field(..., alias="pass", serialization_alias="pass")

    model_config = {"populate_by_name": True}

    @property
    def passed(self) -> bool:
        return self.pass_

    def to_json_dict(self) -> Dict[str, Any]:
        return self.model_dump(mode="json", by_alias=True)


class AxiomReport(Report):
    rho0_ok: bool
    rho1_ok: bool
    rho2_ok: bool
    monotone_ok: bool
    worst_violation: float = Field(..., ge=0)
    violations: Dict[str, float]
    tolerance: float
    samples_used: int

    @property
    def passed(self) -> bool:
        return self.rho0_ok and self.rho1_ok and self.rho2_ok and self.monotone_ok


class EquiACReport(Report):
    alpha: float
    tolerance: float
    small_set_table: List[Tuple[float, float]] = Field(
        ..., description="(measure of B, sup_z rho(alpha f_z 1_B))"
    )
    exhaustion_table: List[Tuple[float, float]] = Field(
        ..., description="(right end of B_m, sup_z rho(alpha f_z 1_(G minus B_m)))"
    )
    ac1_ok: bool
    ac2_ok: bool
    note: str = UNDER_APPROXIMATION_NOTE

    @property
    def passed(self) -> bool:
        return self.ac1_ok and self.ac2_ok


class DecayRow(BaseModel):
    n: int
    alpha: float
    rho_value: float


class DecayTable(Report):
    rows: List[DecayRow]

    def series(self, alpha: float) -> List[float]:
        return [r.rho_value for r in self.rows if r.alpha == alpha]

    def indices(self) -> List[int]:
        return sorted({r.n for r in self.rows})

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            [(r.n, r.alpha, r.rho_value) for r in self.rows], columns=["n", "alpha", "rho_value"]
        )


class BoundReport(Report):
    n: int
    lipschitz_ok: bool
    lipschitz_constant: float
    worst_lipschitz_excess: float
    lipschitz_witness: Optional[Tuple[float, float]] = None
    pairs_checked: int
    tail_ok: bool
    worst_tail_excess: float
    uniform_error: float
    l1_error: float
    equi_ac_tail: float
    tail_mass_beyond_2b: Optional[float] = None
    equi_ac_ok: bool
    uniform_error_bound: Optional[float] = None

    @property
    def passed(self) -> bool:
        return self.lipschitz_ok and self.tail_ok and self.equi_ac_ok


class WeakConvergenceRow(BaseModel):
    n: int
    delta_weak: float = Field(..., description="|int T_n f w' - int f w'|")
    delta_stieltjes: float = Field(..., description="|int w d(T_n f) - int w df|")


class WeakConvergenceTable(Report):
    rows: List[WeakConvergenceRow]
    tolerance: float
    tail_bound: float
    decreasing: bool
    last_within_tolerance: bool = True

    @property
    def passed(self) -> bool:
        return self.decreasing and self.last_within_tolerance

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([r.model_dump() for r in self.rows])


class DerivativeCheck(Report):
    n: int
    max_deviation: float
    nodes_checked: int
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_deviation <= self.tolerance


class UniformDerivativeRow(BaseModel):
    delta: float
    sup_deviation: float


class UniformDerivativeReport(Report):
    rows: List[UniformDerivativeRow]
    note: str = UNDER_APPROXIMATION_NOTE

    @property
    def passed(self) -> bool:
        values = [r.sup_deviation for r in self.rows]
        return all(b <= a + 1e-12 for a, b in zip(values, values[1:]))


class ResidualReport(Report):
    """Deviation of a computed quantity from its identity, with the declared tolerance"""
    residual: float
    tolerance: float
    detail: Dict[str, float] = Field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.residual <= self.tolerance
