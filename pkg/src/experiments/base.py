import asyncio
import logging
import time
from abc import ABC, abstractmethod
from typing import Any, Dict, Optional

import numpy as np
from pydantic import BaseModel, Field

from ..models.grid import Grid, GridFunction
from ..models.run_config import RunConfig
from ..services.output_service import OutputService
from ..services.profiles import get_profile

logger = logging.getLogger(__name__)


class ExperimentResult(BaseModel):
    command: str
    passed: bool
    report: Dict[str, Any]
    # text echoed on standard output, e.g. the kernel value
    message: Optional[str] = None
    elapsed: float = Field(0.0, exclude=True)


class BaseExperiment(ABC):
    """Base class for every subcommand"""

    command: str = ""

    def __init__(self, config: RunConfig, output: OutputService):
        self.config = config
        self.output = output

    @abstractmethod
    def run(self) -> ExperimentResult:
        """Compute the report and write the experiment's data files"""

    async def execute(self) -> ExperimentResult:
        """run() on a worker thread so several experiments can share one event loop"""
        started = time.time()
        result = await asyncio.to_thread(self.run)
        result.elapsed = time.time() - started
        level = logging.INFO if result.passed else logging.WARNING
        logger.log(level, f"{self.command}: pass={result.passed} in {result.elapsed:.2f}s")
        return result

    def result(self, passed: bool, report: Dict[str, Any], message: Optional[str] = None) -> ExperimentResult:
        return ExperimentResult(command=self.command, passed=bool(passed), report=report, message=message)

    # shared builders

    def input_grid(self) -> Grid:
        """[0, b] with step h; a and b must be nodes"""
        return Grid.from_interval(0.0, self.config.b, self.config.h)

    def profile_function(self) -> GridFunction:
        profile = get_profile(self.config.profile)
        return profile.build(self.input_grid(), self.config.a, self.config.b)

    def path_grid(self) -> Grid:
        """[0, T] with step h for Brownian experiments"""
        return Grid.from_interval(0.0, self.config.T, self.config.h)

    def weight_function(self, grid: Grid) -> GridFunction:
        """w(t) = (t - lo)^2 (hi - t)^2 on w_support: compactly supported and C^1"""
        lo, hi = self.config.w_support
        return GridFunction.from_callable(
            grid, lambda t: (t - lo) ** 2 * (hi - t) ** 2, support=(lo, hi)
        )

    def weight_derivative(self, grid: Grid) -> GridFunction:
        w = self.weight_function(grid)
        slope = w.with_values(np.gradient(w.values, grid.h))
        return slope.restrict(*w.support_hint)
