"""Subcommands for the convergence structures: filter limits and modular functionals"""

import logging
from typing import Dict, List

import numpy as np
import pandas as pd

from .base import BaseExperiment, ExperimentResult
from ..models.filters import FilterKind, FilterSpec, is_square, tail
from ..models.grid import Grid, GridFunction
from ..models.lattice import OSequenceLadder
from ..models.modular import Measure, ModularSpec
from ..models.run_config import ModularName, SequenceName
from ..services.filters import SequenceGenerator, filter_limit_verdict
from ..services.modulars import check_axioms, eventual_start, finiteness_scan, vitali_decay
from ..services.moment_ops import moment_values

logger = logging.getLogger(__name__)

SEQUENCES: Dict[SequenceName, SequenceGenerator] = {
    SequenceName.INVERSE: lambda k: 1.0 / k,
    SequenceName.SQUARE_INDICATOR: lambda k: np.where(is_square(k), 1.0, 1.0 / k),
}

MODULAR_GRID_START = 0.5
CORPUS_FREQUENCIES = 4


class FilterExperiment(BaseExperiment):
    command = "filter"

    def filter_spec(self) -> FilterSpec:
        cfg = self.config
        base = []
        if cfg.kind is FilterKind.EXPLICIT_BASE:
            # the Frechet base {k >= H/2}, a single set and so closed under intersection
            base = [tail(cfg.horizon // 2 + 1)]
        return FilterSpec(
            kind=cfg.kind, horizon=cfg.horizon, density_threshold=cfg.threshold, base_sets=base
        )

    def run(self) -> ExperimentResult:
        cfg = self.config
        ladder = OSequenceLadder.from_values(cfg.ladder)
        report = filter_limit_verdict(SEQUENCES[cfg.sequence], 0.0, ladder, self.filter_spec())
        rows = pd.DataFrame([r.model_dump(mode="json") for r in report.rungs])
        self.output.write_table("filter_rungs", rows, cfg.format)
        payload = report.to_json_dict()
        payload["sequence"] = cfg.sequence.value
        return self.result(report.passed, payload)


def random_corpus(grid: Grid, size: int, seed: int) -> List[GridFunction]:
    """Seeded trigonometric polynomials with random amplitudes, plus the zero function"""
    rng = np.random.default_rng(seed)
    t = grid.nodes
    corpus = [GridFunction(grid=grid, values=np.zeros(grid.n_points))]
    for _ in range(size - 1):
        amplitudes = rng.normal(size=CORPUS_FREQUENCIES)
        phases = rng.uniform(0, 2 * np.pi, size=CORPUS_FREQUENCIES)
        values = sum(
            amp * np.sin((k + 1) * t + phase)
            for k, (amp, phase) in enumerate(zip(amplitudes, phases))
        )
        corpus.append(GridFunction(grid=grid, values=values))
    return corpus


class ModularExperiment(BaseExperiment):
    command = "modular"

    def modular_grid(self) -> Grid:
        return Grid.from_interval(MODULAR_GRID_START, 2 * self.config.b, self.config.h)

    def modular(self, grid: Grid) -> ModularSpec:
        name = self.config.modular
        if name is ModularName.WEIGHTED_DERIV:
            return ModularSpec.weighted_deriv(self.weight_derivative(grid))
        if name is ModularName.LOG_SCALE:
            return ModularSpec.l1(Measure.LOG_SCALE)
        return ModularSpec.l1(Measure.LEBESGUE)

    def run(self) -> ExperimentResult:
        cfg = self.config
        grid = self.modular_grid()
        rho = self.modular(grid)

        axioms = check_axioms(rho, random_corpus(grid, cfg.corpus_size, cfg.seed), cfg.tolerances.axioms)

        scan = finiteness_scan(rho, grid, (max(cfg.a, grid.t0), cfg.b), cfg.ladder)
        self.output.write_table("modular_finiteness", pd.DataFrame(scan, columns=["epsilon", "rho"]), cfg.format)

        # |T_n f - f| for the configured profile, one member per n
        f = self.profile_function()
        f_on = f.evaluate_at(grid.nodes)
        family = {
            n: GridFunction(grid=grid, values=np.abs(moment_values(f, n, grid.nodes, cfg.inner_rule) - f_on))
            for n in cfg.n_list
        }
        decay = vitali_decay(family, rho)
        self.output.write_table("modular_decay", decay.to_frame(), cfg.format)

        alphas = sorted({r.alpha for r in decay.rows}, reverse=True)
        series = {alpha: decay.series(alpha) for alpha in alphas}
        decays = all(values[-1] < values[0] or values[0] == 0 for values in series.values())
        smallest = series[alphas[-1]][-1]
        vitali_ok = decays and smallest <= cfg.tolerances.vitali

        payload = {
            "modular": rho.description,
            "axioms": axioms.to_json_dict(),
            "finiteness": [{"epsilon": eps, "rho": value} for eps, value in scan],
            "decay": {
                "n_list": list(cfg.n_list),
                "series": {f"{alpha:.17g}": values for alpha, values in series.items()},
                "eventual_start": {f"{alpha:.17g}": eventual_start(values) for alpha, values in series.items()},
                "decreasing": decays,
                "last_at_smallest_alpha": smallest,
                "tolerance": cfg.tolerances.vitali,
            },
        }
        if not vitali_ok:
            logger.warning(f"Vitali decay not observed under {rho.description}")
        return self.result(axioms.passed and vitali_ok, payload)
