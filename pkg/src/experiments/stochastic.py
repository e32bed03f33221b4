"""Subcommands for Brownian paths, Ito sums and the figure data"""

import logging

import numpy as np
import pandas as pd

from .base import BaseExperiment, ExperimentResult
from ..models.process import ProcessKind, RegularProcessSpec
from ..services.moment_ops import moment_values
from ..services.stochastic import (
    bridge_process,
    holder_witness,
    increment_covariance,
    mc_ito_moments,
    simulate_brownian,
    smoothed_convergence_experiment,
    trial_frame,
)

logger = logging.getLogger(__name__)

OVERLAY_TRAJECTORIES = 10


class BrownianExperiment(BaseExperiment):
    command = "brownian"

    def run(self) -> ExperimentResult:
        cfg = self.config
        grid = self.path_grid()
        path = simulate_brownian(cfg.seed, grid)
        self.output.write_table("brownian", path.to_frame(), cfg.format)
        covariance = increment_covariance(cfg.seed, grid, cfg.trials)
        report = {
            "n_points": grid.n_points,
            "B_T": float(path.values[-1]),
            "holder_quarter_witness": holder_witness(path),
            "increment_covariance": covariance.to_json_dict(),
        }
        return self.result(covariance.passed, report)


class ItoExperiment(BaseExperiment):
    command = "ito"

    def integrand(self) -> RegularProcessSpec:
        cfg = self.config
        if cfg.process is ProcessKind.CONSTANT:
            return RegularProcessSpec.constant(cfg.c)
        if cfg.process is ProcessKind.STEP:
            # +1 on the first half of [0, T], -1 on the second
            return RegularProcessSpec.step([(0.0, cfg.T / 2, 1.0), (cfg.T / 2, cfg.T, -1.0)])
        if cfg.process is ProcessKind.SMOOTHED_BRIDGE:
            return RegularProcessSpec.smoothed_bridge(cfg.a, cfg.T, cfg.n)
        return RegularProcessSpec.bridge(cfg.a, cfg.T)

    def run(self) -> ExperimentResult:
        cfg = self.config
        report = mc_ito_moments(
            self.integrand(),
            self.path_grid(),
            cfg.trials,
            cfg.seed,
            workers=cfg.workers,
            keep_samples=cfg.dump_trials,
        )
        if cfg.dump_trials:
            self.output.write_csv("ito_trials.csv", trial_frame({"ito_sum": report.samples}))
        return self.result(report.passed, report.to_json_dict())


class SmoothConvergeExperiment(BaseExperiment):
    command = "smooth-converge"

    def run(self) -> ExperimentResult:
        cfg = self.config
        report = smoothed_convergence_experiment(
            cfg.a,
            cfg.T,
            cfg.n_list,
            self.path_grid(),
            cfg.trials,
            cfg.seed,
            workers=cfg.workers,
            rule=cfg.inner_rule,
            keep_samples=cfg.dump_trials,
        )
        self.output.write_table("smooth-converge", report.to_frame(), cfg.format)
        if cfg.dump_trials:
            self.output.write_csv("smooth-converge_trials.csv", trial_frame(report.samples))
        return self.result(report.passed, report.to_json_dict())


class Figure1Experiment(BaseExperiment):
    """One bridge trajectory with its smoothings, plus a ten-trajectory overlay"""

    command = "figure1"

    def run(self) -> ExperimentResult:
        cfg = self.config
        grid = self.path_grid()
        t = grid.nodes
        f = bridge_process(simulate_brownian(cfg.seed, grid), cfg.a, cfg.T)
        self.output.write_csv("bridge.csv", pd.DataFrame({"t": t, "f": f.values}))
        files = ["bridge.csv"]
        for n in cfg.figure_n:
            frame = pd.DataFrame({"t": t, "f": f.values, "Tn_f": moment_values(f, n, t, cfg.inner_rule)})
            self.output.write_csv(f"t{n}.csv", frame)
            files.append(f"t{n}.csv")

        n_overlay = cfg.figure_n[-1]
        trajectories = {}
        smoothed = {}
        for trial in range(OVERLAY_TRAJECTORIES):
            g = bridge_process(simulate_brownian(cfg.seed, grid, trial), cfg.a, cfg.T)
            trajectories[f"f_{trial}"] = g.values
            smoothed[f"Tn_f_{trial}"] = moment_values(g, n_overlay, t, cfg.inner_rule)
        overlay = pd.DataFrame({"t": t, **trajectories, **smoothed})
        self.output.write_csv("overlay10.csv", overlay)
        files.append("overlay10.csv")

        report = {
            "n_points": grid.n_points,
            "figure_n": list(cfg.figure_n),
            "overlay_n": n_overlay,
            "files": files,
            "max_abs_f": float(np.max(np.abs(f.values))),
        }
        return self.result(True, report)
