import asyncio
import logging
import os
import time
from typing import Any, Dict, Optional, Tuple

from ..config.loader import LabConfig, resolve_run_config
from ..experiments.base import BaseExperiment, ExperimentResult
from ..experiments.convergence import FilterExperiment, ModularExperiment
from ..experiments.operators import (
    BoundsExperiment,
    IdentityExperiment,
    KernelExperiment,
    OdeExperiment,
    TransformExperiment,
    WeakExperiment,
)
from ..experiments.stochastic import (
    BrownianExperiment,
    Figure1Experiment,
    ItoExperiment,
    SmoothConvergeExperiment,
)
from ..models.run_config import RunConfig
from .output_service import OutputService

logger = logging.getLogger(__name__)

EXPERIMENTS = {
    cls.command: cls
    for cls in (
        KernelExperiment,
        TransformExperiment,
        IdentityExperiment,
        BoundsExperiment,
        OdeExperiment,
        WeakExperiment,
        FilterExperiment,
        ModularExperiment,
        BrownianExperiment,
        ItoExperiment,
        SmoothConvergeExperiment,
        Figure1Experiment,
    )
}


class ExperimentService:
    """Runs subcommands and the acceptance suite, writing one JSON report per run"""

    def __init__(self, lab: LabConfig):
        self.lab = lab

    def _create_experiment(self, config: RunConfig, output: OutputService) -> BaseExperiment:
        """Create an experiment instance for the configured command"""
        return EXPERIMENTS[config.command](config, output)

    def _write_report(self, config: RunConfig, output: OutputService, result: ExperimentResult):
        output.write_json(
            f"{config.command}.json",
            {"config": config.model_dump(mode="json"), "report": result.report, "pass": result.passed},
        )

    def dispatch(self, config: RunConfig) -> ExperimentResult:
        """Run one subcommand synchronously"""
        started = time.time()
        output = OutputService(config.output_dir)
        result = self._create_experiment(config, output).run()
        self._write_report(config, output, result)
        level = logging.INFO if result.passed else logging.WARNING
        logger.log(
            level,
            f"{config.command}: pass={result.passed}, {len(output.files_written)} files "
            f"in {time.time() - started:.2f}s",
        )
        return result

    async def _run_entry(self, config: RunConfig) -> ExperimentResult:
        output = OutputService(config.output_dir)
        result = await self._create_experiment(config, output).execute()
        self._write_report(config, output, result)
        return result

    async def run_suite(
        self, output_dir: str, overrides: Optional[Dict[str, Any]] = None
    ) -> Tuple[bool, Dict[str, Any]]:
        """Every suite entry concurrently; an entry succeeds when its pass flag matches expect_pass"""
        started = time.time()
        overrides = {k: v for k, v in (overrides or {}).items() if v is not None}
        entries = self.lab.suite
        configs = [
            resolve_run_config(
                entry.command,
                self.lab,
                entry.params,
                {**overrides, "output_dir": os.path.join(output_dir, entry.name)},
            )
            for entry in entries
        ]

        tasks = [asyncio.create_task(self._run_entry(c)) for c in configs]
        results = await asyncio.gather(*tasks, return_exceptions=True)

        summary = []
        for entry, result in zip(entries, results):
            if isinstance(result, Exception):
                logger.error(f"Suite entry {entry.name} raised {type(result).__name__}: {result}")
                summary.append({
                    "name": entry.name,
                    "command": entry.command,
                    "expect_pass": entry.expect_pass,
                    "pass": False,
                    "ok": False,
                    "error": f"{type(result).__name__}: {result}",
                })
                continue
            summary.append({
                "name": entry.name,
                "command": entry.command,
                "expect_pass": entry.expect_pass,
                "pass": result.passed,
                "ok": result.passed == entry.expect_pass,
            })

        all_ok = all(item["ok"] for item in summary)
        payload = {"entries": summary, "pass": all_ok}
        OutputService(output_dir).write_json("suite.json", payload)
        logger.info(
            f"Suite: {sum(item['ok'] for item in summary)}/{len(summary)} entries as expected "
            f"in {time.time() - started:.2f}s"
        )
        return all_ok, payload
