#!/usr/bin/env python3
"""
Moment Operator Lab CLI
Run one experiment per subcommand, or the whole acceptance suite
"""

import argparse
import asyncio
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

from pydantic import ValidationError

# Add src to path for imports
sys.path.insert(0, str(Path(__file__).parent.parent))

from src.config.loader import load_config, read_run_file, resolve_run_config
from src.models.filters import FilterKind
from src.models.moment import InnerRule
from src.models.process import ProcessKind
from src.models.run_config import COMMANDS, ModularName, SequenceName
from src.services.experiment_service import ExperimentService
from src.utils.errors import LabError
from src.utils.logging_config import setup_logging

EXIT_PASS = 0
EXIT_FAILED_CONTRACT = 1
EXIT_INVALID = 2


def _choices(enum) -> List[str]:
    return [member.value for member in enum]


# flag -> argparse keyword arguments; dest is the RunConfig field
FLAGS: Dict[str, Dict[str, Any]] = {
    "--n": {"type": int, "help": "Operator order n"},
    "--n-list": {"dest": "n_list", "help": "Comma separated operator orders"},
    "--figure-n": {"dest": "figure_n", "help": "Orders plotted by figure1, last one for the overlay"},
    "--a": {"type": float, "help": "Support start (bridge start for path experiments)"},
    "--b": {"type": float, "help": "Support end"},
    "--T": {"dest": "T", "type": float, "help": "End of the time interval"},
    "--h": {"type": float, "help": "Grid step"},
    "--smax": {"type": float, "help": "End of the evaluation window (default 2b)"},
    "--profile": {"help": "Built-in test function: zero, indicator, bump, sin, ramp"},
    "--inner-rule": {"dest": "inner_rule", "choices": _choices(InnerRule)},
    "--nu": {"type": float, "help": "ODE coefficient nu > 0"},
    "--c": {"type": float, "help": "ODE constant, or the level of a constant integrand"},
    "--w": {"type": float, "help": "Kernel argument"},
    "--w-support": {"dest": "w_support", "help": "lo,hi of the test weight w"},
    "--pairs": {"type": int, "help": "Random node pairs for the Lipschitz check"},
    "--trials": {"type": int, "help": "Monte Carlo trials"},
    "--workers": {"type": int, "help": "Worker threads; results do not depend on it"},
    "--process": {"choices": _choices(ProcessKind)},
    "--horizon": {"type": int, "help": "Finite horizon H of the filter check"},
    "--kind": {"choices": _choices(FilterKind)},
    "--threshold": {"type": float, "help": "Density filter threshold"},
    "--sequence": {"choices": _choices(SequenceName)},
    "--ladder": {"help": "Comma separated decreasing epsilons"},
    "--modular": {"choices": _choices(ModularName)},
    "--corpus-size": {"dest": "corpus_size", "type": int},
    "--dump-trials": {"dest": "dump_trials", "action": "store_const", "const": True,
                      "help": "Also write the per-trial raw values"},
}

_TRANSFORM = ["--n", "--a", "--b", "--h", "--smax", "--profile", "--inner-rule"]

COMMAND_FLAGS: Dict[str, List[str]] = {
    "kernel": ["--n", "--w"],
    "transform": _TRANSFORM,
    "identity": _TRANSFORM,
    "bounds": _TRANSFORM + ["--pairs"],
    "ode": ["--nu", "--c", "--a", "--b", "--h", "--smax", "--profile", "--inner-rule"],
    "weak": ["--n-list", "--a", "--b", "--h", "--smax", "--profile", "--inner-rule", "--w-support"],
    "filter": ["--horizon", "--kind", "--threshold", "--sequence", "--ladder"],
    "modular": ["--modular", "--corpus-size", "--ladder", "--n-list", "--a", "--b", "--h",
                "--profile", "--inner-rule", "--w-support"],
    "brownian": ["--T", "--h", "--trials"],
    "ito": ["--process", "--c", "--a", "--T", "--h", "--n", "--trials", "--workers", "--dump-trials"],
    "smooth-converge": ["--a", "--T", "--h", "--n-list", "--trials", "--workers", "--inner-rule",
                        "--dump-trials"],
    "figure1": ["--a", "--T", "--h", "--figure-n", "--inner-rule"],
}

COMMON_FIELDS = ("seed", "output_dir", "format")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, help="Seed of every random stream (default 20240917)")
    common.add_argument("--output-dir", dest="output_dir", help="Directory for result files")
    common.add_argument("--format", choices=["csv", "json"], help="Format of tabular outputs")
    common.add_argument("--config", help="Flat key=value run file")
    common.add_argument("--defaults", help="YAML file with defaults and the suite")

    parser = argparse.ArgumentParser(prog="moment-lab", description="Moment Operator Lab")
    sub = parser.add_subparsers(dest="command", required=True, metavar="subcommand")
    for command in COMMANDS:
        command_parser = sub.add_parser(command, parents=[common])
        for flag in COMMAND_FLAGS[command]:
            command_parser.add_argument(flag, default=None, **FLAGS[flag])
    sub.add_parser("suite", parents=[common], help="Run the acceptance suite concurrently")
    return parser


class LabCLI:
    def __init__(self, args: argparse.Namespace):
        self.args = args

    def overrides(self) -> Dict[str, Any]:
        values = vars(self.args)
        fields = list(COMMON_FIELDS)
        for flag in COMMAND_FLAGS.get(self.args.command, []):
            fields.append(FLAGS[flag].get("dest", flag.lstrip("-").replace("-", "_")))
        return {field: values.get(field) for field in fields if values.get(field) is not None}

    def run(self) -> int:
        lab = load_config(self.args.defaults)
        run_file = read_run_file(self.args.config) if self.args.config else None
        service = ExperimentService(lab)

        if self.args.command == "suite":
            output_dir = self.args.output_dir or lab.defaults.output_dir
            overrides = {k: v for k, v in self.overrides().items() if k != "output_dir"}
            all_ok, _ = asyncio.run(service.run_suite(output_dir, {**(run_file or {}), **overrides}))
            return EXIT_PASS if all_ok else EXIT_FAILED_CONTRACT

        config = resolve_run_config(self.args.command, lab, run_file, self.overrides())
        result = service.dispatch(config)
        if result.message is not None:
            print(result.message)
        return EXIT_PASS if result.passed else EXIT_FAILED_CONTRACT


def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point"""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse has already printed the usage text to standard error
        return exc.code if isinstance(exc.code, int) else EXIT_INVALID

    setup_logging()
    try:
        return LabCLI(args).run()
    except (LabError, ValidationError) as e:
        logging.error(f"Invalid configuration: {e}")
        message = " ".join(str(e).split()) or type(e).__name__
        print(f"error: {message}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
