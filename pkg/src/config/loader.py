import os
import re
import yaml
from typing import Any, Dict, List, Optional
from pydantic import BaseModel, Field
from dotenv import dotenv_values
import logging

from ..models.moment import InnerRule
from ..models.run_config import COMMANDS, DefaultsConfig, RunConfig, ToleranceConfig
from ..utils.errors import ConfigError

logger = logging.getLogger(__name__)


def _expand_env_vars(text: str) -> str:
    """Expand environment variables including ${VAR:-default} syntax"""
    # Handle ${VAR:-default} syntax
    def replace_var(match):
        var_expr = match.group(1)
        if ':-' in var_expr:
            var_name, default_value = var_expr.split(':-', 1)
            return os.getenv(var_name, default_value)
        else:
            return os.getenv(var_expr, '')

    return re.sub(r'\$\{([^}]+)\}', replace_var, text)


class SuiteEntry(BaseModel):
    name: str
    command: str
    params: Dict[str, Any] = Field(default_factory=dict)
    # some entries document a contract that must fail, e.g. squares under the cofinite filter
    expect_pass: bool = True


class LabConfig(BaseModel):
    defaults: DefaultsConfig = Field(default_factory=DefaultsConfig)
    tolerances: ToleranceConfig = Field(default_factory=ToleranceConfig)
    suite: List[SuiteEntry] = Field(default_factory=list)


def _find_config(config_file: str) -> Optional[str]:
    """Look for the file in config/ and the working directory"""
    package_config = os.path.join(os.path.dirname(__file__), "..", "..", "config", config_file)
    for path in (f"config/{config_file}", config_file, package_config):
        if os.path.exists(path):
            return path
    return None


def load_config(config_file: Optional[str] = None) -> LabConfig:
    """Load the experiment defaults and the acceptance suite from YAML"""
    if config_file is None:
        config_file = os.getenv("LAB_CONFIG_FILE", "experiments.yaml")

    config_path = _find_config(config_file)
    if not config_path:
        raise ConfigError(f"Config file not found: {config_file}")

    logger.info(f"Loading configuration from {config_path}")

    with open(config_path, 'r') as f:
        # Expand environment variables in YAML
        yaml_content = _expand_env_vars(f.read())
        config_data = yaml.safe_load(yaml_content) or {}

    config = LabConfig(**config_data)
    unknown = [entry.command for entry in config.suite if entry.command not in COMMANDS]
    if unknown:
        raise ConfigError(f"suite names unknown commands: {unknown}")
    return config


def read_run_file(path: str) -> Dict[str, str]:
    """Flat key=value run file; keys may use dashes or underscores"""
    if not os.path.exists(path):
        raise ConfigError(f"run file not found: {path}")
    values = dotenv_values(path)
    return {key.strip().lower().replace("-", "_"): value for key, value in values.items() if value is not None}


def resolve_run_config(
    command: str,
    lab: LabConfig,
    run_file: Optional[Dict[str, Any]] = None,
    overrides: Optional[Dict[str, Any]] = None,
) -> RunConfig:
    """Flag > run file > YAML defaults, validated against the command's preconditions"""
    data = lab.defaults.model_dump()
    data["tolerances"] = lab.tolerances.model_dump()
    known = set(data)
    for source in (run_file or {}, overrides or {}):
        stray = set(source) - known
        if stray:
            raise ConfigError(f"unknown parameters: {sorted(stray)}")
        data.update({key: value for key, value in source.items() if value is not None})
    config = RunConfig(command=command, **data).check_preconditions()
    chosen = any(source.get("inner_rule") is not None for source in (run_file or {}, overrides or {}))
    if config.starts_at_origin and config.inner_rule is InnerRule.TRAPEZOID and not chosen:
        # t^(n-1) f is integrated from 0, where the trapezoid error is only O(h)
        logger.info(f"{command}: a = 0, switching the inner rule to linear_exact")
        config = config.model_copy(update={"inner_rule": InnerRule.LINEAR_EXACT})
    return config
