"""
Scenario file loading and validation

Scenario and plan files are YAML. JSON is a subset, so `.json` files load
through the same path.
"""
import logging
import os
from typing import Any, Dict, Type, TypeVar

import yaml
from pydantic import BaseModel, ValidationError

from app.models.plan import RunPlan
from app.models.scenario import ScenarioConfig
from app.utils.errors import ConfigError, ConfigValidationError, first_field

logger = logging.getLogger(__name__)

M = TypeVar("M", bound=BaseModel)


def read_mapping(path: os.PathLike) -> Dict[str, Any]:
    """Parse a YAML/JSON file into a mapping, with line context on failure."""
    path = os.fspath(path)
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = yaml.safe_load(fh)
    except FileNotFoundError as exc:
        raise ConfigError("file not found", path=path) from exc
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark
        line = mark.line + 1 if mark is not None else None
        column = mark.column + 1 if mark is not None else None
        raise ConfigError(f"parse error: {exc.problem}", path=path, line=line, column=column) from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"parse error: {exc}", path=path) from exc

    if raw is None:
        return {}
    if not isinstance(raw, dict):
        raise ConfigError(f"top level must be a mapping, got {type(raw).__name__}", path=path)
    return raw


def validate_mapping(model: Type[M], data: Dict[str, Any], path: str = None) -> M:
    """Validate `data` into `model`, reporting the first offending field by name."""
    try:
        return model.model_validate(data)
    except ValidationError as exc:
        err = exc.errors()[0]
        message = err.get("msg", "invalid value")
        if message.startswith("Value error, "):
            message = message[len("Value error, "):]
        raise ConfigValidationError(first_field(err.get("loc", ())), message, path=path) from exc


def load_config(path: os.PathLike) -> ScenarioConfig:
    """Load and validate a scenario file. Missing keys take their defaults."""
    data = read_mapping(path)
    config = validate_mapping(ScenarioConfig, data, path=os.fspath(path))
    logger.debug("Loaded scenario %s (seed=%d, policy=%s)", path, config.seed, config.policy)
    return config


def override(config: ScenarioConfig, **changes: Any) -> ScenarioConfig:
    """Re-validated copy of `config` with top-level keys replaced."""
    data = config.model_dump()
    data.update({k: v for k, v in changes.items() if v is not None})
    return validate_mapping(ScenarioConfig, data)


def load_plan(path: os.PathLike) -> RunPlan:
    """Load a sweep plan. A relative `scenario` path resolves against the plan file."""
    data = read_mapping(path)
    plan = validate_mapping(RunPlan, data, path=os.fspath(path))
    if plan.scenario and not os.path.isabs(plan.scenario):
        base = os.path.dirname(os.path.abspath(os.fspath(path)))
        plan = plan.model_copy(update={"scenario": os.path.join(base, plan.scenario)})
    return plan


def load_plan_config(plan: RunPlan) -> ScenarioConfig:
    """The base scenario a plan sweeps over."""
    if plan.scenario is None:
        return ScenarioConfig()
    return load_config(plan.scenario)
