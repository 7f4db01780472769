from __future__ import annotations

import json
import pathlib
from dataclasses import dataclass, field, fields, replace
from typing import Any, Optional

import yaml
from cattrs.errors import BaseValidationError

from ..core.classes import Constants, structure

DEFAULT_SCENARIOS = ["original", "fl10", "fl20", "tl", "ls10", "ls20", "tl+ls20"]
DEFAULT_RANK_VARIANTS = ["ls10", "ls20", "fl10", "fl20", "tl"]


class UsageError(Exception):
    pass


@dataclass(kw_only=True)
class InputConfig:
    meters: str
    metas: str


@dataclass(kw_only=True)
class SynthConfig:
    days: int = 365
    seed: int = 0
    supplyTempBand: tuple[float, float] = (75.0, 110.0)


@dataclass(kw_only=True)
class RunConfig:
    input: Optional[InputConfig] = None
    synth: Optional[SynthConfig] = None
    scenarios: list[str] = field(default_factory=lambda: list(DEFAULT_SCENARIOS))
    rankVariants: list[str] = field(
        default_factory=lambda: list(DEFAULT_RANK_VARIANTS)
    )
    include: Optional[list[int]] = None  # None means every meter
    constants: dict[str, float] = field(default_factory=dict)
    lambdas: list[float] = field(default_factory=lambda: [1.84, 2.0])
    alphas: list[float] = field(default_factory=lambda: [0.1, 0.2])
    betas: list[float] = field(default_factory=lambda: [0.1, 0.2])
    supplyTempMax: Optional[float] = None  # °C, enables the capacity metrics
    relTol: float = 0.02
    absTol: float = 0.5  # kW
    topHours: int = 300
    jobs: int = 1

    def __post_init__(self) -> None:
        if self.input is not None and self.synth is not None:
            raise UsageError("give either input files or a synth section, not both")
        for name in ["alphas", "betas"]:
            for value in getattr(self, name):
                if not 0 <= value < 1:
                    raise UsageError(f"{name} values must be in [0, 1), got {value}")
        if any(value <= 0 for value in self.lambdas):
            raise UsageError(f"pump exponents must be positive, got {self.lambdas}")
        if self.topHours < 1:
            raise UsageError(f"topHours must be positive, got {self.topHours}")
        if self.jobs < 1:
            raise UsageError(f"jobs must be positive, got {self.jobs}")
        self.makeConstants()

    def makeConstants(self) -> Constants:
        try:
            return replace(Constants(), **self.constants)
        except (TypeError, ValueError) as e:
            raise UsageError(f"bad constants: {e}") from e


def yamlOrJson(path) -> dict:
    path = pathlib.Path(path)
    if not path.is_file():
        raise UsageError(f"config file not found: {str(path)!r}")
    contents = path.read_text(encoding="utf-8")
    try:
        if path.suffix == ".json":
            config = json.loads(contents)
        else:
            config = yaml.safe_load(contents)
    except (ValueError, yaml.YAMLError) as e:
        raise UsageError(f"can't read {str(path)!r}: {e}") from e
    if config is None:
        config = {}
    if not isinstance(config, dict):
        raise UsageError(f"{str(path)!r} must hold a mapping")
    return config


def structureRunConfig(config: dict[str, Any]) -> RunConfig:
    unknown = set(config) - {f.name for f in fields(RunConfig)}
    if unknown:
        raise UsageError(f"unknown config keys: {sorted(unknown)}")
    try:
        return structure(config, RunConfig)
    except UsageError:
        raise
    except (BaseValidationError, TypeError, ValueError, KeyError) as e:
        raise UsageError(f"bad configuration: {e}") from e


def loadRunConfig(
    path: pathlib.Path | None, overrides: dict[str, Any] | None = None
) -> RunConfig:
    """Read a YAML or JSON config file and apply command line overrides.

    Input paths in the file are taken relative to the file's folder.
    """
    config = yamlOrJson(path) if path is not None else {}
    parentDir = pathlib.Path(path).resolve().parent if path is not None else None
    if parentDir is not None and isinstance(config.get("input"), dict):
        config["input"] = {
            key: str(parentDir / value) for key, value in config["input"].items()
        }
    for key, value in (overrides or {}).items():
        if isinstance(value, dict) and isinstance(config.get(key), dict):
            config[key] = config[key] | value
        else:
            config[key] = value
    return structureRunConfig(config)
