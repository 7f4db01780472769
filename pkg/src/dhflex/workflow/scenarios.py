"""Scenario names as used in file names and CSV headers.

    original        the data as measured
    tl              return temperature limitation
    ls<percent>     load shifting with flexibility level alpha
    fl<percent>     flow limitation with level beta
    ls, fl          one scenario per configured alpha or beta
    a+b             b applied on top of a

Any other name is looked up in the strategy registry.
"""

from __future__ import annotations

import itertools
import logging
import re
from dataclasses import dataclass
from typing import Iterable, Optional

from ..core.classes import Constants, Dataset, StrategyOutcome
from ..strategies import StrategyError, StrategyProtocol, makeStrategy
from ..strategies.compose import compose
from .config import UsageError

logger = logging.getLogger(__name__)

ORIGINAL = "original"

_levelPattern = re.compile(r"^(ls|fl)(\d+(?:\.\d+)?)?$")
_strategyNames = {"ls": "load-shift", "fl": "flow-limit", "tl": "return-temp-limit"}
_levelNames = {"ls": "alpha", "fl": "beta"}


@dataclass(kw_only=True)
class Scenario:
    stages: list[StrategyProtocol]

    @property
    def label(self) -> str:
        if not self.stages:
            return ORIGINAL
        return "+".join(stage.label for stage in self.stages)

    def apply(self, dataset: Dataset, constants: Constants) -> StrategyOutcome:
        if len(self.stages) == 1:
            return self.stages[0].apply(dataset, constants)
        return compose(dataset, self.stages, constants)


def _parseToken(
    token: str,
    alphas: list[float],
    betas: list[float],
    included: Optional[Iterable[int]],
    jobs: int,
) -> list[StrategyProtocol]:
    arguments = dict(
        included=frozenset(included) if included is not None else None, jobs=jobs
    )
    try:
        if token == "tl":
            return [makeStrategy(_strategyNames["tl"], **arguments)]
        match = _levelPattern.match(token)
        if match is None:
            return [makeStrategy(token, **arguments)]
        kind, percent = match.groups()
        if percent is None:
            levels = alphas if kind == "ls" else betas
        else:
            levels = [float(percent) / 100]
        return [
            makeStrategy(
                _strategyNames[kind], **{_levelNames[kind]: level}, **arguments
            )
            for level in levels
        ]
    except StrategyError as e:
        raise UsageError(f"bad scenario {token!r}: {e}") from e


def parseScenarios(
    names: Iterable[str],
    *,
    alphas: list[float],
    betas: list[float],
    included: Optional[Iterable[int]] = None,
    jobs: int = 1,
) -> list[Scenario]:
    """Expand scenario names; duplicate labels are dropped, order is kept."""
    scenarios = []
    seen = set()
    for name in names:
        name = name.strip().lower()
        if name == ORIGINAL:
            options = [Scenario(stages=[])]
        else:
            tokens = [token.strip() for token in name.split("+")]
            if not all(tokens):
                raise UsageError(f"bad scenario {name!r}")
            expanded = [
                _parseToken(token, alphas, betas, included, jobs) for token in tokens
            ]
            options = [
                Scenario(stages=list(stages)) for stages in itertools.product(*expanded)
            ]
        for scenario in options:
            if scenario.label in seen:
                continue
            seen.add(scenario.label)
            scenarios.append(scenario)
    return scenarios


def parseRankVariants(
    names: Iterable[str],
    *,
    alphas: list[float],
    betas: list[float],
    jobs: int = 1,
) -> list[StrategyProtocol]:
    variants = []
    for scenario in parseScenarios(names, alphas=alphas, betas=betas, jobs=jobs):
        if len(scenario.stages) != 1:
            raise UsageError(
                f"ranking needs a single strategy, got {scenario.label!r}"
            )
        variants.append(scenario.stages[0])
    return variants
