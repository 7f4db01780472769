from __future__ import annotations

from dataclasses import dataclass
from typing import ClassVar, Iterable, Optional

from ..core.classes import Dataset
from . import StrategyError


def resolveIncluded(dataset: Dataset, included: Iterable[int] | None) -> frozenset[int]:
    """None means every meter of the dataset."""
    if included is None:
        return frozenset(dataset.meterIds)
    included = frozenset(included)
    unknown = included - set(dataset.meterIds)
    if unknown:
        raise StrategyError(f"unknown meter ids: {sorted(unknown)}")
    return included


def formatLevel(value: float) -> str:
    percent = round(value * 100, 6)
    return f"{percent:g}"


def checkLevel(name: str, value: float) -> None:
    if not 0 <= value < 1:
        raise StrategyError(f"{name} must be in [0, 1), got {value}")


@dataclass(kw_only=True)
class BaseStrategy:
    included: Optional[frozenset[int]] = None
    jobs: int = 1
    strategyName: ClassVar[str]

    def __post_init__(self) -> None:
        if self.included is not None:
            self.included = frozenset(self.included)

    @property
    def label(self) -> str:
        return self.strategyName
