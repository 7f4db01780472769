from __future__ import annotations

from functools import partial
from importlib.metadata import entry_points
from typing import Protocol, runtime_checkable

from ..core.classes import Constants, Dataset, StrategyOutcome


class StrategyError(Exception):
    pass


@runtime_checkable
class StrategyProtocol(Protocol):
    @property
    def label(self) -> str:
        pass

    def apply(self, dataset: Dataset, constants: Constants) -> StrategyOutcome:
        pass


_strategyRegistry: dict[str, type] = {}


def _strategyRegistryWrapper(cls, strategyName):
    assert strategyName not in _strategyRegistry
    cls.strategyName = strategyName
    _strategyRegistry[strategyName] = cls
    return cls


def registerStrategy(strategyName):
    return partial(_strategyRegistryWrapper, strategyName=strategyName)


def getStrategyClass(strategyName: str) -> type:
    loadStrategies()
    cls = _strategyRegistry.get(strategyName)
    if cls is None:
        raise StrategyError(f"No strategy found named '{strategyName}'")
    return cls


def makeStrategy(strategyName: str, **arguments) -> StrategyProtocol:
    cls = getStrategyClass(strategyName)
    try:
        strategy = cls(**arguments)
    except (TypeError, ValueError) as e:
        raise StrategyError(f"{strategyName}: {e}") from e
    assert isinstance(strategy, StrategyProtocol)
    return strategy


_entryPointsLoaded = False


def loadStrategies():
    global _entryPointsLoaded

    from . import flowlimit  # noqa: F401
    from . import loadshift  # noqa: F401
    from . import returntemp  # noqa: F401

    if _entryPointsLoaded:
        return
    _entryPointsLoaded = True
    for entryPoint in entry_points(group="dhflex.strategies"):
        _ = entryPoint.load()
