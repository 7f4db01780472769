"""Greedy ranking of meters for partial implementation of a strategy."""

from __future__ import annotations

import logging
from dataclasses import replace
from typing import Iterable, Optional

from .core.classes import Constants, Dataset, DegenerateInput, GreedyCurve
from .core.heat import aggregateFlow
from .core.metrics import weightedReturnTemperature
from .core.threading import parallelMap
from .strategies.base import BaseStrategy

logger = logging.getLogger(__name__)


def evaluateInclusion(
    dataset: Dataset,
    strategy: BaseStrategy,
    included: Iterable[int],
    constants: Constants,
) -> tuple[float, float]:
    """Aggregate peak flow and weighted return temperature after applying
    `strategy` to the `included` meters only."""
    outcome = replace(strategy, included=frozenset(included)).apply(dataset, constants)
    return (
        float(aggregateFlow(outcome.dataset).max()),
        weightedReturnTemperature(outcome.dataset),
    )


def _evaluateTask(task) -> tuple[float, float]:
    return evaluateInclusion(*task)


def greedyRank(
    dataset: Dataset,
    strategy: BaseStrategy,
    constants: Constants,
    *,
    candidates: Optional[Iterable[int]] = None,
    jobs: int | None = 1,
) -> GreedyCurve:
    """Add meters one at a time, always the one giving the lowest aggregate
    peak together with those already chosen. Ties go to the lowest meter id.
    All candidates are ranked, even once every further step raises the peak.
    """
    remaining = sorted(dataset.meterIds if candidates is None else set(candidates))
    baselinePeak = float(aggregateFlow(dataset).max()) if dataset.hours else 0.0
    if baselinePeak == 0:
        raise DegenerateInput("baseline aggregate peak flow is zero")
    if jobs and jobs > 1:
        # candidates already run in parallel
        strategy = replace(strategy, jobs=1)

    order: list[int] = []
    reduction: list[float] = []
    returnTemperatures = [weightedReturnTemperature(dataset)]
    while remaining:
        tasks = [
            (dataset, strategy, [*order, meterId], constants) for meterId in remaining
        ]
        results = parallelMap(_evaluateTask, tasks, jobs=jobs)
        bestIndex = 0
        for index, (peak, _) in enumerate(results):
            if peak < results[bestIndex][0]:
                bestIndex = index
        bestPeak, bestReturnTemperature = results[bestIndex]
        chosen = remaining.pop(bestIndex)
        order.append(chosen)
        reduction.append(1 - bestPeak / baselinePeak)
        returnTemperatures.append(bestReturnTemperature)
        logger.info(
            f"{strategy.label}: step {len(order)} includes meter {chosen}, "
            f"peak reduction {reduction[-1]:.4f}"
        )

    return GreedyCurve(
        order=order,
        reduction=reduction,
        baselinePeak=baselinePeak,
        returnTemperatures=returnTemperatures,
    )
