"""Coordinated optimal load shifting.

Each day is solved on its own. Stage 1 finds the lowest achievable peak of the
aggregate flow when every included consumer may scale its hourly flow by a
factor in [1 - alpha, 1 + alpha] while keeping its daily heat. Stage 2 keeps
that peak and picks, among the optimal schedules, the one with the least
total deviation from the original.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from ..core.classes import (
    HOURS_PER_DAY,
    Constants,
    Dataset,
    StrategyKind,
    StrategyOutcome,
)
from ..core.heat import heatFromFlow
from ..core.lp import LinearProgram, Relation, solve
from ..core.threading import parallelMap
from . import StrategyError, registerStrategy
from .base import BaseStrategy, checkLevel, formatLevel, resolveIncluded

logger = logging.getLogger(__name__)

# Relative slack on the stage-1 peak when it becomes a stage-2 constraint,
# widened step by step if round-off makes stage 2 infeasible
PEAK_RELAXATIONS = (1e-12, 1e-9, 1e-7)


@dataclass(kw_only=True)
class ShiftSolution:
    delta: np.ndarray  # consumer × hour of day
    peakFlow: float  # stage-1 optimum, m³/h
    totalShift: float


def shiftLoadsDay(
    flows,
    deltaTs,
    alpha: float,
    included: Sequence[bool] | None = None,
) -> ShiftSolution:
    """Solve both stages for one day.

    `flows` and `deltaTs` are consumer × hour arrays; `included` flags the
    consumers taking part. Excluded consumers keep a factor of exactly 1.
    Hours with a non-positive temperature spread do not count towards the
    daily heat.
    """
    checkLevel("alpha", alpha)
    flows = np.asarray(flows, dtype=np.float64)
    deltaTs = np.asarray(deltaTs, dtype=np.float64)
    if flows.ndim != 2 or flows.shape != deltaTs.shape:
        raise StrategyError(
            f"flows and temperature spreads must be matching consumer × hour "
            f"arrays, got {flows.shape} and {deltaTs.shape}"
        )
    numConsumers, numHours = flows.shape
    if included is None:
        included = np.ones(numConsumers, dtype=bool)
    included = np.asarray(included, dtype=bool)

    delta = np.ones((numConsumers, numHours))
    originalPeak = float(flows.sum(axis=0).max()) if numHours else 0.0
    if alpha == 0 or not included.any():
        return ShiftSolution(delta=delta, peakFlow=originalPeak, totalShift=0.0)

    shiftable = flows[included]
    heatWeights = shiftable * np.where(deltaTs[included] > 0, deltaTs[included], 0.0)
    fixedFlow = flows[~included].sum(axis=0)

    peakFlow = _minimizePeak(shiftable, heatWeights, fixedFlow, alpha)
    for relaxation in PEAK_RELAXATIONS:
        factors = _minimizeShift(
            shiftable, heatWeights, fixedFlow, alpha, peakFlow, relaxation
        )
        if factors is not None:
            break
    else:
        raise StrategyError("shift minimization found no schedule at the optimal peak")

    delta[included] = factors
    return ShiftSolution(
        delta=delta,
        peakFlow=peakFlow,
        totalShift=float(np.abs(delta - 1).sum()),
    )


def _minimizePeak(shiftable, heatWeights, fixedFlow, alpha) -> float:
    # variables: delta (consumer-major), then the epigraph variable z
    numConsumers, numHours = shiftable.shape
    numDelta = numConsumers * numHours

    objective = np.zeros(numDelta + 1)
    objective[-1] = 1.0
    lower = np.full(numDelta + 1, 1 - alpha)
    upper = np.full(numDelta + 1, 1 + alpha)
    lower[-1] = -np.inf
    upper[-1] = np.inf
    lp = LinearProgram(objective=objective, lowerBounds=lower, upperBounds=upper)

    for t in range(numHours):
        row = np.zeros(numDelta + 1)
        row[t:numDelta:numHours] = shiftable[:, t]
        row[-1] = -1.0
        lp.addConstraint(row, Relation.LE, -fixedFlow[t])
    for i in range(numConsumers):
        row = np.zeros(numDelta + 1)
        row[i * numHours : (i + 1) * numHours] = heatWeights[i]
        lp.addConstraint(row, Relation.EQ, heatWeights[i].sum())

    solution = solve(lp)
    if not solution.isOptimal:
        # delta == 1 is always feasible
        raise StrategyError(f"peak minimization ended as {solution.status.value}")
    return solution.objectiveValue


def _minimizeShift(
    shiftable, heatWeights, fixedFlow, alpha, peakFlow, relaxation
) -> np.ndarray | None:
    # delta = 1 + up - down, variables: up (consumer-major), then down
    numConsumers, numHours = shiftable.shape
    numDelta = numConsumers * numHours

    lp = LinearProgram(
        objective=np.ones(2 * numDelta),
        lowerBounds=np.zeros(2 * numDelta),
        upperBounds=np.full(2 * numDelta, alpha),
    )
    peakCap = peakFlow + relaxation * max(1.0, abs(peakFlow))
    originalFlow = shiftable.sum(axis=0) + fixedFlow
    for t in range(numHours):
        row = np.zeros(2 * numDelta)
        row[t:numDelta:numHours] = shiftable[:, t]
        row[numDelta + t :: numHours] = -shiftable[:, t]
        lp.addConstraint(row, Relation.LE, peakCap - originalFlow[t])
    for i in range(numConsumers):
        row = np.zeros(2 * numDelta)
        row[i * numHours : (i + 1) * numHours] = heatWeights[i]
        row[numDelta + i * numHours : numDelta + (i + 1) * numHours] = -heatWeights[i]
        lp.addConstraint(row, Relation.EQ, 0.0)

    solution = solve(lp)
    if not solution.isOptimal:
        logger.debug(
            f"shift minimization ended as {solution.status.value} "
            f"with peak relaxation {relaxation:g}"
        )
        return None
    up = solution.x[:numDelta]
    down = solution.x[numDelta:]
    return (1 + up - down).reshape(numConsumers, numHours)


def _solveDay(task) -> ShiftSolution:
    flows, deltaTs, alpha, included = task
    return shiftLoadsDay(flows, deltaTs, alpha, included)


def applyLoadShifting(
    dataset: Dataset,
    alpha: float,
    included: Iterable[int] | None,
    constants: Constants,
    *,
    jobs: int | None = 1,
) -> StrategyOutcome:
    checkLevel("alpha", alpha)
    includedSet = resolveIncluded(dataset, included)
    if dataset.hours % HOURS_PER_DAY:
        raise StrategyError(f"{dataset.hours} hours is not a whole number of days")

    if alpha == 0 or not includedSet or not dataset.meters:
        return StrategyOutcome(
            dataset=dataset,
            strategy=StrategyKind.LOAD_SHIFT,
            alpha=alpha,
            included=includedSet,
            totalShift=0.0,
        )

    flows = np.array([meter.flow for meter in dataset.meters])
    deltaTs = np.array([meter.deltaT for meter in dataset.meters])
    mask = [meter.meterId in includedSet for meter in dataset.meters]

    tasks = []
    for day in range(dataset.days):
        hours = slice(day * HOURS_PER_DAY, (day + 1) * HOURS_PER_DAY)
        tasks.append((flows[:, hours], deltaTs[:, hours], alpha, mask))
    logger.info(
        f"load shifting alpha={alpha:g} over {len(tasks)} days, "
        f"{len(includedSet)} of {len(mask)} meters included"
    )
    solutions = parallelMap(_solveDay, tasks, jobs=jobs)
    delta = np.concatenate([solution.delta for solution in solutions], axis=1)

    meters = []
    for index, meter in enumerate(dataset.meters):
        if not mask[index]:
            meters.append(meter)
            continue
        flow = meter.flow * delta[index]
        meters.append(
            meter.replaceSeries(
                flow=flow, heat=heatFromFlow(flow, meter.deltaT, constants)
            )
        )

    return StrategyOutcome(
        dataset=dataset.replaceMeters(meters),
        strategy=StrategyKind.LOAD_SHIFT,
        alpha=alpha,
        included=includedSet,
        dailyPeaks=tuple(solution.peakFlow for solution in solutions),
        totalShift=float(sum(solution.totalShift for solution in solutions)),
    )


@registerStrategy("load-shift")
@dataclass(kw_only=True)
class LoadShift(BaseStrategy):
    alpha: float

    def __post_init__(self) -> None:
        super().__post_init__()
        checkLevel("alpha", self.alpha)

    @property
    def label(self) -> str:
        return f"ls{formatLevel(self.alpha)}"

    def apply(self, dataset: Dataset, constants: Constants) -> StrategyOutcome:
        return applyLoadShifting(
            dataset, self.alpha, self.included, constants, jobs=self.jobs
        )
