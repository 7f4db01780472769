"""Individual flow rate limitation with a rolling heat deficit.

Every included meter gets a hard cap of (1 - beta) times its own yearly peak
flow. Heat lost while capped is booked in a 24-hour ledger and delivered
later, whenever the meter runs below its cap, as far as the cap allows.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from ..core.classes import (
    Constants,
    Dataset,
    MeterSeries,
    StrategyKind,
    StrategyOutcome,
)
from ..core.threading import parallelMap
from . import registerStrategy
from .base import BaseStrategy, checkLevel, formatLevel, resolveIncluded

logger = logging.getLogger(__name__)

LEDGER_HOURS = 24


@dataclass
class DeficitLedger:
    """Unmet heat in kWh; `slots[h]` was incurred h hours ago.

    Slot 0 belongs to the current hour, slots 1 to 24 to the past day. Heat
    pushed past slot 24 is gone for good and counted in `expired`.
    """

    slots: np.ndarray = field(default_factory=lambda: np.zeros(LEDGER_HOURS + 1))
    expired: float = 0.0

    @property
    def total(self) -> float:
        return float(self.slots.sum())

    def advance(self) -> None:
        self.expired += float(self.slots[-1])
        self.slots[1:] = self.slots[:-1].copy()
        self.slots[0] = 0.0

    def book(self, heat: float) -> None:
        self.slots[0] += max(heat, 0.0)

    def drain(self, heat: float) -> float:
        """Take up to `heat` kWh out of the ledger, oldest slot first."""
        remaining = heat
        for h in range(LEDGER_HOURS, -1, -1):
            if remaining <= 0:
                break
            taken = min(remaining, self.slots[h])
            self.slots[h] -= taken
            remaining -= taken
        return heat - remaining


@dataclass(kw_only=True)
class LimitedMeter:
    meter: MeterSeries
    remainingDeficit: float
    expiredDeficit: float


def flowLimit(flow: np.ndarray, beta: float) -> float:
    return (1 - beta) * float(np.max(flow)) if len(flow) else 0.0


def limitMeterFlow(
    meter: MeterSeries, beta: float, constants: Constants
) -> LimitedMeter:
    limit = flowLimit(meter.flow, beta)
    flow = meter.flow.copy()
    heat = meter.heat.copy()
    deltaT = meter.deltaT
    rhoCp = constants.rhoCp
    ledger = DeficitLedger()

    for t in range(meter.hours):
        ledger.advance()
        if flow[t] > limit:
            # no deficit without a positive spread, heat follows the identity
            lost = (flow[t] - limit) * rhoCp * deltaT[t]
            ledger.book(lost)
            flow[t] = limit
            heat[t] -= lost
        elif (
            flow[t] < limit
            and deltaT[t] >= constants.deltaTThreshold
            and ledger.total > 0
        ):
            extraFlow = min(ledger.total / (rhoCp * deltaT[t]), limit - flow[t])
            delivered = ledger.drain(extraFlow * rhoCp * deltaT[t])
            flow[t] += extraFlow
            heat[t] += delivered

    return LimitedMeter(
        meter=meter.replaceSeries(flow=flow, heat=heat),
        remainingDeficit=ledger.total,
        expiredDeficit=ledger.expired,
    )


def _limitTask(task) -> LimitedMeter:
    meter, beta, constants = task
    return limitMeterFlow(meter, beta, constants)


def limitFlowRate(
    dataset: Dataset,
    beta: float,
    included: Iterable[int] | None,
    constants: Constants,
    *,
    jobs: int | None = 1,
) -> StrategyOutcome:
    checkLevel("beta", beta)
    includedSet = resolveIncluded(dataset, included)

    if beta == 0 or not includedSet:
        return StrategyOutcome(
            dataset=dataset,
            strategy=StrategyKind.FLOW_LIMIT,
            beta=beta,
            included=includedSet,
            remainingDeficit={meterId: 0.0 for meterId in sorted(includedSet)},
            expiredDeficit={meterId: 0.0 for meterId in sorted(includedSet)},
        )

    selected = [meter for meter in dataset.meters if meter.meterId in includedSet]
    logger.info(
        f"flow limitation beta={beta:g} on {len(selected)} "
        f"of {len(dataset.meters)} meters"
    )
    results = parallelMap(
        _limitTask, [(meter, beta, constants) for meter in selected], jobs=jobs
    )
    limited = {result.meter.meterId: result for result in results}
    for meterId, result in limited.items():
        if result.expiredDeficit > 0:
            logger.debug(
                f"meter {meterId}: {result.expiredDeficit:.1f} kWh "
                "aged out of the deficit ledger"
            )

    meters = [
        limited[meter.meterId].meter if meter.meterId in limited else meter
        for meter in dataset.meters
    ]
    return StrategyOutcome(
        dataset=dataset.replaceMeters(meters),
        strategy=StrategyKind.FLOW_LIMIT,
        beta=beta,
        included=includedSet,
        remainingDeficit={
            meterId: limited[meterId].remainingDeficit for meterId in sorted(limited)
        },
        expiredDeficit={
            meterId: limited[meterId].expiredDeficit for meterId in sorted(limited)
        },
    )


@registerStrategy("flow-limit")
@dataclass(kw_only=True)
class FlowLimit(BaseStrategy):
    beta: float

    def __post_init__(self) -> None:
        super().__post_init__()
        checkLevel("beta", self.beta)

    @property
    def label(self) -> str:
        return f"fl{formatLevel(self.beta)}"

    def apply(self, dataset: Dataset, constants: Constants) -> StrategyOutcome:
        return limitFlowRate(
            dataset, self.beta, self.included, constants, jobs=self.jobs
        )
