from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from ..core.classes import (
    Constants,
    Dataset,
    MeterSeries,
    StrategyKind,
    StrategyOutcome,
)
from ..core.heat import flowFromHeat
from . import registerStrategy
from .base import BaseStrategy, resolveIncluded

logger = logging.getLogger(__name__)


def limitMeterReturnTemperature(
    meter: MeterSeries, tRlLimit: float, constants: Constants
) -> tuple[MeterSeries, int]:
    """Cap the return temperature at `tRlLimit` and recompute the flow that
    delivers the same heat. Returns the new series and the number of altered
    hours.

    Hours where the capped spread would not exceed the temperature threshold,
    or where no heat was delivered, are left alone.
    """
    newReturn = np.minimum(meter.tReturn, tRlLimit)
    newDeltaT = meter.tSupply - newReturn
    aboveLimit = meter.tReturn > tRlLimit
    altered = aboveLimit & (newDeltaT > constants.deltaTThreshold) & (meter.heat > 0)
    skipped = int(np.count_nonzero(aboveLimit & ~altered))
    if skipped:
        logger.warning(
            f"meter {meter.meterId}: {skipped} hours above the return temperature "
            f"limit kept, no heat delivered or the spread would not exceed "
            f"{constants.deltaTThreshold:g} °C"
        )
    if not altered.any():
        return meter, 0

    tReturn = np.where(altered, newReturn, meter.tReturn)
    flow = meter.flow.copy()
    flow[altered] = flowFromHeat(meter.heat[altered], newDeltaT[altered], constants)
    return meter.replaceSeries(flow=flow, tReturn=tReturn), int(altered.sum())


def limitReturnTemperature(
    dataset: Dataset, included: Iterable[int] | None, constants: Constants
) -> StrategyOutcome:
    includedSet = resolveIncluded(dataset, included)
    meters = []
    alteredHours = 0
    for meter in dataset.meters:
        if meter.meterId not in includedSet:
            meters.append(meter)
            continue
        limited, count = limitMeterReturnTemperature(
            meter, dataset.metas[meter.meterId].tRlLimit, constants
        )
        meters.append(limited)
        alteredHours += count
    logger.info(
        f"return temperature limitation altered {alteredHours} meter-hours "
        f"on {len(includedSet)} meters"
    )
    return StrategyOutcome(
        dataset=dataset.replaceMeters(meters),
        strategy=StrategyKind.RETURN_TEMP_LIMIT,
        included=includedSet,
    )


@registerStrategy("return-temp-limit")
@dataclass(kw_only=True)
class ReturnTempLimit(BaseStrategy):
    @property
    def label(self) -> str:
        return "tl"

    def apply(self, dataset: Dataset, constants: Constants) -> StrategyOutcome:
        return limitReturnTemperature(dataset, self.included, constants)
