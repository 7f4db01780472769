from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable, Optional, Union

import numpy as np

from .classes import (
    HOURS_PER_DAY,
    Constants,
    Dataset,
    DegenerateInput,
    MetricsReport,
    PumpModel,
)
from .heat import aggregateFlow, dailySlices, totalHeat

logger = logging.getLogger(__name__)

FlowSource = Union[Dataset, np.ndarray]


def _aggregate(source: FlowSource) -> np.ndarray:
    if isinstance(source, Dataset):
        return aggregateFlow(source)
    return np.asarray(source, dtype=np.float64)


def durationCurve(series, topHours: Optional[int] = None) -> np.ndarray:
    """The values of `series` sorted in descending order, optionally cut to
    the `topHours` highest ones."""
    curve = np.sort(np.asarray(series, dtype=np.float64))[::-1]
    if topHours is not None:
        curve = curve[:topHours]
    return curve


def peakReduction(original: FlowSource, altered: FlowSource) -> float:
    """Relative reduction of the aggregate peak flow; negative when the
    peak went up."""
    originalAgg = _aggregate(original)
    alteredAgg = _aggregate(altered)
    if len(originalAgg) != len(alteredAgg):
        raise ValueError(
            f"time axes differ: {len(originalAgg)} vs {len(alteredAgg)} hours"
        )
    originalPeak = float(originalAgg.max()) if len(originalAgg) else 0.0
    if originalPeak == 0:
        raise DegenerateInput("original aggregate peak flow is zero")
    return 1 - float(alteredAgg.max()) / originalPeak


def pumpingEnergyRatio(originalAgg, alteredAgg, pump: PumpModel) -> float:
    """Yearly pumping energy of the altered flows relative to the original,
    with pump pressure scaling as flow to the power of the pump exponent."""
    originalAgg = np.asarray(originalAgg, dtype=np.float64)
    alteredAgg = np.asarray(alteredAgg, dtype=np.float64)
    if originalAgg.shape != alteredAgg.shape:
        raise ValueError(f"shapes differ: {originalAgg.shape} vs {alteredAgg.shape}")
    power = 1 + pump.exponent
    denominator = float(np.sum(originalAgg**power))
    if denominator == 0:
        raise DegenerateInput("original pumping energy is zero")
    return float(np.sum(alteredAgg**power)) / denominator


def cubicImprovement(originalAgg, alteredAgg) -> float:
    return 1 - pumpingEnergyRatio(originalAgg, alteredAgg, PumpModel(exponent=2.0))


def pumpPowerEstimate(vChp: float, vSubgrid: float, pump: PumpModel) -> float:
    """Electric pump power in kW attributable to a sub-grid drawing `vSubgrid`
    m³/h from a plant pumping `vChp` m³/h."""
    if vChp < 0 or vSubgrid < 0:
        raise ValueError("flows must be non-negative")
    if vChp == 0:
        return 0.0
    pressureDifference = pump.dpCoefficient * vChp**pump.exponent  # bar
    return (vChp / 3600) * pressureDifference * 100 / pump.etaPump * (vSubgrid / vChp)


def weightedReturnTemperature(dataset: Dataset) -> float:
    weighted = 0.0
    totalFlow = 0.0
    for meter in dataset.meters:
        weighted += float(np.dot(meter.flow, meter.tReturn))
        totalFlow += float(meter.flow.sum())
    if totalFlow == 0:
        raise DegenerateInput("aggregate flow is zero everywhere")
    return weighted / totalFlow


def heatDeficit(original: Dataset, altered: Dataset) -> float:
    originalHeat = totalHeat(original)
    if originalHeat == 0:
        raise DegenerateInput("original total heat is zero")
    return 1 - totalHeat(altered) / originalHeat


def additionalHeatCapacity(
    vMaxOriginal: float,
    vMaxAltered: float,
    qMaxOriginal: float,
    tSlDhMax: float,
    constants: Constants,
) -> tuple[float, float]:
    """Heat supply capacity freed by a lower peak flow, in kW and relative to
    the original peak heat load."""
    if qMaxOriginal <= 0:
        raise DegenerateInput(
            f"original peak heat must be positive, got {qMaxOriginal}"
        )
    deltaFlow = vMaxOriginal - vMaxAltered
    qAdditional = deltaFlow * constants.rhoCp * (tSlDhMax - constants.tRefReturn)
    return qAdditional, qAdditional / qMaxOriginal


def hoursReduced(original: FlowSource, altered: FlowSource, tol: float = 1e-9) -> int:
    """Number of hours in which the aggregate flow went down by more than `tol`."""
    return int(np.count_nonzero(_aggregate(altered) < _aggregate(original) - tol))


@dataclass(kw_only=True, frozen=True)
class MeterLoad:
    meterId: int
    meanHeat: float  # kW
    peakHeat: float  # kW


def loadSummary(dataset: Dataset) -> list[MeterLoad]:
    return [
        MeterLoad(
            meterId=meter.meterId,
            meanHeat=float(meter.heat.mean()),
            peakHeat=float(meter.heat.max()),
        )
        for meter in dataset.meters
    ]


@dataclass(kw_only=True)
class DailyProfiles:
    meterIds: list[int]
    profiles: np.ndarray  # meter × hour of day, in [0, 1]
    # True where the hourly means are constant and the row is all zeros
    degenerate: list[bool]


def normalizedDailyProfile(dataset: Dataset) -> DailyProfiles:
    profiles = np.zeros((len(dataset.meters), HOURS_PER_DAY))
    degenerate = []
    for index, meter in enumerate(dataset.meters):
        hourlyMeans = dailySlices(meter.heat).mean(axis=0)
        low, high = hourlyMeans.min(), hourlyMeans.max()
        if high == low:
            logger.warning(f"meter {meter.meterId}: constant daily profile")
            degenerate.append(True)
            continue
        profiles[index] = (hourlyMeans - low) / (high - low)
        degenerate.append(False)
    return DailyProfiles(
        meterIds=dataset.meterIds, profiles=profiles, degenerate=degenerate
    )


def lambdaKey(exponent: float) -> str:
    return f"{exponent:g}"


def metricsReport(
    scenario: str,
    original: Dataset,
    altered: Dataset,
    constants: Constants,
    *,
    lambdas: Iterable[float] = (),
    supplyTempMax: Optional[float] = None,
) -> MetricsReport:
    lambdas = list(lambdas)
    if not lambdas:
        lambdas = [constants.pumpLambdaMeasured, constants.pumpLambdaTheoretical]
    originalAgg = aggregateFlow(original)
    alteredAgg = aggregateFlow(altered)
    peakOriginal = float(originalAgg.max())
    peakStrategy = float(alteredAgg.max())

    additional = additionalRelative = None
    if supplyTempMax is not None:
        originalHeatAgg = sum(
            (meter.heat for meter in original.meters), np.zeros(original.hours)
        )
        additional, additionalRelative = additionalHeatCapacity(
            peakOriginal,
            peakStrategy,
            float(originalHeatAgg.max()),
            supplyTempMax,
            constants,
        )

    return MetricsReport(
        scenario=scenario,
        peakOriginal=peakOriginal,
        peakStrategy=peakStrategy,
        peakReduction=peakReduction(originalAgg, alteredAgg),
        pumpingRatios={
            lambdaKey(exponent): pumpingEnergyRatio(
                originalAgg, alteredAgg, PumpModel.fromConstants(constants, exponent)
            )
            for exponent in lambdas
        },
        cubicImprovement=cubicImprovement(originalAgg, alteredAgg),
        weightedReturnTemperature=weightedReturnTemperature(altered),
        weightedReturnTemperatureOriginal=weightedReturnTemperature(original),
        heatDeficit=heatDeficit(original, altered),
        totalHeatOriginal=totalHeat(original),
        totalHeatStrategy=totalHeat(altered),
        hoursReduced=hoursReduced(originalAgg, alteredAgg),
        additionalHeatCapacity=additional,
        additionalHeatCapacityRelative=additionalRelative,
        durationCurve=durationCurve(alteredAgg).tolist(),
    )
