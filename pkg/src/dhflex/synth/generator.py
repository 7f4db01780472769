"""Deterministic synthetic meter data.

Heat is a winter-peaking seasonal curve times a daily shape per consumer type
times lognormal noise, raised to a power and scaled so that the yearly mean
and peak match the meter's calibration targets. Return temperatures wander
around their mean with occasional excursions towards the observed maximum.
Supply temperatures follow the season inside a fixed band. The flow is then
derived from the heat identity.

All randomness comes from a counter-based SplitMix64 stream per meter and
purpose, so the output only depends on the seed and the spec:

    z = key + (counter + 1) * 0x9E3779B97F4A7C15       (mod 2**64)
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB
    z = z ^ (z >> 31)
    u = (z >> 11) * 2**-53

Normal variates use Box-Muller on consecutive pairs of uniforms.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import cache
from importlib import resources

import numpy as np
import yaml

from ..core.classes import (
    HOURS_PER_DAY,
    BadSpec,
    Constants,
    ConsumerType,
    Dataset,
    MeterMeta,
    MeterSeries,
    structure,
)
from ..core.heat import flowFromHeat
from ..core.threading import parallelMap

logger = logging.getLogger(__name__)

GOLDEN_GAMMA = 0x9E3779B97F4A7C15
MIX_MULTIPLIER_1 = 0xBF58476D1CE4E5B9
MIX_MULTIPLIER_2 = 0x94D049BB133111EB
UINT64_MASK = (1 << 64) - 1

# stream ids, one per purpose
STREAM_HEAT = 1
STREAM_RETURN = 2
STREAM_EXCURSION = 3
STREAM_SUPPLY = 4

DAYS_PER_YEAR = 365
COLDEST_DAY = 15
SEASONAL_AMPLITUDE = {
    ConsumerType.RESIDENTIAL: 0.7,
    ConsumerType.COMMERCIAL: 0.6,
    ConsumerType.INDUSTRIAL: 0.35,
}
HEAT_NOISE_SIGMA = 0.12
RETURN_AR_COEFFICIENT = 0.9
RETURN_NOISE_SIGMA = 2.0  # °C, stationary
EXCURSION_PROBABILITY = 0.1  # per meter and day
EXCURSION_HOURS = (3, 6)
SUPPLY_NOISE_SIGMA = 1.5  # °C
MIN_SPREAD = 5.0  # °C between supply and return
MAX_EXPONENT = 64.0


@cache
def defaultMetas() -> tuple[MeterMeta, ...]:
    text = resources.files("dhflex.synth").joinpath("substations.yaml").read_text()
    rows = yaml.safe_load(text)["substations"]
    return tuple(structure(row, MeterMeta) for row in rows)


@dataclass(kw_only=True)
class GenSpec:
    metas: list[MeterMeta] = field(default_factory=lambda: list(defaultMetas()))
    days: int = DAYS_PER_YEAR
    seed: int = 0
    supplyTempBand: tuple[float, float] = (75.0, 110.0)  # °C
    morningPeakHours: tuple[int, int] = (5, 10)
    eveningPeak: bool = True  # residential only

    def __post_init__(self) -> None:
        if self.days < 1:
            raise BadSpec(f"days must be at least 1, got {self.days}")
        if not 0 <= self.seed <= UINT64_MASK:
            raise BadSpec(f"seed must be an unsigned 64-bit integer, got {self.seed}")
        low, high = self.supplyTempBand
        if not low < high:
            raise BadSpec(f"empty supply temperature band {self.supplyTempBand}")
        start, end = self.morningPeakHours
        if not 0 <= start < end < HOURS_PER_DAY:
            raise BadSpec(f"bad morning peak hours {self.morningPeakHours}")
        meterIds = [meta.meterId for meta in self.metas]
        if len(set(meterIds)) != len(meterIds):
            raise BadSpec(f"duplicate meter ids: {meterIds}")
        for meta in self.metas:
            if meta.qMean > meta.qMax:
                raise BadSpec(f"meter {meta.meterId}: qMean exceeds qMax")


def _mix(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * np.uint64(MIX_MULTIPLIER_1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(MIX_MULTIPLIER_2)
    return z ^ (z >> np.uint64(31))


def streamKey(seed: int, meterId: int, stream: int) -> np.uint64:
    value = (seed ^ (meterId * GOLDEN_GAMMA) ^ (stream << 56)) & UINT64_MASK
    return _mix(np.array([value], dtype=np.uint64))[0]


def uniforms(key: np.uint64, count: int, offset: int = 0) -> np.ndarray:
    """`count` uniforms in [0, 1) from counters offset .. offset + count - 1."""
    counters = np.arange(offset + 1, offset + count + 1, dtype=np.uint64)
    z = _mix(np.full(count, key, dtype=np.uint64) + counters * np.uint64(GOLDEN_GAMMA))
    return (z >> np.uint64(11)).astype(np.float64) * 2.0**-53


def normals(key: np.uint64, count: int) -> np.ndarray:
    pairs = uniforms(key, 2 * count).reshape(count, 2)
    radius = np.sqrt(-2.0 * np.log1p(-pairs[:, 0]))
    return radius * np.cos(2 * np.pi * pairs[:, 1])


def seasonCurve(days: int) -> np.ndarray:
    """1 on the coldest day of the year, 0 half a year later."""
    day = np.arange(days)
    return 0.5 * (1 + np.cos(2 * np.pi * (day - COLDEST_DAY) / DAYS_PER_YEAR))


def _bump(center: float, width: float) -> np.ndarray:
    hour = np.arange(HOURS_PER_DAY)
    return np.exp(-0.5 * ((hour - center) / width) ** 2)


def dailyShape(
    consumerType: ConsumerType, morningPeakHours: tuple[int, int], eveningPeak: bool
) -> np.ndarray:
    start, end = morningPeakHours
    morning = _bump((start + end) / 2, (end - start) / 4)
    hour = np.arange(HOURS_PER_DAY)
    if consumerType == ConsumerType.RESIDENTIAL:
        shape = 0.8 + 0.7 * morning
        if eveningPeak:
            shape = shape + 0.4 * _bump(19, 1.5)
        shape = shape - 0.2 * ((hour <= 3) | (hour >= 23))
    elif consumerType == ConsumerType.COMMERCIAL:
        shape = 0.6 + 0.8 * morning + 0.4 * ((hour >= start) & (hour <= 18))
        shape = shape - 0.15 * _bump(14, 1.5)
    else:
        shape = 1.0 + 0.5 * morning - 0.15 * _bump(15, 2.0)
    return shape


def fitExponent(logShape: np.ndarray, targetRatio: float) -> float:
    """The power whose application to the shape gives a peak-to-mean ratio
    of `targetRatio`."""
    centered = logShape - logShape.max()

    def ratio(exponent):
        return 1 / np.mean(np.exp(exponent * centered))

    if targetRatio <= 1 or np.all(centered == 0):
        return 0.0
    low, high = 0.0, MAX_EXPONENT
    if ratio(high) < targetRatio:
        logger.warning(
            f"peak-to-mean ratio {targetRatio:.3f} is out of reach, "
            f"settling for {ratio(high):.3f}"
        )
        return high
    for _ in range(200):
        middle = 0.5 * (low + high)
        if ratio(middle) < targetRatio:
            low = middle
        else:
            high = middle
    return 0.5 * (low + high)


def generateHeat(meta: MeterMeta, spec: GenSpec) -> np.ndarray:
    hours = spec.days * HOURS_PER_DAY
    if meta.qMean == 0:
        return np.zeros(hours)
    amplitude = SEASONAL_AMPLITUDE[meta.consumerType]
    seasonal = (1 - amplitude) + amplitude * seasonCurve(spec.days)
    daily = dailyShape(meta.consumerType, spec.morningPeakHours, spec.eveningPeak)
    noise = HEAT_NOISE_SIGMA * normals(
        streamKey(spec.seed, meta.meterId, STREAM_HEAT), hours
    )
    logShape = (
        np.log(np.repeat(seasonal, HOURS_PER_DAY))
        + np.log(np.tile(daily, spec.days))
        + noise
    )
    exponent = fitExponent(logShape, meta.qMax / meta.qMean)
    weights = np.exp(exponent * (logShape - logShape.max()))
    return weights * (meta.qMean / weights.mean())


def generateReturnTemperature(meta: MeterMeta, spec: GenSpec) -> np.ndarray:
    hours = spec.days * HOURS_PER_DAY
    innovations = (
        RETURN_NOISE_SIGMA
        * np.sqrt(1 - RETURN_AR_COEFFICIENT**2)
        * normals(streamKey(spec.seed, meta.meterId, STREAM_RETURN), hours)
    )
    deviation = np.empty(hours)
    previous = 0.0
    for t in range(hours):
        previous = RETURN_AR_COEFFICIENT * previous + innovations[t]
        deviation[t] = previous
    tReturn = meta.tRlMean + deviation

    draws = uniforms(
        streamKey(spec.seed, meta.meterId, STREAM_EXCURSION), 3 * spec.days
    ).reshape(spec.days, 3)
    shortest, longest = EXCURSION_HOURS
    for day, (chance, startDraw, lengthDraw) in enumerate(draws):
        if chance >= EXCURSION_PROBABILITY:
            continue
        length = shortest + int(lengthDraw * (longest - shortest + 1))
        start = day * HOURS_PER_DAY + int(startDraw * (HOURS_PER_DAY - length + 1))
        # most of the way towards the observed maximum
        tReturn[start : start + length] = np.maximum(
            tReturn[start : start + length],
            meta.tRlMax - 0.25 * np.abs(deviation[start : start + length]),
        )
    return np.minimum(tReturn, meta.tRlMax)


def generateSupplyTemperature(
    meta: MeterMeta, spec: GenSpec, tReturn: np.ndarray
) -> np.ndarray:
    low, high = spec.supplyTempBand
    hours = spec.days * HOURS_PER_DAY
    season = np.repeat(seasonCurve(spec.days), HOURS_PER_DAY)
    noise = SUPPLY_NOISE_SIGMA * normals(
        streamKey(spec.seed, meta.meterId, STREAM_SUPPLY), hours
    )
    tSupply = np.clip(low + (high - low) * (0.15 + 0.7 * season) + noise, low, high)
    return np.maximum(tSupply, tReturn + MIN_SPREAD)


def generateMeter(meta: MeterMeta, spec: GenSpec, constants: Constants) -> MeterSeries:
    heat = generateHeat(meta, spec)
    tReturn = generateReturnTemperature(meta, spec)
    tSupply = generateSupplyTemperature(meta, spec, tReturn)
    flow = flowFromHeat(heat, tSupply - tReturn, constants)
    return MeterSeries(
        meterId=meta.meterId, flow=flow, tSupply=tSupply, tReturn=tReturn, heat=heat
    )


def _generateTask(task) -> MeterSeries:
    return generateMeter(*task)


def generate(
    spec: GenSpec | None = None,
    constants: Constants | None = None,
    *,
    jobs: int | None = 1,
) -> Dataset:
    if spec is None:
        spec = GenSpec()
    if constants is None:
        constants = Constants()
    metas = sorted(spec.metas, key=lambda meta: meta.meterId)
    logger.info(
        f"generating {len(metas)} meters over {spec.days} days, seed {spec.seed}"
    )
    meters = parallelMap(
        _generateTask, [(meta, spec, constants) for meta in metas], jobs=jobs
    )
    return Dataset(
        meters=meters,
        metas={meta.meterId: meta for meta in metas},
        hours=spec.days * HOURS_PER_DAY,
    )
