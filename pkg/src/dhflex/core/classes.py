from __future__ import annotations

import sys
from dataclasses import dataclass, field, is_dataclass, replace
from enum import Enum
from typing import Optional, Union, get_args, get_origin, get_type_hints

import cattrs
import numpy as np

HOURS_PER_DAY = 24


class DegenerateInput(ValueError):
    pass


class BadSpec(ValueError):
    pass


class ConsumerType(str, Enum):
    # TODO: use StrEnum once we drop support for Python 3.10
    RESIDENTIAL = "residential"
    COMMERCIAL = "commercial"
    INDUSTRIAL = "industrial"


class StrategyKind(str, Enum):
    LOAD_SHIFT = "LoadShift"
    RETURN_TEMP_LIMIT = "ReturnTempLimit"
    FLOW_LIMIT = "FlowLimit"
    COMPOSITE = "Composite"


@dataclass(kw_only=True, frozen=True)
class Constants:
    rho: float = 977.0  # kg/m³, water near 70 °C
    cp: float = 0.001163  # kWh/(kg·°C)
    pumpLambdaMeasured: float = 1.84
    pumpLambdaTheoretical: float = 2.0
    etaPump: float = 0.7
    dpCoefficient: float = 1e-5  # bar per (m³/h)^1.84
    deltaTThreshold: float = 1.0  # °C
    tRefReturn: float = 50.0  # °C

    def __post_init__(self) -> None:
        if not (self.rho > 0 and self.cp > 0):
            raise ValueError("rho and cp must be positive")
        if not 0 < self.etaPump <= 1:
            raise ValueError(f"etaPump must be in (0, 1], got {self.etaPump}")
        if self.pumpLambdaMeasured <= 0 or self.pumpLambdaTheoretical <= 0:
            raise ValueError("pump exponents must be positive")
        if self.deltaTThreshold <= 0:
            raise ValueError("deltaTThreshold must be positive")

    @property
    def rhoCp(self) -> float:
        # kWh/(m³·°C)
        return self.rho * self.cp


@dataclass(kw_only=True, frozen=True)
class MeterMeta:
    meterId: int
    qMax: float  # kW
    qMean: float  # kW
    tRlMean: float  # °C
    tRlMax: float  # °C
    tRlLimit: float  # °C
    consumerType: ConsumerType

    def __post_init__(self) -> None:
        if self.meterId <= 0:
            raise BadSpec(f"meter id must be positive, got {self.meterId}")
        if not self.qMax >= self.qMean >= 0:
            raise BadSpec(
                f"meter {self.meterId}: expected qMax >= qMean >= 0, "
                f"got qMax={self.qMax}, qMean={self.qMean}"
            )
        if self.tRlMax < self.tRlMean:
            raise BadSpec(
                f"meter {self.meterId}: tRlMax ({self.tRlMax}) is below "
                f"tRlMean ({self.tRlMean})"
            )
        object.__setattr__(self, "consumerType", ConsumerType(self.consumerType))


def _frozenSeries(values) -> np.ndarray:
    array = np.array(values, dtype=np.float64)
    if array.ndim != 1:
        raise ValueError(f"expected a one-dimensional series, got shape {array.shape}")
    array.flags.writeable = False
    return array


@dataclass(kw_only=True, frozen=True, eq=False)
class MeterSeries:
    """Hourly measurements of one substation. Gaps are NaN until filled."""

    meterId: int
    flow: np.ndarray  # m³/h
    tSupply: np.ndarray  # °C
    tReturn: np.ndarray  # °C
    heat: np.ndarray  # kW

    def __post_init__(self) -> None:
        for name in ["flow", "tSupply", "tReturn", "heat"]:
            object.__setattr__(self, name, _frozenSeries(getattr(self, name)))
        lengths = {len(self.flow), len(self.tSupply), len(self.tReturn), len(self.heat)}
        if len(lengths) != 1:
            raise ValueError(f"meter {self.meterId}: series lengths differ {lengths}")
        if len(self.flow) % HOURS_PER_DAY:
            raise ValueError(
                f"meter {self.meterId}: series length {len(self.flow)} "
                f"is not a multiple of {HOURS_PER_DAY}"
            )

    def __eq__(self, other) -> bool:
        if not isinstance(other, MeterSeries):
            return NotImplemented
        return self.meterId == other.meterId and all(
            np.array_equal(getattr(self, name), getattr(other, name), equal_nan=True)
            for name in ["flow", "tSupply", "tReturn", "heat"]
        )

    @property
    def hours(self) -> int:
        return len(self.flow)

    @property
    def deltaT(self) -> np.ndarray:
        return self.tSupply - self.tReturn

    def gapCount(self) -> int:
        return int(
            sum(
                np.isnan(getattr(self, name)).sum()
                for name in ["flow", "tSupply", "tReturn", "heat"]
            )
        )

    def replaceSeries(self, **series) -> MeterSeries:
        return replace(self, **series)


@dataclass(kw_only=True, frozen=True)
class Dataset:
    meters: tuple[MeterSeries, ...]
    metas: dict[int, MeterMeta]
    hours: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "meters", tuple(self.meters))
        meterIds = [meter.meterId for meter in self.meters]
        if len(set(meterIds)) != len(meterIds):
            raise ValueError(f"duplicate meter ids: {meterIds}")
        missing = [meterId for meterId in meterIds if meterId not in self.metas]
        if missing:
            raise ValueError(f"meters without meta data: {missing}")
        badLengths = [
            meter.meterId for meter in self.meters if meter.hours != self.hours
        ]
        if badLengths:
            raise ValueError(f"meters not spanning {self.hours} hours: {badLengths}")

    @property
    def meterIds(self) -> list[int]:
        return [meter.meterId for meter in self.meters]

    @property
    def days(self) -> int:
        return self.hours // HOURS_PER_DAY

    def getMeter(self, meterId: int) -> MeterSeries:
        for meter in self.meters:
            if meter.meterId == meterId:
                return meter
        raise KeyError(meterId)

    def replaceMeters(self, meters) -> Dataset:
        return replace(self, meters=tuple(meters))


@dataclass(kw_only=True, frozen=True)
class StrategyOutcome:
    dataset: Dataset
    strategy: StrategyKind
    alpha: Optional[float] = None
    beta: Optional[float] = None
    included: frozenset[int] = frozenset()
    chain: tuple[str, ...] = ()
    # stage-1 optimum per day, load shifting only
    dailyPeaks: Optional[tuple[float, ...]] = None
    totalShift: Optional[float] = None
    # kWh left in each meter's ledger, flow limitation only
    remainingDeficit: Optional[dict[int, float]] = None
    # kWh that aged out of the ledger before it could be made up
    expiredDeficit: Optional[dict[int, float]] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "included", frozenset(self.included))
        if self.alpha is not None and not 0 <= self.alpha < 1:
            raise ValueError(f"alpha must be in [0, 1), got {self.alpha}")
        if self.beta is not None and not 0 <= self.beta < 1:
            raise ValueError(f"beta must be in [0, 1), got {self.beta}")
        unknown = self.included - set(self.dataset.meterIds)
        if unknown:
            raise ValueError(f"included meters not in dataset: {sorted(unknown)}")


@dataclass(kw_only=True, frozen=True)
class PumpModel:
    exponent: float = 1.84  # λ
    etaPump: float = 0.7
    dpCoefficient: float = 1e-5

    def __post_init__(self) -> None:
        if self.exponent <= 0:
            raise ValueError(f"pump exponent must be positive, got {self.exponent}")
        if not 0 < self.etaPump <= 1:
            raise ValueError(f"etaPump must be in (0, 1], got {self.etaPump}")

    @classmethod
    def fromConstants(cls, constants: Constants, exponent=None) -> PumpModel:
        return cls(
            exponent=(
                exponent if exponent is not None else constants.pumpLambdaMeasured
            ),
            etaPump=constants.etaPump,
            dpCoefficient=constants.dpCoefficient,
        )


@dataclass(kw_only=True)
class MetricsReport:
    scenario: str
    peakOriginal: float  # m³/h
    peakStrategy: float  # m³/h
    peakReduction: float
    pumpingRatios: dict[str, float]  # keyed by pump exponent
    cubicImprovement: float
    weightedReturnTemperature: float  # °C
    weightedReturnTemperatureOriginal: float  # °C
    heatDeficit: float
    totalHeatOriginal: float  # kWh
    totalHeatStrategy: float  # kWh
    hoursReduced: int
    additionalHeatCapacity: Optional[float] = None  # kW
    additionalHeatCapacityRelative: Optional[float] = None
    durationCurve: list[float] = field(default_factory=list)

    def __post_init__(self) -> None:
        curve = self.durationCurve
        if any(a < b for a, b in zip(curve, curve[1:])):
            raise ValueError("duration curve must be non-increasing")


@dataclass(kw_only=True)
class GreedyCurve:
    order: list[int]
    reduction: list[float]
    baselinePeak: float  # m³/h
    # flow-weighted return temperature per prefix size, °C
    returnTemperatures: list[float] = field(default_factory=list)

    def __post_init__(self) -> None:
        if len(self.order) != len(self.reduction):
            raise ValueError("order and reduction must have the same length")
        if len(set(self.order)) != len(self.order):
            raise ValueError(f"order is not a permutation: {self.order}")


def makeSchema(*classes, schema=None):
    if schema is None:
        schema = {}
    for cls in classes:
        if cls in schema:
            continue
        cls_globals = vars(sys.modules[cls.__module__])
        classFields = {}
        schema[cls] = classFields
        for name, tp in get_type_hints(cls, cls_globals).items():
            fieldDef = {}
            if get_origin(tp) is Union:
                [tp] = [arg for arg in get_args(tp) if arg is not type(None)]
                fieldDef["optional"] = True
            origin = get_origin(tp)
            if origin in (list, tuple, dict):
                fieldDef["type"] = origin
                subtype = get_args(tp)[-1]
                fieldDef["subtype"] = subtype
                if is_dataclass(subtype):
                    makeSchema(subtype, schema=schema)
            else:
                fieldDef["type"] = tp
                if is_dataclass(tp):
                    makeSchema(tp, schema=schema)
            classFields[name] = fieldDef
    return schema


def classesToStrings(schema):
    return {
        cls.__name__: {
            fieldName: {k: classToString(v) for k, v in fieldDef.items()}
            for fieldName, fieldDef in classFields.items()
        }
        for cls, classFields in schema.items()
    }


def classToString(cls):
    return cls.__name__ if hasattr(cls, "__name__") else cls


def serializableMetricsSchema():
    return classesToStrings(makeSchema(MetricsReport))


# cattrs hooks + structure/unstructure support


def _unstructureFloat(v):
    try:
        if v.is_integer():
            return int(v)
    except AttributeError:
        if not isinstance(v, (int, float)):
            raise TypeError(f"Expected int or float, got {type(v)}. ({v!r})")
    return float(v)


def _structureNumber(d, tp):
    if isinstance(d, bool) or not isinstance(d, (float, int)):
        raise TypeError(f"Expected a number, got {d!r}")
    return float(d)


def _structureArray(d, tp):
    return _frozenSeries(d)


def _unstructureArray(v):
    return v.tolist()


_cattrsConverter = cattrs.Converter()

_cattrsConverter.register_unstructure_hook(float, _unstructureFloat)
_cattrsConverter.register_structure_hook(float, _structureNumber)
_cattrsConverter.register_structure_hook(np.ndarray, _structureArray)
_cattrsConverter.register_unstructure_hook(np.ndarray, _unstructureArray)


def structure(obj, cls):
    return _cattrsConverter.structure(obj, cls)


def unstructure(obj):
    return _cattrsConverter.unstructure(obj)


if __name__ == "__main__":
    import json

    print(json.dumps(serializableMetricsSchema(), indent=2))
