"""Reading, writing, gap filling and validation of hourly meter data.

Meter file columns: meter_id,hour,flow_m3h,t_supply_c,t_return_c,heat_kw
Meta file columns: meter_id,q_max_kw,q_mean_kw,t_rl_mean_c,t_rl_max_c,
t_rl_limit_c,consumer_type

An empty cell is a gap. Hours are 0-based; hours missing from the file are
gaps in all four series.
"""

from __future__ import annotations

import csv
import io
import logging
import pathlib
from dataclasses import dataclass, field

import numpy as np

from ..core.classes import (
    HOURS_PER_DAY,
    BadSpec,
    Constants,
    ConsumerType,
    Dataset,
    MeterMeta,
    MeterSeries,
)
from ..core.heat import flowFromHeat, heatFromFlow

logger = logging.getLogger(__name__)

METER_HEADER = [
    "meter_id",
    "hour",
    "flow_m3h",
    "t_supply_c",
    "t_return_c",
    "heat_kw",
]
META_HEADER = [
    "meter_id",
    "q_max_kw",
    "q_mean_kw",
    "t_rl_mean_c",
    "t_rl_max_c",
    "t_rl_limit_c",
    "consumer_type",
]
SERIES_NAMES = ["flow", "tSupply", "tReturn", "heat"]

DEFAULT_REL_TOL = 0.02
DEFAULT_ABS_TOL = 0.5  # kW

# violation hours listed per meter in a report; the count is always complete
MAX_REPORTED_HOURS = 100


class IngestError(Exception):
    pass


class ParseError(IngestError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"{message} (line {line})"
        super().__init__(message)
        self.line = line


class DuplicateRow(IngestError):
    pass


class BadHorizon(IngestError):
    pass


class MissingMeta(IngestError):
    pass


class UnfillableSeries(IngestError):
    def __init__(self, meterId, seriesName):
        super().__init__(f"meter {meterId}: {seriesName} series has no values")
        self.meterId = meterId


@dataclass(kw_only=True)
class MeterValidation:
    meterId: int
    gapsFilled: int = 0
    violations: int = 0
    maxRelativeError: float = 0.0
    violationHours: list[int] = field(default_factory=list)


@dataclass(kw_only=True)
class ValidationReport:
    meters: list[MeterValidation] = field(default_factory=list)
    passed: bool = True

    def gapCounts(self) -> dict[int, int]:
        return {entry.meterId: entry.gapsFilled for entry in self.meters}


def _decode(data: bytes | str) -> str:
    if isinstance(data, bytes):
        return data.decode("utf-8-sig")
    return data.removeprefix("\ufeff")


def _readRows(data: bytes | str, header: list[str]):
    reader = csv.reader(io.StringIO(_decode(data), newline=""))
    rowIter = enumerate(reader, 1)
    lineNumber, row = next(rowIter, (1, None))
    if row is None or [cell.strip() for cell in row] != header:
        raise ParseError(f"expected header {','.join(header)}", lineNumber)
    for lineNumber, row in rowIter:
        if not row or not any(cell.strip() for cell in row):
            continue
        if len(row) != len(header):
            raise ParseError(
                f"expected {len(header)} cells, got {len(row)}", lineNumber
            )
        yield lineNumber, [cell.strip() for cell in row]


def _parseNumber(cell: str, lineNumber: int) -> float:
    if not cell:
        return np.nan
    try:
        return float(cell)
    except ValueError:
        raise ParseError(f"bad number {cell!r}", lineNumber)


def _parseInt(cell: str, lineNumber: int) -> int:
    try:
        return int(cell)
    except ValueError:
        raise ParseError(f"bad integer {cell!r}", lineNumber)


def parseMetas(metaCsv: bytes | str) -> dict[int, MeterMeta]:
    metas = {}
    for lineNumber, row in _readRows(metaCsv, META_HEADER):
        meterId = _parseInt(row[0], lineNumber)
        if meterId in metas:
            raise DuplicateRow(f"meter {meterId} listed twice (line {lineNumber})")
        values = [_parseNumber(cell, lineNumber) for cell in row[1:6]]
        try:
            metas[meterId] = MeterMeta(
                meterId=meterId,
                qMax=values[0],
                qMean=values[1],
                tRlMean=values[2],
                tRlMax=values[3],
                tRlLimit=values[4],
                consumerType=ConsumerType(row[6].lower()),
            )
        except (BadSpec, ValueError) as e:
            raise ParseError(str(e), lineNumber)
    return metas


def parseDataset(meterCsv: bytes | str, metaCsv: bytes | str) -> Dataset:
    metas = parseMetas(metaCsv)

    rows: dict[int, dict[int, list[float]]] = {}
    for lineNumber, row in _readRows(meterCsv, METER_HEADER):
        meterId = _parseInt(row[0], lineNumber)
        hour = _parseInt(row[1], lineNumber)
        if hour < 0:
            raise ParseError(f"negative hour {hour}", lineNumber)
        meterRows = rows.setdefault(meterId, {})
        if hour in meterRows:
            raise DuplicateRow(
                f"meter {meterId} hour {hour} appears twice (line {lineNumber})"
            )
        meterRows[hour] = [_parseNumber(cell, lineNumber) for cell in row[2:]]

    missing = sorted(set(rows) - set(metas))
    if missing:
        raise MissingMeta(f"no meta data for meters {missing}")

    hours = max((max(meterRows) + 1 for meterRows in rows.values()), default=0)
    if hours % HOURS_PER_DAY:
        raise BadHorizon(f"{hours} hours is not a whole number of days")

    meters = []
    for meterId in sorted(rows):
        values = np.full((hours, len(SERIES_NAMES)), np.nan)
        for hour, cells in rows[meterId].items():
            values[hour] = cells
        meters.append(
            MeterSeries(
                meterId=meterId,
                **{name: values[:, i] for i, name in enumerate(SERIES_NAMES)},
            )
        )
        gaps = meters[-1].gapCount()
        if gaps:
            logger.info(f"meter {meterId}: {gaps} gaps")

    return Dataset(meters=meters, metas=metas, hours=hours)


def _formatNumber(value: float) -> str:
    return "" if np.isnan(value) else repr(float(value))


def serializeDataset(dataset: Dataset) -> tuple[str, str]:
    """Return the meter and meta CSV text for `dataset`."""
    meterFile = io.StringIO(newline="")
    writer = csv.writer(meterFile, lineterminator="\n")
    writer.writerow(METER_HEADER)
    for meter in dataset.meters:
        columns = [getattr(meter, name) for name in SERIES_NAMES]
        for hour in range(meter.hours):
            writer.writerow(
                [meter.meterId, hour]
                + [_formatNumber(column[hour]) for column in columns]
            )

    metaFile = io.StringIO(newline="")
    writer = csv.writer(metaFile, lineterminator="\n")
    writer.writerow(META_HEADER)
    for meterId in sorted(dataset.metas):
        meta = dataset.metas[meterId]
        writer.writerow(
            [
                meterId,
                repr(float(meta.qMax)),
                repr(float(meta.qMean)),
                repr(float(meta.tRlMean)),
                repr(float(meta.tRlMax)),
                repr(float(meta.tRlLimit)),
                meta.consumerType.value,
            ]
        )
    return meterFile.getvalue(), metaFile.getvalue()


def readDataset(metersPath: pathlib.Path, metasPath: pathlib.Path) -> Dataset:
    return parseDataset(
        pathlib.Path(metersPath).read_bytes(), pathlib.Path(metasPath).read_bytes()
    )


def writeDataset(
    dataset: Dataset,
    metersPath: pathlib.Path,
    metasPath: pathlib.Path | None = None,
) -> None:
    meterText, metaText = serializeDataset(dataset)
    pathlib.Path(metersPath).write_text(meterText, encoding="utf-8", newline="")
    if metasPath is not None:
        pathlib.Path(metasPath).write_text(metaText, encoding="utf-8", newline="")


def _interpolate(series: np.ndarray) -> np.ndarray:
    gaps = np.isnan(series)
    if not gaps.any():
        return series
    hours = np.arange(len(series))
    filled = series.copy()
    # np.interp holds the end values beyond the first and last sample
    filled[gaps] = np.interp(hours[gaps], hours[~gaps], series[~gaps])
    return filled


def fillMeterGaps(meter: MeterSeries, constants: Constants) -> MeterSeries:
    flow = meter.flow.copy()
    tSupply = meter.tSupply.copy()
    tReturn = meter.tReturn.copy()
    heat = meter.heat.copy()

    # where exactly one quantity is missing, the identity supplies it
    temperaturesKnown = ~np.isnan(tSupply) & ~np.isnan(tReturn)
    deltaT = tSupply - tReturn
    heatOnly = np.isnan(heat) & ~np.isnan(flow) & temperaturesKnown
    heat[heatOnly] = heatFromFlow(flow[heatOnly], deltaT[heatOnly], constants)
    flowOnly = (
        np.isnan(flow)
        & ~np.isnan(heat)
        & temperaturesKnown
        & (deltaT >= constants.deltaTThreshold)
    )
    flow[flowOnly] = flowFromHeat(heat[flowOnly], deltaT[flowOnly], constants)

    series = {"flow": flow, "tSupply": tSupply, "tReturn": tReturn, "heat": heat}
    for name, values in series.items():
        if len(values) and np.isnan(values).all():
            raise UnfillableSeries(meter.meterId, name)
        series[name] = _interpolate(values)
    return meter.replaceSeries(**series)


def fillGaps(
    dataset: Dataset, constants: Constants | None = None
) -> tuple[Dataset, ValidationReport]:
    """Fill every gap; the report carries the number of gaps per meter."""
    if constants is None:
        constants = Constants()
    meters = []
    entries = []
    for meter in dataset.meters:
        gaps = meter.gapCount()
        meters.append(fillMeterGaps(meter, constants) if gaps else meter)
        entries.append(MeterValidation(meterId=meter.meterId, gapsFilled=gaps))
    return dataset.replaceMeters(meters), ValidationReport(meters=entries)


def validate(
    dataset: Dataset,
    constants: Constants,
    relTol: float = DEFAULT_REL_TOL,
    absTol: float = DEFAULT_ABS_TOL,
    *,
    gapsFilled: dict[int, int] | None = None,
) -> ValidationReport:
    """Check the heat identity and the sign of the flow at every hour.

    The relative error is measured against max(|heat|, absTol). An hour is a
    violation when the identity is off by more than max(absTol, relTol·|heat|),
    when the flow is negative, when any value is missing, or when there is
    flow and heat but no positive temperature spread.
    """
    gapsFilled = gapsFilled or {}
    entries = []
    for meter in dataset.meters:
        deltaT = meter.deltaT
        expected = heatFromFlow(meter.flow, deltaT, constants)
        error = np.abs(meter.heat - expected)
        missing = np.isnan(error)
        bad = (
            missing
            | (error > np.maximum(absTol, relTol * np.abs(meter.heat)))
            | (meter.flow < 0)
            | ((meter.flow > 0) & (deltaT <= 0) & (meter.heat > 0))
        )
        relative = error[~missing] / np.maximum(np.abs(meter.heat[~missing]), absTol)
        violationHours = np.flatnonzero(bad)
        entries.append(
            MeterValidation(
                meterId=meter.meterId,
                gapsFilled=gapsFilled.get(meter.meterId, 0),
                violations=len(violationHours),
                maxRelativeError=float(relative.max()) if len(relative) else 0.0,
                violationHours=violationHours[:MAX_REPORTED_HOURS].tolist(),
            )
        )
        if len(violationHours):
            logger.warning(
                f"meter {meter.meterId}: {len(violationHours)} hours "
                "violate the heat identity"
            )
    return ValidationReport(
        meters=entries, passed=all(entry.violations == 0 for entry in entries)
    )
