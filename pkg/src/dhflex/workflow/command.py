from __future__ import annotations

import asyncio
import csv
import json
import logging
import pathlib
from functools import partial

from ..backends.meterdata import (
    ValidationReport,
    fillGaps,
    readDataset,
    validate,
    writeDataset,
)
from ..core.classes import Constants, Dataset, unstructure
from ..core.metrics import (
    heatDeficit,
    loadSummary,
    metricsReport,
    normalizedDailyProfile,
    peakReduction,
)
from ..core.threading import runInThread
from ..selection import greedyRank
from ..strategies.flowlimit import FlowLimit
from ..strategies.loadshift import LoadShift
from ..synth.generator import GenSpec, generate
from .config import RunConfig, SynthConfig, UsageError
from .scenarios import parseRankVariants, parseScenarios

logger = logging.getLogger(__name__)

METER_FILE_NAME = "meter.csv"
META_FILE_NAME = "meta.csv"
VALIDATION_FILE_NAME = "validation.json"


class ValidationFailed(Exception):
    def __init__(self, report: ValidationReport):
        failing = [entry.meterId for entry in report.meters if entry.violations]
        super().__init__(f"validation failed for meters {failing}")
        self.report = report


def formatNumber(value) -> str:
    return repr(float(value))


def writeCsv(path: pathlib.Path, header: list[str], rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as file:
        writer = csv.writer(file, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    logger.info(f"wrote {path}")


def writeJson(path: pathlib.Path, data) -> None:
    path.write_text(json.dumps(data, indent=2) + "\n", encoding="utf-8")
    logger.info(f"wrote {path}")


def makeGenSpec(config: RunConfig) -> GenSpec:
    synth = config.synth if config.synth is not None else SynthConfig()
    return GenSpec(
        days=synth.days, seed=synth.seed, supplyTempBand=synth.supplyTempBand
    )


async def loadDataset(
    config: RunConfig, constants: Constants
) -> tuple[Dataset, ValidationReport]:
    """The gap-filled input data, or synthetic data when no input is given,
    with its validation report."""
    if config.input is not None:
        dataset = await runInThread(
            readDataset,
            pathlib.Path(config.input.meters),
            pathlib.Path(config.input.metas),
        )
        dataset, fillReport = fillGaps(dataset, constants)
        gapsFilled = fillReport.gapCounts()
    else:
        dataset = await runInThread(
            partial(generate, makeGenSpec(config), constants, jobs=config.jobs)
        )
        gapsFilled = {}
    report = validate(
        dataset, constants, config.relTol, config.absTol, gapsFilled=gapsFilled
    )
    return dataset, report


async def prepareDataset(
    config: RunConfig, constants: Constants, outDir: pathlib.Path
) -> Dataset:
    dataset, report = await loadDataset(config, constants)
    if not report.passed:
        writeJson(outDir / VALIDATION_FILE_NAME, unstructure(report))
        raise ValidationFailed(report)
    return dataset


async def cmdSynth(config: RunConfig, outDir: pathlib.Path) -> None:
    if config.input is not None:
        raise UsageError("synth takes a synth section, not input files")
    constants = config.makeConstants()
    dataset = await runInThread(
        partial(generate, makeGenSpec(config), constants, jobs=config.jobs)
    )
    writeDataset(dataset, outDir / METER_FILE_NAME, outDir / META_FILE_NAME)
    logger.info(f"wrote {len(dataset.meters)} meters to {outDir}")


async def cmdValidate(config: RunConfig, outDir: pathlib.Path) -> ValidationReport:
    dataset, report = await loadDataset(config, config.makeConstants())
    writeJson(outDir / VALIDATION_FILE_NAME, unstructure(report))
    if not report.passed:
        raise ValidationFailed(report)
    return report


async def cmdRun(config: RunConfig, outDir: pathlib.Path) -> None:
    constants = config.makeConstants()
    scenarios = parseScenarios(
        config.scenarios,
        alphas=config.alphas,
        betas=config.betas,
        included=config.include,
        jobs=config.jobs,
    )
    dataset = await prepareDataset(config, constants, outDir)

    logger.info(f"running {', '.join(scenario.label for scenario in scenarios)}")
    outcomes = await asyncio.gather(
        *(runInThread(scenario.apply, dataset, constants) for scenario in scenarios)
    )
    reports = {
        scenario.label: metricsReport(
            scenario.label,
            dataset,
            outcome.dataset,
            constants,
            lambdas=config.lambdas,
            supplyTempMax=config.supplyTempMax,
        )
        for scenario, outcome in zip(scenarios, outcomes)
    }

    labels = list(reports)
    curves = [reports[label].durationCurve for label in labels]
    rows = [
        [hour] + [formatNumber(curve[hour]) for curve in curves]
        for hour in range(dataset.hours)
    ]
    writeCsv(outDir / "duration_curves.csv", ["hour"] + labels, rows)
    writeCsv(
        outDir / "duration_curves_top.csv", ["hour"] + labels, rows[: config.topHours]
    )
    writeJson(
        outDir / "metrics.json",
        {label: unstructure(report) for label, report in reports.items()},
    )

    for scenario, outcome in zip(scenarios, outcomes):
        if scenario.stages:
            alteredPath = outDir / f"altered_{scenario.label}.csv"
            writeDataset(outcome.dataset, alteredPath, None)
            logger.info(f"wrote {alteredPath}")

    writeCsv(
        outDir / "loads.csv",
        ["meter_id", "mean_heat_kw", "peak_heat_kw"],
        [
            [load.meterId, formatNumber(load.meanHeat), formatNumber(load.peakHeat)]
            for load in loadSummary(dataset)
        ],
    )
    profiles = normalizedDailyProfile(dataset)
    writeCsv(
        outDir / "daily_profiles.csv",
        ["meter_id"] + [f"h{hour}" for hour in range(24)] + ["degenerate"],
        [
            [meterId] + [formatNumber(value) for value in row] + [int(degenerate)]
            for meterId, row, degenerate in zip(
                profiles.meterIds, profiles.profiles, profiles.degenerate
            )
        ],
    )


async def cmdSweep(config: RunConfig, outDir: pathlib.Path) -> None:
    constants = config.makeConstants()
    included = frozenset(config.include) if config.include is not None else None
    variants = [
        ("ls", alpha, LoadShift(alpha=alpha, included=included, jobs=config.jobs))
        for alpha in config.alphas
    ] + [
        ("fl", beta, FlowLimit(beta=beta, included=included, jobs=config.jobs))
        for beta in config.betas
    ]
    if not variants:
        raise UsageError("the sweep grid is empty")
    dataset = await prepareDataset(config, constants, outDir)

    outcomes = await asyncio.gather(
        *(
            runInThread(strategy.apply, dataset, constants)
            for _, _, strategy in variants
        )
    )
    rows = []
    for (kind, level, _), outcome in zip(variants, outcomes):
        rows.append(
            [
                kind,
                formatNumber(level),
                formatNumber(peakReduction(dataset, outcome.dataset)),
                formatNumber(heatDeficit(dataset, outcome.dataset)),
            ]
        )
    writeCsv(
        outDir / "sweep.csv",
        ["strategy", "parameter", "peak_reduction", "heat_deficit"],
        rows,
    )


async def cmdRank(config: RunConfig, outDir: pathlib.Path) -> None:
    constants = config.makeConstants()
    variants = parseRankVariants(
        config.rankVariants, alphas=config.alphas, betas=config.betas
    )
    dataset = await prepareDataset(config, constants, outDir)

    curves = await asyncio.gather(
        *(
            runInThread(
                partial(
                    greedyRank,
                    dataset,
                    variant,
                    constants,
                    candidates=config.include,
                    jobs=config.jobs,
                )
            )
            for variant in variants
        )
    )
    labels = [variant.label for variant in variants]
    numIncluded = len(curves[0].order) if curves else 0

    writeCsv(
        outDir / "included_meters.csv",
        ["k"] + labels,
        [[0] + [formatNumber(0)] * len(curves)]
        + [
            [k] + [formatNumber(curve.reduction[k - 1]) for curve in curves]
            for k in range(1, numIncluded + 1)
        ],
    )
    writeCsv(
        outDir / "inclusion_order.csv",
        ["k"] + labels,
        [
            [k] + [curve.order[k - 1] for curve in curves]
            for k in range(1, numIncluded + 1)
        ],
    )
    writeCsv(
        outDir / "return_temperatures.csv",
        ["k"] + labels,
        [
            [k] + [formatNumber(curve.returnTemperatures[k]) for curve in curves]
            for k in range(numIncluded + 1)
        ],
    )
