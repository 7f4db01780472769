import csv
import json
import pathlib
import subprocess

import pytest
from testSupport import directoryTreeToList

from dhflex import __version__
from dhflex.__main__ import (
    EXIT_OK,
    EXIT_STRATEGY,
    EXIT_USAGE,
    EXIT_VALIDATION,
    mainAsync,
)
from dhflex.backends.meterdata import METER_HEADER

repoRoot = pathlib.Path(__file__).resolve().parent.parent
schemaPath = repoRoot / "src" / "dhflex" / "data" / "metrics-schema.json"


def readCsv(path):
    with open(path, encoding="utf-8", newline="") as file:
        return list(csv.reader(file))


def inputArguments(meterFiles):
    metersPath, metasPath = meterFiles
    return ["--meters", str(metersPath), "--metas", str(metasPath)]


async def test_synth(tmp_path):
    outDir = tmp_path / "synth"
    exitCode = await mainAsync(
        ["synth", "--days", "1", "--seed", "5", "--out", str(outDir)]
    )
    assert exitCode == EXIT_OK
    assert sorted(path.name for path in outDir.iterdir()) == ["meta.csv", "meter.csv"]
    rows = readCsv(outDir / "meter.csv")
    assert rows[0] == METER_HEADER
    assert len(rows) == 1 + 18 * 24
    assert len(readCsv(outDir / "meta.csv")) == 1 + 18


async def test_synth_deterministic(tmp_path):
    for name in ["a", "b"]:
        exitCode = await mainAsync(
            ["synth", "--days", "2", "--seed", "0x2a", "--out", str(tmp_path / name)]
        )
        assert exitCode == EXIT_OK
    assert directoryTreeToList(tmp_path / "a") == directoryTreeToList(tmp_path / "b")


async def test_validate(tmp_path, meterFiles):
    outDir = tmp_path / "out"
    exitCode = await mainAsync(
        ["validate", *inputArguments(meterFiles), "--out", str(outDir)]
    )
    assert exitCode == EXIT_OK
    report = json.loads((outDir / "validation.json").read_text())
    assert report["passed"] is True
    assert [entry["meterId"] for entry in report["meters"]] == [1, 2, 5, 8]


async def test_validate_failure(tmp_path, meterFiles):
    metersPath, metasPath = meterFiles
    rows = readCsv(metersPath)
    # hour 3 of the first meter reports twice the heat
    rows[4][5] = repr(2 * float(rows[4][5]) + 10)
    with open(metersPath, "w", encoding="utf-8", newline="") as file:
        csv.writer(file, lineterminator="\n").writerows(rows)

    outDir = tmp_path / "out"
    exitCode = await mainAsync(
        ["validate", *inputArguments(meterFiles), "--out", str(outDir)]
    )
    assert exitCode == EXIT_VALIDATION
    report = json.loads((outDir / "validation.json").read_text())
    assert report["passed"] is False
    assert report["meters"][0]["violations"] == 1
    assert report["meters"][0]["violationHours"] == [3]

    # run refuses the data too, and leaves the report behind
    runDir = tmp_path / "run"
    exitCode = await mainAsync(
        ["run", *inputArguments(meterFiles), "--out", str(runDir)]
    )
    assert exitCode == EXIT_VALIDATION
    assert sorted(path.name for path in runDir.iterdir()) == ["validation.json"]


async def test_validate_fills_gaps(tmp_path, meterFiles):
    metersPath, _ = meterFiles
    rows = readCsv(metersPath)
    rows[10][2] = ""
    with open(metersPath, "w", encoding="utf-8", newline="") as file:
        csv.writer(file, lineterminator="\n").writerows(rows)
    outDir = tmp_path / "out"
    exitCode = await mainAsync(
        ["validate", *inputArguments(meterFiles), "--out", str(outDir)]
    )
    assert exitCode == EXIT_OK
    report = json.loads((outDir / "validation.json").read_text())
    assert report["meters"][0]["gapsFilled"] == 1


async def test_run(tmp_path, meterFiles):
    outDir = tmp_path / "out"
    exitCode = await mainAsync(
        [
            "run",
            *inputArguments(meterFiles),
            "--out",
            str(outDir),
            "--strategy",
            "original",
            "--strategy",
            "ls",
            "--strategy",
            "fl20",
            "--strategy",
            "tl+ls20",
            "--alpha",
            "0.1,0.2",
            "--top-hours",
            "5",
            "--supply-temp-max",
            "110",
        ]
    )
    assert exitCode == EXIT_OK
    labels = ["original", "ls10", "ls20", "fl20", "tl+ls20"]
    assert sorted(path.name for path in outDir.iterdir()) == sorted(
        [
            "altered_fl20.csv",
            "altered_ls10.csv",
            "altered_ls20.csv",
            "altered_tl+ls20.csv",
            "daily_profiles.csv",
            "duration_curves.csv",
            "duration_curves_top.csv",
            "loads.csv",
            "metrics.json",
        ]
    )

    curves = readCsv(outDir / "duration_curves.csv")
    assert curves[0] == ["hour"] + labels
    assert len(curves) == 1 + 48
    assert readCsv(outDir / "duration_curves_top.csv") == curves[:6]
    for column in range(1, len(labels) + 1):
        values = [float(row[column]) for row in curves[1:]]
        assert values == sorted(values, reverse=True)

    metrics = json.loads((outDir / "metrics.json").read_text())
    assert list(metrics) == labels
    schema = json.loads(schemaPath.read_text())
    for report in metrics.values():
        assert set(report) == set(schema["MetricsReport"])
    assert metrics["original"]["peakReduction"] == 0
    assert metrics["ls20"]["peakReduction"] >= metrics["ls10"]["peakReduction"] > 0
    assert metrics["fl20"]["peakReduction"] > 0
    assert metrics["ls20"]["heatDeficit"] == pytest.approx(0.0, abs=1e-9)
    assert metrics["tl+ls20"]["weightedReturnTemperature"] < (
        metrics["tl+ls20"]["weightedReturnTemperatureOriginal"]
    )
    assert metrics["ls20"]["additionalHeatCapacity"] > 0

    loads = readCsv(outDir / "loads.csv")
    assert loads[0] == ["meter_id", "mean_heat_kw", "peak_heat_kw"]
    assert [row[0] for row in loads[1:]] == ["1", "2", "5", "8"]
    profiles = readCsv(outDir / "daily_profiles.csv")
    assert len(profiles[0]) == 1 + 24 + 1
    assert len(profiles) == 5

    altered = readCsv(outDir / "altered_ls20.csv")
    assert altered[0] == METER_HEADER
    assert len(altered) == 1 + 4 * 48


async def test_run_deterministic(tmp_path, meterFiles):
    arguments = [
        *inputArguments(meterFiles),
        "--strategy",
        "fl10",
        "--strategy",
        "ls10",
    ]
    for name, jobs in [("serial", "1"), ("parallel", "2")]:
        exitCode = await mainAsync(
            ["run", *arguments, "--jobs", jobs, "--out", str(tmp_path / name)]
        )
        assert exitCode == EXIT_OK
    assert directoryTreeToList(tmp_path / "serial") == directoryTreeToList(
        tmp_path / "parallel"
    )


async def test_run_with_config(tmp_path, meterFiles):
    metersPath, metasPath = meterFiles
    configPath = metersPath.parent / "config.yaml"
    configPath.write_text(
        "input:\n"
        "  meters: meter.csv\n"
        "  metas: meta.csv\n"
        "scenarios: [original, tl]\n"
        "lambdas: [1.5]\n",
        encoding="utf-8",
    )
    outDir = tmp_path / "out"
    exitCode = await mainAsync(
        ["run", "--config", str(configPath), "--out", str(outDir)]
    )
    assert exitCode == EXIT_OK
    metrics = json.loads((outDir / "metrics.json").read_text())
    assert list(metrics) == ["original", "tl"]
    assert list(metrics["tl"]["pumpingRatios"]) == ["1.5"]


async def test_sweep(tmp_path, meterFiles):
    outDir = tmp_path / "out"
    exitCode = await mainAsync(
        [
            "sweep",
            *inputArguments(meterFiles),
            "--alpha",
            "0.1,0.2",
            "--beta",
            "0.1",
            "--out",
            str(outDir),
        ]
    )
    assert exitCode == EXIT_OK
    rows = readCsv(outDir / "sweep.csv")
    assert rows[0] == ["strategy", "parameter", "peak_reduction", "heat_deficit"]
    assert [row[:2] for row in rows[1:]] == [
        ["ls", "0.1"],
        ["ls", "0.2"],
        ["fl", "0.1"],
    ]
    assert float(rows[2][2]) >= float(rows[1][2])


async def test_rank(tmp_path, meterFiles):
    outDir = tmp_path / "out"
    exitCode = await mainAsync(
        [
            "rank",
            *inputArguments(meterFiles),
            "--strategy",
            "fl20",
            "--strategy",
            "tl",
            "--out",
            str(outDir),
        ]
    )
    assert exitCode == EXIT_OK
    included = readCsv(outDir / "included_meters.csv")
    assert included[0] == ["k", "fl20", "tl"]
    assert included[1] == ["0", "0.0", "0.0"]
    assert [row[0] for row in included] == ["k", "0", "1", "2", "3", "4"]

    order = readCsv(outDir / "inclusion_order.csv")
    assert len(order) == 5
    for column in (1, 2):
        assert sorted(int(row[column]) for row in order[1:]) == [1, 2, 5, 8]

    temperatures = readCsv(outDir / "return_temperatures.csv")
    assert [row[0] for row in temperatures[1:]] == ["0", "1", "2", "3", "4"]
    assert temperatures[1][1] == temperatures[1][2]


async def test_rank_zero_flow(tmp_path):
    metersPath = tmp_path / "meter.csv"
    metasPath = tmp_path / "meta.csv"
    metersPath.write_text(
        ",".join(METER_HEADER)
        + "\n"
        + "".join(f"1,{hour},0.0,80.0,60.0,0.0\n" for hour in range(24)),
        encoding="utf-8",
    )
    metasPath.write_text(
        "meter_id,q_max_kw,q_mean_kw,t_rl_mean_c,t_rl_max_c,t_rl_limit_c,"
        "consumer_type\n1,10,5,60,65,55,residential\n",
        encoding="utf-8",
    )
    exitCode = await mainAsync(
        [
            "rank",
            "--meters",
            str(metersPath),
            "--metas",
            str(metasPath),
            "--strategy",
            "fl10",
            "--out",
            str(tmp_path / "out"),
        ]
    )
    assert exitCode == EXIT_STRATEGY


@pytest.mark.parametrize(
    "arguments",
    [
        ["run", "--strategy", "juggle20"],
        ["run", "--alpha", "1.5"],
        ["rank", "--strategy", "tl+ls20"],
        ["run", "--meters", "meter.csv"],
        ["synth", "--days", "0"],
        ["run", "--config", "does-not-exist.yaml"],
    ],
)
async def test_usage_errors(tmp_path, arguments):
    exitCode = await mainAsync([*arguments, "--out", str(tmp_path / "out")])
    assert exitCode == EXIT_USAGE


async def test_missing_input_file(tmp_path):
    exitCode = await mainAsync(
        [
            "validate",
            "--meters",
            str(tmp_path / "nope.csv"),
            "--metas",
            str(tmp_path / "nope-meta.csv"),
            "--out",
            str(tmp_path / "out"),
        ]
    )
    assert exitCode == EXIT_USAGE


async def test_malformed_input(tmp_path):
    metersPath = tmp_path / "meter.csv"
    metasPath = tmp_path / "meta.csv"
    metersPath.write_text("meter,hour\n1,0\n", encoding="utf-8")
    metasPath.write_text("", encoding="utf-8")
    exitCode = await mainAsync(
        [
            "validate",
            "--meters",
            str(metersPath),
            "--metas",
            str(metasPath),
            "--out",
            str(tmp_path / "out"),
        ]
    )
    assert exitCode == EXIT_VALIDATION


@pytest.mark.parametrize("arguments", [[], ["frobnicate"], ["run", "--jobs", "x"]])
async def test_argument_errors(arguments):
    with pytest.raises(SystemExit) as info:
        await mainAsync(arguments)
    assert info.value.code == EXIT_USAGE


def test_command_line(tmp_path):
    result = subprocess.run(
        ["dhflex", "--version"], check=True, capture_output=True, text=True
    )
    assert result.stdout.strip() == __version__

    subprocess.run(
        ["dhflex", "synth", "--days", "1", "--out", str(tmp_path)], check=True
    )
    assert sorted(path.name for path in tmp_path.iterdir()) == [
        "meta.csv",
        "meter.csv",
    ]
    result = subprocess.run(
        ["dhflex", "run", "--strategy", "ls150", "--out", str(tmp_path / "out")]
    )
    assert result.returncode == EXIT_USAGE
