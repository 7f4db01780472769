import numpy as np
import pytest
from testSupport import makeDataset, makeMeta, makeMeter, unitConstants

from dhflex.backends.meterdata import (
    MAX_REPORTED_HOURS,
    META_HEADER,
    METER_HEADER,
    BadHorizon,
    DuplicateRow,
    IngestError,
    MissingMeta,
    ParseError,
    UnfillableSeries,
    fillGaps,
    fillMeterGaps,
    parseDataset,
    parseMetas,
    readDataset,
    serializeDataset,
    validate,
    writeDataset,
)
from dhflex.core.classes import ConsumerType

metaText = (
    ",".join(META_HEADER)
    + "\n"
    + "1,100,50,50,70,55,residential\n"
    + "2,200.5,80,45,60,50,Commercial\n"
)


def meterRows(meterId, hours, flow=2.0, tSupply=80.0, tReturn=60.0, heat=40.0):
    return "".join(
        f"{meterId},{hour},{flow},{tSupply},{tReturn},{heat}\n" for hour in hours
    )


def meterText(*chunks):
    return ",".join(METER_HEADER) + "\n" + "".join(chunks)


def test_parse_metas():
    metas = parseMetas(metaText)
    assert sorted(metas) == [1, 2]
    assert metas[2].qMax == 200.5
    assert metas[2].consumerType is ConsumerType.COMMERCIAL


def test_parse_dataset():
    dataset = parseDataset(
        meterText(meterRows(2, range(24)), meterRows(1, range(24), flow=1.5)),
        metaText,
    )
    assert dataset.meterIds == [1, 2]
    assert dataset.hours == 24
    assert dataset.getMeter(1).flow.tolist() == [1.5] * 24
    assert dataset.getMeter(2).deltaT.tolist() == [20.0] * 24


def test_parse_bytes_with_bom():
    data = ("\ufeff" + meterText(meterRows(1, range(24)))).encode("utf-8")
    dataset = parseDataset(data, metaText.encode("utf-8"))
    assert dataset.meterIds == [1]


def test_parse_gaps():
    text = meterText(
        meterRows(1, range(0, 5)),
        "1,5,,80,60,40\n",
        meterRows(1, range(7, 24)),
    )
    dataset = parseDataset(text, metaText)
    meter = dataset.getMeter(1)
    assert np.isnan(meter.flow[5])
    # hour 6 is missing from the file entirely
    assert np.isnan(meter.heat[6]) and np.isnan(meter.tReturn[6])
    assert meter.gapCount() == 5


@pytest.mark.parametrize(
    "text, exception, message",
    [
        ("id,hour\n", ParseError, "expected header"),
        ("", ParseError, "expected header"),
        (meterText("1,0,2,80,60\n"), ParseError, "line 2"),
        (meterText("1,0,x,80,60,40\n"), ParseError, "bad number"),
        (meterText("1,zero,2,80,60,40\n"), ParseError, "bad integer"),
        (meterText("1,-1,2,80,60,40\n"), ParseError, "negative hour"),
        (meterText(meterRows(1, [0, 1, 1])), DuplicateRow, "hour 1"),
        (meterText(meterRows(1, range(25))), BadHorizon, "25 hours"),
        (meterText(meterRows(3, range(24))), MissingMeta, r"\[3\]"),
    ],
)
def test_parse_errors(text, exception, message):
    with pytest.raises(exception, match=message):
        parseDataset(text, metaText)


def test_parse_error_line():
    with pytest.raises(ParseError) as info:
        parseDataset(meterText(meterRows(1, range(3)), "1,3,2,80\n"), metaText)
    assert info.value.line == 5


@pytest.mark.parametrize(
    "row, exception",
    [
        ("1,100,50,50,70,55,residential\n", DuplicateRow),
        ("3,10,50,50,70,55,residential\n", ParseError),
        ("3,100,50,50,70,55,hospital\n", ParseError),
    ],
)
def test_parse_meta_errors(row, exception):
    with pytest.raises(exception):
        parseMetas(metaText + row)
    assert issubclass(exception, IngestError)


def test_fill_heat_from_identity():
    meter = makeMeter(1, [2.0, 3.0, 4.0], deltaT=10).replaceSeries(
        heat=[20.0, np.nan, 40.0] + [0.0] * 21
    )
    filled = fillMeterGaps(meter, unitConstants)
    assert filled.heat[1] == pytest.approx(30.0)


def test_fill_flow_from_identity():
    meter = makeMeter(1, [2.0, 3.0, 4.0], deltaT=10).replaceSeries(
        flow=[2.0, np.nan, 4.0] + [0.0] * 21, heat=[20.0, 36.0, 40.0] + [0.0] * 21
    )
    filled = fillMeterGaps(meter, unitConstants)
    assert filled.flow[1] == pytest.approx(3.6)


def test_fill_flow_small_spread_interpolates():
    meter = makeMeter(1, [2.0, 3.0, 4.0], deltaT=[10, 0.5, 10]).replaceSeries(
        flow=[2.0, np.nan, 4.0] + [0.0] * 21
    )
    filled = fillMeterGaps(meter, unitConstants)
    assert filled.flow[1] == pytest.approx(3.0)


def test_fill_interpolation_and_edges():
    tReturn = np.full(24, 50.0)
    tReturn[[0, 1, 5, 23]] = np.nan
    tReturn[4] = 56.0
    meter = makeMeter(1, [1.0] * 24, deltaT=20).replaceSeries(tReturn=tReturn)
    filled = fillMeterGaps(meter, unitConstants)
    assert filled.tReturn[0] == 50.0 and filled.tReturn[1] == 50.0
    assert filled.tReturn[5] == pytest.approx(53.0)
    assert filled.tReturn[23] == 50.0
    assert filled.gapCount() == 0


def test_fill_unfillable():
    meter = makeMeter(1, [1.0] * 24).replaceSeries(tSupply=[np.nan] * 24)
    with pytest.raises(UnfillableSeries, match="tSupply") as info:
        fillMeterGaps(meter, unitConstants)
    assert info.value.meterId == 1


def test_fill_gaps_report():
    gappy = makeMeter(1, [2.0] * 24, deltaT=10).replaceSeries(
        heat=[np.nan, np.nan] + [20.0] * 22
    )
    complete = makeMeter(2, [1.0] * 24)
    dataset = makeDataset(gappy, complete)
    filled, report = fillGaps(dataset, unitConstants)
    assert report.gapCounts() == {1: 2, 2: 0}
    assert filled.getMeter(2) is complete
    assert filled.getMeter(1).heat[:2].tolist() == [20.0, 20.0]


def _gappyMeter(meterId, rng):
    meter = makeMeter(
        meterId,
        rng.uniform(0.5, 20, size=48),
        deltaT=rng.uniform(5, 40, size=48),
        tReturn=rng.uniform(35, 65, size=48),
    )
    series = {}
    for name in ("flow", "tSupply", "tReturn", "heat"):
        values = getattr(meter, name).copy()
        gaps = rng.random(len(values)) < 0.3
        gaps[rng.integers(len(values))] = False
        values[gaps] = np.nan
        series[name] = values
    return meter.replaceSeries(**series)


@pytest.mark.parametrize("seed", range(10))
def test_fill_gaps_keeps_known_values(seed):
    rng = np.random.default_rng(seed)
    dataset = makeDataset(*[_gappyMeter(meterId, rng) for meterId in (1, 2, 3)])
    filled, _ = fillGaps(dataset, unitConstants)
    for before, after in zip(dataset.meters, filled.meters):
        assert after.gapCount() == 0
        for name in ("flow", "tSupply", "tReturn", "heat"):
            original = getattr(before, name)
            known = ~np.isnan(original)
            np.testing.assert_array_equal(getattr(after, name)[known], original[known])


@pytest.mark.parametrize("seed", range(10))
def test_fill_gaps_idempotent(seed):
    rng = np.random.default_rng(seed)
    dataset = makeDataset(*[_gappyMeter(meterId, rng) for meterId in (1, 2, 3)])
    filled, _ = fillGaps(dataset, unitConstants)
    refilled, report = fillGaps(filled, unitConstants)
    assert report.gapCounts() == {1: 0, 2: 0, 3: 0}
    for once, twice in zip(filled.meters, refilled.meters):
        for name in ("flow", "tSupply", "tReturn", "heat"):
            np.testing.assert_array_equal(getattr(twice, name), getattr(once, name))


def test_validate_passes():
    dataset = makeDataset(makeMeter(1, [1, 2, 3], deltaT=10), makeMeter(2, [5]))
    report = validate(dataset, unitConstants, gapsFilled={2: 3})
    assert report.passed
    assert [entry.meterId for entry in report.meters] == [1, 2]
    assert report.meters[1].gapsFilled == 3
    assert report.meters[0].maxRelativeError == pytest.approx(0.0)


@pytest.mark.parametrize(
    "heat, passed",
    [
        (100.0, True),
        (150.0, True),
        (67.0, True),
        (66.0, False),
    ],
)
def test_validate_relative_tolerance(heat, passed):
    # flow and spread give 100 kW; the tolerance is half the recorded heat
    meter = makeMeter(1, [10.0], deltaT=10).replaceSeries(
        heat=[heat] + [0.0] * 23
    )
    report = validate(makeDataset(meter), unitConstants, relTol=0.5, absTol=0.5)
    assert report.passed == passed
    assert report.meters[0].maxRelativeError == pytest.approx(abs(heat - 100) / heat)


def test_validate_absolute_tolerance():
    meter = makeMeter(1, [0.1], deltaT=1).replaceSeries(heat=[0.5] + [0.0] * 23)
    report = validate(makeDataset(meter), unitConstants, relTol=0.02, absTol=0.5)
    assert report.passed


def test_validate_violations():
    flow = [1.0] * 200 + [-1.0] + [1.0] * 15
    meter = makeMeter(1, flow, deltaT=10).replaceSeries(
        heat=[0.0] * 150 + [10.0] * 66
    )
    report = validate(makeDataset(meter), unitConstants)
    entry = report.meters[0]
    assert not report.passed
    assert entry.violations == 151
    assert len(entry.violationHours) == MAX_REPORTED_HOURS
    assert entry.violationHours[:3] == [0, 1, 2]


def test_validate_no_spread_with_flow():
    meter = makeMeter(1, [1.0], deltaT=0.0).replaceSeries(heat=[0.4] + [0.0] * 23)
    report = validate(makeDataset(meter), unitConstants)
    assert report.meters[0].violations == 1


def test_round_trip(tmp_path):
    meters = [
        makeMeter(1, [1.25, 2.0, 0.1], deltaT=[20, 25.5, 30], tReturn=55.5),
        makeMeter(4, [0.5], deltaT=12),
    ]
    metas = {
        1: makeMeta(1, qMax=123.4),
        4: makeMeta(4, consumerType="industrial"),
    }
    dataset = makeDataset(*meters, metas=metas)
    metersPath = tmp_path / "meter.csv"
    metasPath = tmp_path / "meta.csv"
    writeDataset(dataset, metersPath, metasPath)
    loaded = readDataset(metersPath, metasPath)
    assert loaded == dataset
    assert serializeDataset(loaded) == serializeDataset(dataset)
    assert metersPath.read_text().splitlines()[1] == "1,0,1.25,75.5,55.5,25.0"
    assert metasPath.read_text().splitlines()[2] == (
        "4,100.0,50.0,50.0,70.0,55.0,industrial"
    )


def test_write_meters_only(tmp_path):
    dataset = makeDataset(makeMeter(1, [1.0]))
    writeDataset(dataset, tmp_path / "altered.csv")
    assert sorted(path.name for path in tmp_path.iterdir()) == ["altered.csv"]
