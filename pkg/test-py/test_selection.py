import numpy as np
import pytest
from testSupport import makeDataset, makeMeter, syntheticDataset, unitConstants

from dhflex.core.classes import Constants, DegenerateInput
from dhflex.core.heat import aggregateFlow
from dhflex.selection import evaluateInclusion, greedyRank
from dhflex.strategies.flowlimit import FlowLimit
from dhflex.strategies.loadshift import LoadShift
from dhflex.strategies.returntemp import ReturnTempLimit


@pytest.fixture
def twoMeters():
    return makeDataset(makeMeter(1, [10, 4]), makeMeter(2, [2, 8]))


def test_evaluate_inclusion(twoMeters):
    strategy = FlowLimit(beta=0.2)
    peak, returnTemperature = evaluateInclusion(twoMeters, strategy, [1], unitConstants)
    assert peak == pytest.approx(14.0)
    assert returnTemperature == pytest.approx(50.0)
    peak, _ = evaluateInclusion(twoMeters, strategy, [2], unitConstants)
    assert peak == pytest.approx(12.0)
    # the strategy itself is left alone
    assert strategy.included is None


def test_greedy_flow_limit_trace(twoMeters):
    curve = greedyRank(twoMeters, FlowLimit(beta=0.2), unitConstants)
    assert curve.order == [2, 1]
    assert curve.baselinePeak == pytest.approx(12.0)
    # with both meters capped the aggregate is [10, 12.4]
    assert curve.reduction == pytest.approx([0.0, 1 - 12.4 / 12])
    assert curve.returnTemperatures == pytest.approx([50.0, 50.0, 50.0])


def test_greedy_tie_goes_to_lowest_id():
    dataset = makeDataset(makeMeter(3, [5, 1]), makeMeter(1, [5, 1]))
    curve = greedyRank(dataset, FlowLimit(beta=0.2), unitConstants)
    assert curve.order == [1, 3]


def test_greedy_candidates(twoMeters):
    curve = greedyRank(twoMeters, FlowLimit(beta=0.2), unitConstants, candidates=[1])
    assert curve.order == [1]
    assert curve.reduction == pytest.approx([1 - 14 / 12])
    assert len(curve.returnTemperatures) == 2


def test_greedy_zero_baseline():
    dataset = makeDataset(makeMeter(1, [0, 0]))
    with pytest.raises(DegenerateInput):
        greedyRank(dataset, FlowLimit(beta=0.2), unitConstants)


def test_greedy_alpha_zero():
    dataset = syntheticDataset(days=1, meterIds={1, 2, 3})
    curve = greedyRank(dataset, LoadShift(alpha=0.0), Constants())
    assert curve.order == [1, 2, 3]
    assert curve.reduction == pytest.approx([0.0, 0.0, 0.0], abs=1e-12)


def test_greedy_return_temperatures():
    dataset = makeDataset(
        makeMeter(1, [4.0], deltaT=20, tReturn=60),
        makeMeter(2, [4.0], deltaT=20, tReturn=50),
    )
    curve = greedyRank(dataset, ReturnTempLimit(), unitConstants)
    assert len(curve.returnTemperatures) == 3
    assert curve.returnTemperatures[0] == pytest.approx(55.0)
    # meter 1 is the only one above its limit
    assert curve.order[0] == 1
    assert curve.returnTemperatures[-1] < curve.returnTemperatures[0]


@pytest.mark.parametrize("strategy", [LoadShift(alpha=0.2), FlowLimit(beta=0.1)])
def test_greedy_against_exhaustive(strategy):
    dataset = syntheticDataset(days=2, meterIds={1, 4, 7, 12})
    constants = Constants()
    curve = greedyRank(dataset, strategy, constants)
    assert sorted(curve.order) == [1, 4, 7, 12]
    assert len(curve.returnTemperatures) == 5

    # each prefix reproduces its recorded reduction
    for k in range(1, 5):
        peak, returnTemperature = evaluateInclusion(
            dataset, strategy, curve.order[:k], constants
        )
        assert 1 - peak / curve.baselinePeak == pytest.approx(
            curve.reduction[k - 1], abs=1e-9
        )
        assert returnTemperature == pytest.approx(curve.returnTemperatures[k])

    # the first pick is the best single meter
    singles = {
        meterId: evaluateInclusion(dataset, strategy, [meterId], constants)[0]
        for meterId in dataset.meterIds
    }
    assert singles[curve.order[0]] == pytest.approx(min(singles.values()))

    # every meter included is the same as the strategy applied to all
    full = strategy.apply(dataset, constants)
    assert curve.reduction[-1] == pytest.approx(
        1 - aggregateFlow(full.dataset).max() / curve.baselinePeak, abs=1e-9
    )


def test_greedy_load_shift_reduction_grows():
    # the reduction never drops as meters are added
    dataset = syntheticDataset(days=2, meterIds={1, 2, 3, 5, 8})
    curve = greedyRank(dataset, LoadShift(alpha=0.2), Constants())
    assert len(curve.order) == 5
    assert curve.reduction[0] > 0
    for previous, current in zip(curve.reduction, curve.reduction[1:]):
        assert current >= previous - 1e-9


def test_greedy_parallel_matches_serial():
    dataset = syntheticDataset(days=1, meterIds={2, 3, 5})
    strategy = FlowLimit(beta=0.2)
    serial = greedyRank(dataset, strategy, Constants())
    parallel = greedyRank(dataset, strategy, Constants(), jobs=2)
    assert parallel.order == serial.order
    assert parallel.reduction == serial.reduction
    assert np.allclose(parallel.returnTemperatures, serial.returnTemperatures)
