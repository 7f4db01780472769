import threading

import pytest

from dhflex.core.threading import parallelMap, runInThread


async def test_runInThread():
    mainThread = threading.current_thread()
    result = await runInThread(lambda a, b: (a + b, threading.current_thread()), 2, 3)
    assert result[0] == 5
    assert result[1] is not mainThread


@pytest.mark.parametrize("jobs", [None, 1, 2, 4])
def test_parallelMap_keeps_order(jobs):
    items = [-5, 3, -1, 8, 0, -13]
    assert parallelMap(abs, items, jobs=jobs) == [5, 3, 1, 8, 0, 13]


def test_parallelMap_empty():
    assert parallelMap(abs, [], jobs=3) == []


def test_parallelMap_propagates_errors():
    with pytest.raises(TypeError):
        parallelMap(abs, [1, "x"], jobs=2)
