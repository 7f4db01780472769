import pytest
from testSupport import syntheticDataset

from dhflex.backends.meterdata import writeDataset


@pytest.fixture(scope="session")
def smallDataset():
    return syntheticDataset(days=2, seed=11, meterIds={1, 2, 5, 8})


@pytest.fixture
def meterFiles(tmp_path, smallDataset):
    metersPath = tmp_path / "input" / "meter.csv"
    metasPath = tmp_path / "input" / "meta.csv"
    metersPath.parent.mkdir()
    writeDataset(smallDataset, metersPath, metasPath)
    return metersPath, metasPath
