import numpy as np

from .classes import HOURS_PER_DAY, Constants, Dataset


def heatFromFlow(flow, deltaT, constants: Constants):
    """Heat load in kW for a volume flow in m³/h and a temperature spread in °C.

    Works element-wise on numpy arrays. A negative spread yields negative heat;
    whether that is acceptable is up to the caller.
    """
    return constants.rhoCp * deltaT * flow


def flowFromHeat(heat, deltaT, constants: Constants):
    return heat / (constants.rhoCp * deltaT)


def aggregateFlow(dataset: Dataset) -> np.ndarray:
    total = np.zeros(dataset.hours)
    for meter in dataset.meters:
        total = total + meter.flow
    return total


def totalHeat(dataset: Dataset) -> float:
    return float(sum(meter.heat.sum() for meter in dataset.meters))


def dailySlices(series: np.ndarray) -> np.ndarray:
    return np.asarray(series).reshape(-1, HOURS_PER_DAY)
