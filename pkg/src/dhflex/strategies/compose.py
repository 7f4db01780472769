from __future__ import annotations

import logging
from typing import Sequence

from ..core.classes import Constants, Dataset, StrategyKind, StrategyOutcome
from . import StrategyProtocol

logger = logging.getLogger(__name__)


def compose(
    dataset: Dataset, stages: Sequence[StrategyProtocol], constants: Constants
) -> StrategyOutcome:
    """Apply `stages` left to right, each on the previous stage's result.

    The outcome carries the stage labels in `chain`, the union of the meters
    any stage touched, and the level parameters of the last stage that has
    them. An empty stage list returns the input unchanged.
    """
    current = dataset
    included: frozenset[int] = frozenset()
    alpha = beta = None
    dailyPeaks = totalShift = None
    remainingDeficit = expiredDeficit = None
    for stage in stages:
        logger.debug(f"applying stage {stage.label}")
        outcome = stage.apply(current, constants)
        current = outcome.dataset
        included |= outcome.included
        if outcome.alpha is not None:
            alpha = outcome.alpha
            dailyPeaks = outcome.dailyPeaks
            totalShift = outcome.totalShift
        if outcome.beta is not None:
            beta = outcome.beta
            remainingDeficit = outcome.remainingDeficit
            expiredDeficit = outcome.expiredDeficit

    return StrategyOutcome(
        dataset=current,
        strategy=StrategyKind.COMPOSITE,
        alpha=alpha,
        beta=beta,
        included=included,
        chain=tuple(stage.label for stage in stages),
        dailyPeaks=dailyPeaks,
        totalShift=totalShift,
        remainingDeficit=remainingDeficit,
        expiredDeficit=expiredDeficit,
    )
