"""Train/validation/test partitioning of a cohort, by day or by patient."""

import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from datamodel.constants import FRACTION_TOLERANCE, SPLIT_BY_PATIENT, SPLIT_BY_TIME, SPLIT_MODES
from datamodel.table import CohortTable
from errors import ConfigError, SplitError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TemporalSplit:
    """The three disjoint parts of a cohort."""

    train: CohortTable
    val: CohortTable
    test: CohortTable
    mode: str = SPLIT_BY_TIME

    def parts(self) -> List[Tuple[str, CohortTable]]:
        """Return the named parts in train, val, test order."""
        return [("train", self.train), ("val", self.val), ("test", self.test)]


def split_boundaries(count: int, fractions: Sequence[float]) -> Tuple[int, int]:
    """Cut points of ``count`` ordered units for the given fractions.

    Cumulative fractions are rounded half up, so 12 units at (0.5, 0.25, 0.25)
    give cut points 6 and 9.
    """
    cumulative = np.cumsum(fractions)
    first = int(math.floor(cumulative[0] * count + 0.5 + FRACTION_TOLERANCE))
    second = int(math.floor(cumulative[1] * count + 0.5 + FRACTION_TOLERANCE))
    return first, second


def validate_fractions(fractions: Sequence[float]) -> Tuple[float, float, float]:
    """Check that the three fractions are positive and sum to one.

    :param fractions:
    :return: tuple of fractions
    """
    if len(fractions) != 3:
        raise ConfigError(f"expected 3 split fractions, got {len(fractions)}")
    if any(fraction <= 0 for fraction in fractions):
        raise ConfigError(f"split fractions must be positive, got {tuple(fractions)}")
    if abs(sum(fractions) - 1.0) > FRACTION_TOLERANCE:
        raise ConfigError(f"split fractions must sum to 1, got {sum(fractions)}")
    return fractions[0], fractions[1], fractions[2]


def split_temporal(
    table: CohortTable,
    mode: str,
    fractions: Sequence[float],
    seed: Optional[int] = None,
) -> TemporalSplit:
    """Partition a cohort by day index or by patient.

    :param table:
    :param mode: "by-time" or "by-patient"
    :param fractions: (train, val, test) fractions
    :param seed: shuffles patients before a by-patient split when given
    :return: TemporalSplit
    """
    validate_fractions(fractions)
    if mode == SPLIT_BY_TIME:
        units = table.days
    elif mode == SPLIT_BY_PATIENT:
        units = table.patients
        if seed is not None:
            order = np.random.default_rng(seed).permutation(len(units))
            units = [units[index] for index in order]
    else:
        raise ConfigError(f"unknown split mode {mode!r}, expected one of {SPLIT_MODES}")

    first, second = split_boundaries(len(units), fractions)
    groups = [set(units[:first]), set(units[first:second]), set(units[second:])]
    for name, group in zip(("train", "val", "test"), groups):
        if not group:
            raise SplitError(
                f"{name} part is empty: {len(units)} units cannot be split as {tuple(fractions)}"
            )

    def key(record):
        return record.day if mode == SPLIT_BY_TIME else record.patient_id

    split = TemporalSplit(
        train=table.subset(lambda record: key(record) in groups[0]),
        val=table.subset(lambda record: key(record) in groups[1]),
        test=table.subset(lambda record: key(record) in groups[2]),
        mode=mode,
    )
    logger.info(
        "split %s: train=%s val=%s test=%s records",
        mode,
        len(split.train),
        len(split.val),
        len(split.test),
    )
    return split
