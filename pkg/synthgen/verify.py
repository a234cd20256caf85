"""Check that a generated cohort still carries its planted mechanisms."""

import logging
from dataclasses import dataclass, field
from typing import Dict, List

import numpy as np

from datamodel.table import CohortTable
from errors import DataValidationError
from synthgen.constants import MIN_R2, SHIFT_LABEL, ZERO_BETA_TOLERANCE
from synthgen.generator import PlantedAnnotation, peer_means

logger = logging.getLogger(__name__)


@dataclass
class PlantingReport:
    """Per-environment variant correlations and the fit of the invariant mechanism."""

    correlations: Dict[str, Dict[str, float]]
    r2: float
    flags: List[str] = field(default_factory=list)
    label: str = SHIFT_LABEL

    @property
    def ok(self) -> bool:
        """True when no flag was raised."""
        return not self.flags

    def to_dict(self) -> Dict:
        """Serialize for json output."""
        return {
            "correlations": self.correlations,
            "r2": self.r2,
            "flags": list(self.flags),
            "label": self.label,
        }


def standardized_columns(table: CohortTable, annotation: PlantedAnnotation) -> Dict[str, np.ndarray]:
    """Continuous columns mapped to standardized units with the annotation ranges."""
    columns = {}
    for position, name in enumerate(table.schema.continuous_names):
        mean, std = annotation.feature_ranges.get(name, (0.0, 1.0))
        values = np.array([record.continuous[position] for record in table.records])
        columns[name] = (values - mean) / std
    return columns


def check_annotation(table: CohortTable, annotation: PlantedAnnotation) -> None:
    """Raise when the annotation does not describe the table."""
    schema = table.schema
    known = set(schema.feature_names)
    missing = [name for name in annotation.invariant + annotation.variant if name not in known]
    if missing:
        raise DataValidationError(f"annotation names features absent from the table: {missing}")
    envs = {record.env for record in table.records}
    if None in envs:
        raise DataValidationError("table records carry no environment tags")
    unknown = sorted(envs - set(annotation.beta))
    if unknown:
        raise DataValidationError(f"environments {unknown} have no beta in the annotation")
    if len(annotation.weights) != len(
        [name for name in annotation.invariant if name in schema.continuous_names]
    ):
        raise DataValidationError("annotation weights do not match the invariant block")


def invariant_r2(table: CohortTable, annotation: PlantedAnnotation, columns: Dict[str, np.ndarray]) -> float:
    """R2 of an OLS fit of the target on the lagged invariant block and the peer mean.

    :param table:
    :param annotation:
    :param columns: standardized continuous columns
    :return: coefficient of determination
    """
    schema = table.schema
    continuous_invariant = [name for name in annotation.invariant if name in schema.continuous_names]
    weights = np.asarray(annotation.weights)
    row_of = {(record.patient_id, record.day): row for row, record in enumerate(table.records)}
    tied_column = None
    if annotation.tied_categorical:
        tied_column = schema.categorical_names.index(annotation.tied_categorical)

    peer_of = {}
    for day in table.days:
        rows = [row for row, record in enumerate(table.records) if record.day == day]
        block = np.stack([columns[name][rows] for name in continuous_invariant], axis=1)
        peers = peer_means(block, block @ weights, annotation.k_peers)
        for row, peer in zip(rows, peers):
            peer_of[row] = peer

    design, response = [], []
    target = columns[schema.target]
    for row, record in enumerate(table.records):
        previous = row_of.get((record.patient_id, record.day - 1))
        if previous is None:
            continue
        line = [1.0] + [columns[name][previous] for name in continuous_invariant]
        line.append(peer_of[previous])
        if tied_column is not None:
            line.append(float(record.categorical[tied_column]))
        design.append(line)
        response.append(target[row])
    if not design or len(response) < len(design[0]):
        raise DataValidationError("too few lagged records to fit the invariant mechanism")

    design_matrix = np.asarray(design)
    response_vector = np.asarray(response)
    coefficients, *_ = np.linalg.lstsq(design_matrix, response_vector, rcond=None)
    residual = response_vector - design_matrix @ coefficients
    total = np.sum((response_vector - response_vector.mean()) ** 2)
    if total == 0:
        return 1.0 if np.allclose(residual, 0) else 0.0
    return float(1.0 - np.sum(residual**2) / total)


def next_day_targets(table: CohortTable, target: np.ndarray) -> np.ndarray:
    """Target of the same patient on the following day, NaN where that day is absent."""
    row_of = {(record.patient_id, record.day): row for row, record in enumerate(table.records)}
    following = np.full(len(table.records), np.nan)
    for row, record in enumerate(table.records):
        successor = row_of.get((record.patient_id, record.day + 1))
        if successor is not None:
            following[row] = target[successor]
    return following


def verify_planting(
    table: CohortTable,
    annotation: PlantedAnnotation,
    min_r2: float = MIN_R2,
    zero_beta_tolerance: float = ZERO_BETA_TOLERANCE,
) -> PlantingReport:
    """Measure the planted correlations and flag those that disagree with the annotation.

    Variant features are correlated with the next-day target, the label their
    snapshot predicts. Environments with beta 0 are flagged only when that
    correlation is larger than ``zero_beta_tolerance`` in absolute value.

    :param table: cohort produced by ``generate_cohort``
    :param annotation: its annotation
    :param min_r2: smallest acceptable fit of the invariant mechanism
    :param zero_beta_tolerance: largest acceptable absolute correlation where beta is 0
    :return: PlantingReport
    """
    check_annotation(table, annotation)
    columns = standardized_columns(table, annotation)
    target = next_day_targets(table, columns[table.schema.target])
    envs = np.array([record.env for record in table.records])

    correlations: Dict[str, Dict[str, float]] = {}
    flags = []
    for env, beta in annotation.beta.items():
        rows = (envs == env) & np.isfinite(target)
        if rows.sum() < 2:
            continue
        correlations[env] = {}
        for name in annotation.variant:
            values = columns[name][rows]
            if np.std(values) == 0 or np.std(target[rows]) == 0:
                correlation = 0.0
            else:
                correlation = float(np.corrcoef(values, target[rows])[0, 1])
            correlations[env][name] = correlation
            if beta == 0:
                if abs(correlation) > zero_beta_tolerance:
                    flags.append(
                        f"{env}: correlation of {name} with the target is {correlation:+.3f}, "
                        f"beta is 0"
                    )
            elif np.sign(correlation) != np.sign(beta):
                flags.append(
                    f"{env}: correlation of {name} with the target is {correlation:+.3f}, "
                    f"beta is {beta:+.3f}"
                )

    r2 = invariant_r2(table, annotation, columns)
    if r2 < min_r2:
        flags.append(f"invariant mechanism R2 {r2:.3f} below {min_r2}")
    for flag in flags:
        logger.warning("planting check: %s", flag)
    return PlantingReport(correlations=correlations, r2=r2, flags=flags)
