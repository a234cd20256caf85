"""Encoding of cohort records into model input rows."""

from typing import Dict, Sequence, Tuple

import numpy as np
from sklearn.preprocessing import OneHotEncoder

from datamodel.schema import FeatureSchema
from datamodel.table import CohortRecord, CohortTable
from errors import DataValidationError
from preprocess.scaler import StandardScaler


def category_encoder(schema: FeatureSchema) -> OneHotEncoder:
    """One-hot encoder over the full category range of every categorical feature.

    :param schema:
    :return: encoder that rejects category indices outside the schema
    """
    categories = [np.arange(cardinality) for cardinality in schema.cardinalities]
    encoder = OneHotEncoder(
        categories=categories, handle_unknown="error", sparse_output=False, dtype=np.float64
    )
    # explicit categories make fitting data-independent
    return encoder.fit(np.stack([column[:1] for column in categories], axis=1))


def one_hot_block(categorical: np.ndarray, schema: FeatureSchema) -> np.ndarray:
    """One-hot blocks of a (rows, categorical features) index matrix.

    :param categorical:
    :param schema:
    :return: (rows, sum of cardinalities) array
    """
    try:
        return category_encoder(schema).transform(categorical)
    except ValueError as error:
        raise DataValidationError(f"category index outside the schema: {error}") from error


def encode_records(
    records: Sequence[CohortRecord], schema: FeatureSchema, scaler: StandardScaler
) -> np.ndarray:
    """Encode records as scaled continuous values followed by one-hot blocks.

    :param records:
    :param schema:
    :param scaler:
    :return: (records, encoded_dim) array
    """
    if len(scaler.mean) != len(schema.continuous):
        raise DataValidationError(
            f"scaler fitted on {len(scaler.mean)} features, schema has {len(schema.continuous)}"
        )
    encoded = np.zeros((len(records), schema.encoded_dim))
    if not records:
        return encoded
    width = len(schema.continuous)
    encoded[:, :width] = scaler.transform([record.continuous for record in records])
    if schema.categorical:
        categorical = np.array([record.categorical for record in records], dtype=np.int64)
        encoded[:, width:] = one_hot_block(categorical, schema)
    return encoded


def encode(table: CohortTable, scaler: StandardScaler) -> Dict[Tuple[str, int], np.ndarray]:
    """Encode every record of a table, keyed by (patient, day).

    :param table:
    :param scaler: scaler fitted on the training part
    :return: mapping (patient_id, day) -> encoded row
    """
    rows = encode_records(table.records, table.schema, scaler)
    return {
        (record.patient_id, record.day): rows[index]
        for index, record in enumerate(table.records)
    }
