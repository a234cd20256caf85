"""Assembly of per-day patient graphs into a dynamic graph."""

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Set, Tuple

import numpy as np
from joblib import Parallel, delayed

from datamodel.constants import SPLIT_BY_TIME
from datamodel.schema import FeatureSchema
from datamodel.split import TemporalSplit
from datamodel.table import CohortTable
from errors import DataValidationError
from preprocess.constants import DEFAULT_K
from preprocess.encoding import encode_records
from preprocess.knn import knn_edges
from preprocess.scaler import StandardScaler, fit_scaler

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Snapshot:
    """The patient graph of one day."""

    time: int
    node_ids: Tuple[str, ...]
    features: np.ndarray
    edges: Tuple[Tuple[int, int], ...]
    label: np.ndarray
    label_mask: np.ndarray

    def __post_init__(self):
        """Reject self loops and dangling endpoints."""
        count = len(self.node_ids)
        for src, dst in self.edges:
            if src == dst:
                raise DataValidationError(f"snapshot {self.time}: self loop on node {src}")
            if not (0 <= src < count and 0 <= dst < count):
                raise DataValidationError(
                    f"snapshot {self.time}: edge ({src}, {dst}) outside {count} nodes"
                )

    def out_neighbors(self, node: int) -> List[int]:
        """Destinations of the out-edges of ``node``."""
        return [dst for src, dst in self.edges if src == node]


@dataclass(frozen=True)
class DynamicGraph:
    """Time ordered snapshots with the schema and scaler that produced them."""

    snapshots: Tuple[Snapshot, ...]
    schema: FeatureSchema
    scaler: StandardScaler

    def __post_init__(self):
        """Require strictly increasing snapshot times."""
        times = self.times
        if any(later <= earlier for earlier, later in zip(times, times[1:])):
            raise DataValidationError(f"snapshot times must strictly increase: {times}")

    @property
    def times(self) -> List[int]:
        """Snapshot times in order."""
        return [snapshot.time for snapshot in self.snapshots]

    def snapshot_at(self, time: int) -> Snapshot:
        """Return the snapshot of a given day."""
        for snapshot in self.snapshots:
            if snapshot.time == time:
                return snapshot
        raise KeyError(time)


def build_snapshot(
    table: CohortTable,
    day: int,
    scaler: StandardScaler,
    k: int,
    labeled: Optional[Set[Tuple[str, int]]] = None,
) -> Snapshot:
    """Encode one day of a table and connect its patients.

    :param table:
    :param day:
    :param scaler:
    :param k: neighbours per node
    :param labeled: (patient, day) keys whose label is used, all when omitted
    :return: Snapshot
    """
    records = [record for record in table.records if record.day == day]
    features = encode_records(records, table.schema, scaler)
    continuous = features[:, : len(table.schema.continuous)]
    mask = [labeled is None or (record.patient_id, record.day) in labeled for record in records]
    return Snapshot(
        time=day,
        node_ids=tuple(record.patient_id for record in records),
        features=features,
        edges=tuple(knn_edges(continuous, k)),
        label=np.array([record.target for record in records], dtype=np.float64),
        label_mask=np.array(mask, dtype=bool),
    )


def build_graph(
    table: CohortTable,
    scaler: StandardScaler,
    k: int = DEFAULT_K,
    n_jobs: int = 1,
    labeled: Optional[Set[Tuple[str, int]]] = None,
) -> DynamicGraph:
    """Build one snapshot per day of a table.

    :param table:
    :param scaler: scaler fitted on the training part
    :param k: neighbours per node
    :param n_jobs: parallel snapshot construction when above 1
    :param labeled: (patient, day) keys whose label is used, all when omitted
    :return: DynamicGraph
    """
    days = table.days
    if n_jobs > 1:
        snapshots = Parallel(n_jobs=n_jobs)(
            delayed(build_snapshot)(table, day, scaler, k, labeled) for day in days
        )
    else:
        snapshots = [build_snapshot(table, day, scaler, k, labeled) for day in days]
    return DynamicGraph(tuple(snapshots), table.schema, scaler)


def with_history(split: TemporalSplit) -> List[Tuple[CohortTable, Optional[Set[Tuple[str, int]]]]]:
    """Tables and labelled keys of the three graphs.

    A by-time split prefixes the validation and test parts with every earlier
    day as unlabelled history, so their first day can be predicted. By-patient
    parts are used as they are.

    :param split:
    :return: [(table, labeled keys or None)] for train, val, test
    """
    if split.mode != SPLIT_BY_TIME:
        return [(part, None) for _, part in split.parts()]
    parts = []
    history: Tuple = ()
    for name, part in split.parts():
        keys = {(record.patient_id, record.day) for record in part.records}
        table = CohortTable(part.schema, history + part.records)
        parts.append((table, None if name == "train" else keys))
        history = table.records
    return parts


def build_dynamic_graph(
    split: TemporalSplit, k: int = DEFAULT_K, n_jobs: int = 1
) -> Tuple[DynamicGraph, DynamicGraph, DynamicGraph]:
    """Fit the scaler on train and build the three dynamic graphs.

    :param split:
    :param k: neighbours per node
    :param n_jobs: parallel snapshot construction when above 1
    :return: (train, val, test) graphs
    """
    scaler = fit_scaler(split.train)
    graphs = tuple(
        build_graph(table, scaler, k=k, n_jobs=n_jobs, labeled=labeled)
        for table, labeled in with_history(split)
    )
    logger.info(
        "built dynamic graphs with %s/%s/%s snapshots (k=%s)",
        *(len(graph.snapshots) for graph in graphs),
        k,
    )
    return graphs[0], graphs[1], graphs[2]


def write_graph_jsonl(graph: DynamicGraph, path: Path) -> Path:
    """Write one json line per snapshot.

    :param graph:
    :param path:
    :return: the written path
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as handle:
        for snapshot in graph.snapshots:
            line = {
                "t": snapshot.time,
                "nodes": list(snapshot.node_ids),
                "x": snapshot.features.tolist(),
                "edges": [list(edge) for edge in snapshot.edges],
                "y": snapshot.label.tolist(),
                "mask": snapshot.label_mask.tolist(),
            }
            handle.write(json.dumps(line) + "\n")
    return path


def read_graph_jsonl(
    path: Path, schema: FeatureSchema, scaler: StandardScaler
) -> DynamicGraph:
    """Read a graph written by ``write_graph_jsonl``.

    :param path:
    :param schema:
    :param scaler:
    :return: DynamicGraph
    """
    snapshots = []
    with Path(path).open(encoding="utf-8") as handle:
        for line in handle:
            if not line.strip():
                continue
            data: Dict = json.loads(line)
            snapshots.append(
                Snapshot(
                    time=int(data["t"]),
                    node_ids=tuple(str(node) for node in data["nodes"]),
                    features=np.array(data["x"], dtype=np.float64).reshape(
                        len(data["nodes"]), schema.encoded_dim
                    ),
                    edges=tuple((int(src), int(dst)) for src, dst in data["edges"]),
                    label=np.array(data["y"], dtype=np.float64),
                    label_mask=np.array(data["mask"], dtype=bool),
                )
            )
    return DynamicGraph(tuple(snapshots), schema, scaler)
