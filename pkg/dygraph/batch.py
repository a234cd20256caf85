"""Dense tensor view of a dynamic graph and its dynamic neighbourhoods.

Node states live in a flat (time * node) layout: position ``ti * N + n`` holds
node ``n`` at the ``ti``-th snapshot. Absent (node, time) cells are kept and
masked by ``presence``.
"""

from dataclasses import dataclass
from typing import Dict, List, Tuple, Union

import numpy as np
import torch

from dygraph.constants import WINDOW_ALL
from errors import DataValidationError
from preprocess.graph import DynamicGraph


def window_start(time: int, window: Union[int, str]) -> int:
    """First time step inside the history window ending at ``time``."""
    if window == WINDOW_ALL:
        return 1
    return max(1, time - int(window) + 1)


def dynamic_neighborhood(
    graph: DynamicGraph, node: str, time: int, window: Union[int, str] = WINDOW_ALL
) -> List[Tuple[str, int]]:
    """List the (neighbour, time) pairs a node attends to.

    Every out-neighbour of ``node`` in each snapshot of the window, followed by
    the node itself at ``time``.

    :param graph:
    :param node: patient id
    :param time: snapshot time
    :param window: number of snapshots spanned, or "all"
    :return: list of (patient id, time)
    """
    try:
        current = graph.snapshot_at(time)
    except KeyError:
        raise DataValidationError(f"no snapshot at time {time}") from None
    if node not in current.node_ids:
        raise DataValidationError(f"node {node!r} is absent at time {time}")
    start = window_start(time, window)
    pairs = []
    for snapshot in graph.snapshots:
        if not start <= snapshot.time <= time or node not in snapshot.node_ids:
            continue
        source = snapshot.node_ids.index(node)
        pairs.extend(
            (snapshot.node_ids[dst], snapshot.time) for dst in snapshot.out_neighbors(source)
        )
    pairs.append((node, time))
    return pairs


@dataclass
class GraphTensors:
    """Everything the model reads from a dynamic graph, as tensors."""

    node_ids: List[str]
    times: torch.Tensor
    features: torch.Tensor
    presence: torch.Tensor
    query_index: torch.Tensor
    key_index: torch.Tensor
    target_source: torch.Tensor
    target_label: torch.Tensor
    target_time: np.ndarray
    target_node: List[str]
    target_mean: float = 0.0
    target_std: float = 1.0

    @property
    def scaled_labels(self) -> torch.Tensor:
        """Labels in the standardized units the model is trained in."""
        return (self.target_label - self.target_mean) / self.target_std

    def unscale(self, predictions: torch.Tensor) -> torch.Tensor:
        """Map standardized predictions back to measurement units."""
        return predictions * self.target_std + self.target_mean

    @property
    def n_times(self) -> int:
        """Number of snapshots."""
        return int(self.times.shape[0])

    @property
    def n_nodes(self) -> int:
        """Number of distinct nodes across all snapshots."""
        return len(self.node_ids)

    @property
    def n_positions(self) -> int:
        """Size of the flat (time * node) layout."""
        return self.n_times * self.n_nodes

    def locate(self, position: int) -> Tuple[str, int]:
        """Map a flat position back to (node id, time)."""
        time_index, node_index = divmod(int(position), self.n_nodes)
        return self.node_ids[node_index], int(self.times[time_index].item())

    @classmethod
    def from_graph(
        cls,
        graph: DynamicGraph,
        window: Union[int, str] = WINDOW_ALL,
        dtype: torch.dtype = torch.float64,
    ) -> "GraphTensors":
        """Tensorize a dynamic graph.

        :param graph:
        :param window: history window of the dynamic neighbourhood
        :param dtype: floating point type of features and labels
        :return: GraphTensors
        """
        if len(graph.snapshots) < 2:
            raise DataValidationError("a dynamic graph needs at least 2 snapshots")
        node_ids = list(
            dict.fromkeys(node for snapshot in graph.snapshots for node in snapshot.node_ids)
        )
        column: Dict[str, int] = {node: index for index, node in enumerate(node_ids)}
        n_times, n_nodes = len(graph.snapshots), len(node_ids)
        width = graph.schema.encoded_dim

        features = np.zeros((n_times, n_nodes, width))
        presence = np.zeros((n_times, n_nodes), dtype=bool)
        out_edges: List[Dict[int, List[int]]] = []
        for time_index, snapshot in enumerate(graph.snapshots):
            local = [column[node] for node in snapshot.node_ids]
            features[time_index, local] = snapshot.features
            presence[time_index, local] = True
            adjacency: Dict[int, List[int]] = {}
            for src, dst in snapshot.edges:
                adjacency.setdefault(local[src], []).append(local[dst])
            out_edges.append(adjacency)

        times = graph.times
        queries, keys = [], []
        for time_index, time in enumerate(times):
            start = window_start(time, window)
            visible = [index for index in range(time_index + 1) if times[index] >= start]
            for node in np.flatnonzero(presence[time_index]).tolist():
                position = time_index * n_nodes + node
                for past in visible:
                    for neighbor in out_edges[past].get(node, []):
                        queries.append(position)
                        keys.append(past * n_nodes + neighbor)
                queries.append(position)
                keys.append(position)

        sources, labels, target_times, target_nodes = [], [], [], []
        for time_index in range(1, n_times):
            snapshot = graph.snapshots[time_index]
            for local, node in enumerate(snapshot.node_ids):
                index = column[node]
                if snapshot.label_mask[local] and presence[time_index - 1, index]:
                    sources.append((time_index - 1) * n_nodes + index)
                    labels.append(snapshot.label[local])
                    target_times.append(snapshot.time)
                    target_nodes.append(node)

        return cls(
            node_ids=node_ids,
            times=torch.tensor(times, dtype=dtype),
            features=torch.tensor(features, dtype=dtype),
            presence=torch.tensor(presence.reshape(-1)),
            query_index=torch.tensor(queries, dtype=torch.long),
            key_index=torch.tensor(keys, dtype=torch.long),
            target_source=torch.tensor(sources, dtype=torch.long),
            target_label=torch.tensor(labels, dtype=dtype),
            target_time=np.asarray(target_times, dtype=int),
            target_node=target_nodes,
            target_mean=graph.scaler.mean[graph.schema.target_index],
            target_std=graph.scaler.std[graph.schema.target_index],
        )
