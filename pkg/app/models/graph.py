"""
Graph snapshot models
"""
import hashlib
import json
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping, Optional, Tuple

import numpy as np

VEHICLE = "v"
TOWER = "t"

NodeKey = Tuple[str, int]


@dataclass(frozen=True)
class FeatureSpec:
    """Fixed node-feature layout. The last column flags tower nodes."""
    d_in: int = 6
    vehicle_layout: Tuple[str, ...] = ("speed", "dir_x", "dir_y", "x", "y", "zero")
    tower_layout: Tuple[str, ...] = ("load", "x", "y", "zero", "zero", "is_tower")
    version: int = 1

    def hash(self) -> str:
        """Stable hex digest persisted alongside trained parameters."""
        payload = json.dumps(
            {"d_in": self.d_in, "vehicle": list(self.vehicle_layout), "tower": list(self.tower_layout),
             "version": self.version},
            sort_keys=True,
        )
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()


FEATURE_SPEC = FeatureSpec()


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class GraphSnapshot:
    """Bipartite vehicle/tower graph for one decision instant.

    Rows: vehicles sorted by id, then towers sorted by id. Arrays and
    mappings are read-only once built.
    """
    timestamp_s: float
    node_index: Mapping[NodeKey, int]
    X: np.ndarray
    edges: np.ndarray            # (n_edges, 2) int rows: (vehicle_row, tower_row)
    edge_weights: np.ndarray     # (n_edges,) in [0, 1]
    serving: Mapping[int, Optional[int]]
    vehicle_ids: Tuple[int, ...] = field(default=())
    tower_ids: Tuple[int, ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "X", _frozen(np.asarray(self.X, dtype=float)))
        object.__setattr__(self, "edges", _frozen(np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)))
        object.__setattr__(self, "edge_weights", _frozen(np.asarray(self.edge_weights, dtype=float).reshape(-1)))
        object.__setattr__(self, "node_index", MappingProxyType(dict(self.node_index)))
        object.__setattr__(self, "serving", MappingProxyType(dict(self.serving)))

    @property
    def n_nodes(self) -> int:
        return int(self.X.shape[0])

    @property
    def n_vehicles(self) -> int:
        return len(self.vehicle_ids)

    @property
    def n_towers(self) -> int:
        return len(self.tower_ids)

    def vehicle_row(self, vehicle_id: int) -> int:
        return self.node_index[(VEHICLE, vehicle_id)]

    def tower_row(self, tower_id: int) -> int:
        return self.node_index[(TOWER, tower_id)]

    def tower_rows(self) -> np.ndarray:
        return np.arange(self.n_vehicles, self.n_nodes)

    def neighbours(self, vehicle_row: int) -> np.ndarray:
        """Tower rows with an edge to `vehicle_row`."""
        return self.edges[self.edges[:, 0] == vehicle_row, 1]

    def digest(self) -> str:
        """Content hash, equal for snapshots built from equal inputs."""
        h = hashlib.sha256()
        h.update(np.float64(self.timestamp_s).tobytes())
        h.update(self.X.tobytes())
        h.update(self.edges.tobytes())
        h.update(self.edge_weights.tobytes())
        h.update(json.dumps(sorted((k, -1 if v is None else v) for k, v in self.serving.items())).encode())
        return h.hexdigest()
