"""
Mobility model – road network and per-vehicle kinematic state
"""
from dataclasses import dataclass, field
from typing import Dict, List, Tuple

import networkx as nx
import numpy as np


@dataclass
class RoadNetwork:
    """Waypoints (row i = node i) plus an undirected networkx graph over them."""
    waypoints: np.ndarray
    graph: nx.Graph

    @property
    def n_waypoints(self) -> int:
        return int(self.waypoints.shape[0])

    @property
    def adjacency(self) -> Dict[int, List[int]]:
        return {int(n): sorted(int(m) for m in self.graph.neighbors(n)) for n in sorted(self.graph.nodes)}

    def point(self, node: int) -> Tuple[float, float]:
        x, y = self.waypoints[node]
        return float(x), float(y)


@dataclass
class VehicleState:
    id: int
    position: Tuple[float, float]
    speed_mps: float
    heading: Tuple[float, float]
    route: List[int] = field(default_factory=list)
    # index into `route` of the waypoint the vehicle is driving towards
    route_cursor: int = 1

    @property
    def destination(self) -> int:
        return self.route[-1]
