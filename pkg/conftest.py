import os
import sys

# Ensure usage of the current directory for imports
sys.path.append(os.path.dirname(os.path.abspath(__file__)))

import numpy as np
import pytest

from app.models.graph import FEATURE_SPEC, TOWER, VEHICLE, GraphSnapshot


def random_snapshot(rng: np.random.Generator, n_vehicles: int, n_towers: int, serving=None,
                    edge_prob: float = 0.7, d_in: int = FEATURE_SPEC.d_in) -> GraphSnapshot:
    """Small bipartite snapshot with random features and edge weights."""
    node_index = {(VEHICLE, v): v for v in range(n_vehicles)}
    node_index.update({(TOWER, t): n_vehicles + t for t in range(n_towers)})
    X = rng.uniform(0.0, 1.0, size=(n_vehicles + n_towers, d_in))
    edges, weights = [], []
    for v in range(n_vehicles):
        for t in range(n_towers):
            linked = serving is not None and serving.get(v) == t
            if linked or rng.uniform() < edge_prob:
                edges.append((v, n_vehicles + t))
                weights.append(rng.uniform(0.05, 1.0))
    if serving is None:
        serving = {v: None for v in range(n_vehicles)}
    return GraphSnapshot(
        timestamp_s=0.0,
        node_index=node_index,
        X=X,
        edges=np.array(edges, dtype=np.int64).reshape(-1, 2),
        edge_weights=np.array(weights, dtype=float),
        serving=dict(serving),
        vehicle_ids=tuple(range(n_vehicles)),
        tower_ids=tuple(range(n_towers)),
    )


@pytest.fixture
def make_snapshot():
    return random_snapshot


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: full-scale multi-seed policy comparison")
