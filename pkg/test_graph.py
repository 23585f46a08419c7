import os
import sys

# Ensure usage of the current directory for imports
sys.path.append(os.path.dirname(os.path.abspath(__file__)))

import numpy as np
import pytest

from app.models.graph import FEATURE_SPEC, TOWER, VEHICLE
from app.models.mobility import VehicleState
from app.models.scenario import ScenarioConfig, Tower
from app.services.graph_service import (
    build_snapshot,
    dump_snapshot,
    edge_weight,
    normalize_features,
    to_networkx,
    tower_loads,
)
from app.services.radio_service import measure_matrix, tower_arrays

CONFIG = ScenarioConfig(n_vehicles=3, n_towers=2)


def _world():
    vehicles = [
        VehicleState(id=0, position=(100.0, 0.0), speed_mps=25.0, heading=(1.0, 0.0), route=[0, 1]),
        VehicleState(id=1, position=(900.0, 0.0), speed_mps=60.0, heading=(0.0, -1.0), route=[0, 1]),
        VehicleState(id=2, position=(4900.0, 4900.0), speed_mps=0.0, heading=(0.0, 1.0), route=[0, 1]),
    ]
    towers = [Tower(id=0, position=(0.0, 0.0)), Tower(id=1, position=(1000.0, 0.0))]
    xy, tx, rng_m = tower_arrays(towers)
    links = measure_matrix(5.0, np.array([v.position for v in vehicles]), xy, tx, rng_m, CONFIG.radio)
    return vehicles, towers, links


def test_normalize_features_clamps():
    f = normalize_features({"speed": 100.0, "heading": (3.0, 4.0), "position": (6000.0, -5.0), "load": 2}, CONFIG)
    assert f["speed"] == 1.0
    assert f["heading"] == pytest.approx((0.6, 0.8))
    assert f["position"] == (1.0, 0.0)
    assert f["load"] == pytest.approx(2 / 3)
    assert normalize_features({"heading": (0.0, 0.0)}, CONFIG)["heading"] == (0.0, 0.0)


def test_edge_weight_examples():
    # full throughput, SINR at the ceiling, zero distance -> 1
    assert edge_weight(102_400.0, 40.0, 0.0, CONFIG) == pytest.approx(1.0)
    # nothing good about the link -> 0
    assert edge_weight(0.0, -10.0, 1000.0, CONFIG) == pytest.approx(0.0)
    # no throughput history: the throughput term is half the SINR term
    s_hat = (15.0 + 10.0) / 50.0
    expected = (0.5 * s_hat + s_hat + (1.0 - 0.5)) / 3.0
    assert edge_weight(None, 15.0, 500.0, CONFIG) == pytest.approx(expected)


def test_edge_weight_bounded():
    rng = np.random.default_rng(0)
    for _ in range(200):
        w = edge_weight(rng.uniform(0, 5e5), rng.uniform(-40, 80), rng.uniform(0, 3000), CONFIG)
        assert 0.0 <= w <= 1.0


def test_edge_weight_monotone_in_each_input():
    rng = np.random.default_rng(11)
    for _ in range(200):
        tp, sinr, dist = rng.uniform(0, 2e5), rng.uniform(-20, 50), rng.uniform(0, 1500)
        step = rng.uniform(0.0, 500.0)
        base = edge_weight(tp, sinr, dist, CONFIG)
        assert edge_weight(tp, sinr, dist + step, CONFIG) <= base + 1e-12
        assert edge_weight(tp + 100.0 * step, sinr, dist, CONFIG) >= base - 1e-12
        assert edge_weight(tp, sinr + step / 10.0, dist, CONFIG) >= base - 1e-12
        assert edge_weight(None, sinr + step / 10.0, dist, CONFIG) >= edge_weight(None, sinr, dist, CONFIG) - 1e-12


def test_snapshot_layout():
    vehicles, towers, links = _world()
    serving = {0: 0, 1: 1, 2: None}
    snap = build_snapshot(5.0, vehicles, towers, links, {(0, 0): 102_400.0}, serving, CONFIG)

    assert snap.n_nodes == 5
    assert snap.X.shape == (5, FEATURE_SPEC.d_in)
    assert snap.vehicle_row(2) == 2 and snap.tower_row(0) == 3
    assert snap.node_index[(TOWER, 1)] == 4
    # towers flagged in the last column, vehicles not
    assert snap.X[:3, -1].tolist() == [0.0, 0.0, 0.0]
    assert snap.X[3:, -1].tolist() == [1.0, 1.0]
    # vehicle 1 drives faster than the normalisation cap
    assert snap.X[1, 0] == 1.0
    # one vehicle per serving tower, out of 3 vehicles
    assert snap.X[3, 0] == pytest.approx(1 / 3) and snap.X[4, 0] == pytest.approx(1 / 3)

    # every in-range pair is an edge; vehicle 2 has none
    assert sorted(map(tuple, snap.edges.tolist())) == [(0, 3), (0, 4), (1, 3), (1, 4)]
    assert len(snap.neighbours(snap.vehicle_row(2))) == 0
    assert np.all((snap.edge_weights >= 0.0) & (snap.edge_weights <= 1.0))


def test_snapshot_immutable_and_reproducible():
    vehicles, towers, links = _world()
    serving = {0: 0, 1: 1, 2: None}
    a = build_snapshot(5.0, vehicles, towers, links, {}, serving, CONFIG)
    b = build_snapshot(5.0, list(reversed(vehicles)), towers, links, {}, serving, CONFIG)
    assert a.digest() == b.digest()
    with pytest.raises(ValueError):
        a.X[0, 0] = 1.0
    with pytest.raises(ValueError):
        a.edge_weights[0] = 0.0
    with pytest.raises(TypeError):
        a.serving[2] = 0
    with pytest.raises(TypeError):
        a.node_index[(VEHICLE, 9)] = 9
    assert serving == {0: 0, 1: 1, 2: None}


def test_tower_loads():
    assert tower_loads({0: 1, 1: 1, 2: None, 3: 0}, 3).tolist() == [1, 2, 0]


def test_networkx_export_and_dump(tmp_path):
    vehicles, towers, links = _world()
    snap = build_snapshot(5.0, vehicles, towers, links, {}, {0: 0, 1: 1, 2: None}, CONFIG)
    g = to_networkx(snap)
    assert g.number_of_nodes() == 5 and g.number_of_edges() == 4
    assert g.nodes[0]["kind"] == VEHICLE and g.nodes[3]["kind"] == TOWER

    edge_path, node_path = dump_snapshot(snap, tmp_path)
    lines = edge_path.read_text(encoding="utf-8").splitlines()
    assert len(lines) == 4
    t, vehicle, tower, weight = lines[0].split()
    assert float(t) == 5.0 and 0.0 <= float(weight) <= 1.0
    assert node_path.exists()
