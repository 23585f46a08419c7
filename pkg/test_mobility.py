import os
import sys

# Ensure usage of the current directory for imports
sys.path.append(os.path.dirname(os.path.abspath(__file__)))

import math

import networkx as nx
import numpy as np
import pytest

from app.models.scenario import ScenarioConfig
from app.services.mobility_service import (
    generate_road_network,
    positions,
    spawn_vehicles,
    step_vehicles,
    trace_rows,
)
from app.services.scenario_service import rng_stream


@pytest.fixture
def config():
    return ScenarioConfig(n_vehicles=25)


@pytest.fixture
def network(config):
    return generate_road_network(config, rng_stream(0, "roads"))


def _on_road(xy, block=250.0, tol=1e-6):
    x, y = xy
    return abs(x / block - round(x / block)) * block < tol or abs(y / block - round(y / block)) * block < tol


def test_grid_network_shape(network):
    # 5000 m / 250 m blocks -> 21 x 21 intersections
    assert network.n_waypoints == 441
    assert network.graph.number_of_edges() == 2 * 21 * 20
    assert nx.is_connected(network.graph)
    assert network.point(0) == (0.0, 0.0)
    assert network.point(440) == (5000.0, 5000.0)
    assert network.adjacency[0] == [1, 21]


def test_spawn_on_waypoints_with_valid_routes(config, network):
    fleet = spawn_vehicles(config, network, rng_stream(0, "mobility"))
    assert [v.id for v in fleet] == list(range(25))
    for v in fleet:
        assert v.position == network.point(v.route[0])
        assert v.route[0] != v.destination
        assert config.mobility.spawn_speed_min_mps <= v.speed_mps <= config.mobility.spawn_speed_max_mps
        assert math.isclose(math.hypot(*v.heading), 1.0)
        for a, b in zip(v.route, v.route[1:]):
            assert network.graph.has_edge(a, b)


def test_vehicles_stay_on_roads_inside_area(config, network):
    rng = rng_stream(1, "mobility")
    fleet = spawn_vehicles(config, network, rng)
    for _ in range(400):
        step_vehicles(fleet, network, 0.5, rng, config)
        assert len(fleet) == 25
        for v in fleet:
            assert 0.0 <= v.position[0] <= 5000.0 + 1e-9
            assert 0.0 <= v.position[1] <= 5000.0 + 1e-9
            assert _on_road(v.position)
            assert 0.0 <= v.speed_mps <= config.mobility.max_speed_mps


def test_step_moves_speed_times_dt_on_straight_leg(config, network):
    fleet = spawn_vehicles(config, network, rng_stream(2, "mobility"))
    v = fleet[0]
    v.position = network.point(0)
    v.route = [0, 1, 2, 3]
    v.route_cursor = 1
    v.speed_mps = 10.0
    step_vehicles([v], network, 0.5, rng_stream(2, "other"), config)
    assert v.position == pytest.approx((5.0, 0.0))
    assert v.heading == (1.0, 0.0)


def test_arrival_draws_new_destination(config, network):
    fleet = spawn_vehicles(config, network, rng_stream(3, "mobility"))
    v = fleet[0]
    v.position = network.point(0)
    v.route = [0, 1]
    v.route_cursor = 1
    v.speed_mps = 500.0  # one 250 m block per 0.5 s step
    step_vehicles([v], network, 0.5, rng_stream(3, "other"), config)
    assert v.route[0] == 1
    assert v.destination != 1


def test_mobility_deterministic_per_seed(config, network):
    def run(seed):
        rng = rng_stream(seed, "mobility")
        fleet = spawn_vehicles(config, network, rng)
        for _ in range(50):
            step_vehicles(fleet, network, 0.5, rng, config)
        return positions(fleet)

    assert np.array_equal(run(4), run(4))
    assert not np.array_equal(run(4), run(5))


def test_non_positive_dt_rejected(config, network):
    fleet = spawn_vehicles(config, network, rng_stream(0, "mobility"))
    with pytest.raises(ValueError):
        step_vehicles(fleet, network, 0.0, rng_stream(0, "mobility"), config)


def test_trace_rows_one_per_vehicle(config, network):
    fleet = spawn_vehicles(config, network, rng_stream(0, "mobility"))
    rows = trace_rows(1.5, fleet)
    assert len(rows) == 25
    assert rows[3]["vehicle_id"] == 3 and rows[3]["t"] == 1.5
