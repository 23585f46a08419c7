"""
Mobility service – Manhattan-grid road network and vehicle kinematics.

Vehicles drive shortest-path routes between random waypoints, pick a new
destination when they arrive, and perform a clamped speed random walk. The
fleet size never changes during a run.
"""
import logging
import math
from typing import Iterable, List

import networkx as nx
import numpy as np

from app.models.mobility import RoadNetwork, VehicleState
from app.models.scenario import ScenarioConfig

logger = logging.getLogger(__name__)

MOBILITY_TRACE_COLUMNS = ["t", "vehicle_id", "x", "y", "speed", "heading_x", "heading_y"]


# ─── road network ─────────────────────────────────────────────────────────────

def _axis(length: float, block: float) -> np.ndarray:
    n = int(math.floor(length / block + 1e-9)) + 1
    return np.arange(n, dtype=float) * block


def generate_road_network(config: ScenarioConfig, rng: np.random.Generator = None) -> RoadNetwork:
    """Manhattan grid with `mobility.block_size_m` spacing, inside the area.

    The grid is fully determined by the config; `rng` is accepted so the
    call site stays the same for generators that do draw.
    """
    block = config.mobility.block_size_m
    xs = _axis(config.area_width_m, block)
    ys = _axis(config.area_height_m, block)

    grid = nx.grid_2d_graph(len(ys), len(xs))
    # integer node ids, row-major: node = row * len(xs) + col
    mapping = {(r, c): r * len(xs) + c for r, c in grid.nodes}
    graph = nx.relabel_nodes(grid, mapping)
    ordered = nx.Graph()
    ordered.add_nodes_from(sorted(graph.nodes))
    ordered.add_edges_from(sorted(tuple(sorted(e)) for e in graph.edges))

    waypoints = np.array([(xs[c], ys[r]) for r in range(len(ys)) for c in range(len(xs))], dtype=float)
    logger.debug("Road network: %d waypoints, %d edges", ordered.number_of_nodes(), ordered.number_of_edges())
    return RoadNetwork(waypoints=waypoints, graph=ordered)


def _route(network: RoadNetwork, origin: int, destination: int) -> List[int]:
    return [int(n) for n in nx.shortest_path(network.graph, origin, destination)]


def _draw_destination(network: RoadNetwork, origin: int, rng: np.random.Generator) -> int:
    # uniform over every waypoint except the origin
    pick = int(rng.integers(0, network.n_waypoints - 1))
    return pick if pick < origin else pick + 1


def _unit(dx: float, dy: float, fallback=(1.0, 0.0)):
    norm = math.hypot(dx, dy)
    if norm == 0.0:
        return fallback
    return (dx / norm, dy / norm)


# ─── fleet ────────────────────────────────────────────────────────────────────

def spawn_vehicles(config: ScenarioConfig, network: RoadNetwork, rng: np.random.Generator) -> List[VehicleState]:
    """n_vehicles vehicles on shortest-path routes between distinct waypoints."""
    if network.n_waypoints < 2:
        raise ValueError("road network needs at least two waypoints to route vehicles")
    mob = config.mobility
    fleet: List[VehicleState] = []
    for vid in range(config.n_vehicles):
        origin = int(rng.integers(0, network.n_waypoints))
        destination = _draw_destination(network, origin, rng)
        speed = float(rng.uniform(mob.spawn_speed_min_mps, mob.spawn_speed_max_mps))
        route = _route(network, origin, destination)
        ox, oy = network.point(route[0])
        nx_, ny_ = network.point(route[1])
        fleet.append(VehicleState(
            id=vid,
            position=(ox, oy),
            speed_mps=speed,
            heading=_unit(nx_ - ox, ny_ - oy),
            route=route,
            route_cursor=1,
        ))
    return fleet


def _advance(vehicle: VehicleState, network: RoadNetwork, distance: float, rng: np.random.Generator) -> None:
    x, y = vehicle.position
    heading = vehicle.heading
    remaining = distance
    while remaining > 0.0:
        tx, ty = network.point(vehicle.route[vehicle.route_cursor])
        dx, dy = tx - x, ty - y
        gap = math.hypot(dx, dy)
        if gap > 0.0:
            heading = (dx / gap, dy / gap)
        if gap <= remaining:
            x, y = tx, ty
            remaining -= gap
            vehicle.route_cursor += 1
            if vehicle.route_cursor >= len(vehicle.route):
                origin = vehicle.route[-1]
                vehicle.route = _route(network, origin, _draw_destination(network, origin, rng))
                vehicle.route_cursor = 1
        else:
            x += heading[0] * remaining
            y += heading[1] * remaining
            remaining = 0.0
    vehicle.position = (x, y)
    vehicle.heading = heading


def step_vehicles(vehicles: List[VehicleState], network: RoadNetwork, dt: float,
                  rng: np.random.Generator, config: ScenarioConfig = None) -> List[VehicleState]:
    """Advance every vehicle by speed*dt along its route, then perturb speeds.

    Vehicles are updated in place and the same list is returned.
    """
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    max_speed = config.mobility.max_speed_mps if config else 50.0
    step = config.mobility.speed_step_mps if config else 1.0

    for vehicle in vehicles:
        _advance(vehicle, network, vehicle.speed_mps * dt, rng)

    kicks = rng.uniform(-step, step, size=len(vehicles))
    for vehicle, kick in zip(vehicles, kicks):
        vehicle.speed_mps = float(min(max(vehicle.speed_mps + kick, 0.0), max_speed))
    return vehicles


def trace_rows(t: float, vehicles: Iterable[VehicleState]) -> List[dict]:
    return [
        {"t": t, "vehicle_id": v.id, "x": v.position[0], "y": v.position[1], "speed": v.speed_mps,
         "heading_x": v.heading[0], "heading_y": v.heading[1]}
        for v in vehicles
    ]


def positions(vehicles: List[VehicleState]) -> np.ndarray:
    return np.array([v.position for v in vehicles], dtype=float).reshape(-1, 2)
