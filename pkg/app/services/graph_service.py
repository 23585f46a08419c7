"""
Graph service – builds the per-interval vehicle/tower snapshot.

Nodes are every vehicle and every tower; edges are every in-range pair
(not only serving links, so non-serving towers shape the embeddings).
"""
import logging
import os
from pathlib import Path
from typing import Dict, Mapping, Optional, Sequence, Tuple

import networkx as nx
import numpy as np

from app.models.graph import FEATURE_SPEC, TOWER, VEHICLE, GraphSnapshot
from app.models.mobility import VehicleState
from app.models.radio import LinkTable
from app.models.scenario import ScenarioConfig, Tower
from app.utils.helpers import write_csv

logger = logging.getLogger(__name__)


# ─── normalisation ────────────────────────────────────────────────────────────

def _clamp(value, low: float, high: float):
    return np.clip(value, low, high) if isinstance(value, np.ndarray) else min(max(value, low), high)


def normalize_features(raw: Mapping[str, object], config: ScenarioConfig) -> Dict[str, object]:
    """Scale raw node attributes into the feature ranges.

    Recognised keys: speed (m/s), heading (x, y), position (x, y), load
    (vehicles). Only keys present in `raw` are returned.
    """
    out: Dict[str, object] = {}
    if "speed" in raw:
        out["speed"] = _clamp(float(raw["speed"]) / config.graph.max_speed_mps, 0.0, 1.0)
    if "heading" in raw:
        hx, hy = raw["heading"]
        norm = float(np.hypot(hx, hy))
        out["heading"] = (0.0, 0.0) if norm == 0.0 else (_clamp(hx / norm, -1.0, 1.0), _clamp(hy / norm, -1.0, 1.0))
    if "position" in raw:
        x, y = raw["position"]
        out["position"] = (_clamp(x / config.area_width_m, 0.0, 1.0), _clamp(y / config.area_height_m, 0.0, 1.0))
    if "load" in raw:
        out["load"] = _clamp(float(raw["load"]) / config.n_vehicles, 0.0, 1.0)
    return out


def _sinr_hat(sinr_db, config: ScenarioConfig):
    g = config.graph
    return _clamp((sinr_db - g.sinr_floor_db) / (g.sinr_ceil_db - g.sinr_floor_db), 0.0, 1.0)


def edge_weight(throughput_bps: Optional[float], sinr_db: float, distance_m: float, config: ScenarioConfig) -> float:
    """Convex mix of normalised throughput, SINR and closeness, in [0, 1].

    A pair with no throughput history (None) uses half its SINR score as
    the throughput term.
    """
    g = config.graph
    s_hat = _sinr_hat(sinr_db, config)
    if throughput_bps is None:
        t_hat = 0.5 * s_hat
    else:
        t_hat = _clamp(throughput_bps / config.traffic.nominal_bitrate_bps, 0.0, 1.0)
    d_hat = _clamp(distance_m / config.radio.comm_range_m, 0.0, 1.0)
    w = g.c_throughput * t_hat + g.c_sinr * s_hat + g.c_distance * (1.0 - d_hat)
    return float(_clamp(w, 0.0, 1.0))


def _edge_weights(throughput: np.ndarray, has_history: np.ndarray, sinr_db: np.ndarray, distance: np.ndarray,
                  config: ScenarioConfig) -> np.ndarray:
    g = config.graph
    s_hat = _sinr_hat(sinr_db, config)
    t_hat = np.where(has_history, np.clip(throughput / config.traffic.nominal_bitrate_bps, 0.0, 1.0), 0.5 * s_hat)
    d_hat = np.clip(distance / config.radio.comm_range_m, 0.0, 1.0)
    return np.clip(g.c_throughput * t_hat + g.c_sinr * s_hat + g.c_distance * (1.0 - d_hat), 0.0, 1.0)


# ─── snapshot ─────────────────────────────────────────────────────────────────

def tower_loads(serving: Mapping[int, Optional[int]], n_towers: int) -> np.ndarray:
    load = np.zeros(n_towers, dtype=np.int64)
    for tower in serving.values():
        if tower is not None:
            load[tower] += 1
    return load


def build_snapshot(t: float, vehicles: Sequence[VehicleState], towers: Sequence[Tower], measurements: LinkTable,
                   pair_throughput: Mapping[Tuple[int, int], float], serving: Mapping[int, Optional[int]],
                   config: ScenarioConfig) -> GraphSnapshot:
    """Snapshot for time `t` from the latest link sample and traffic window."""
    vehicles = sorted(vehicles, key=lambda v: v.id)
    towers = sorted(towers, key=lambda tw: tw.id)
    n_v, n_t = len(vehicles), len(towers)

    node_index = {(VEHICLE, v.id): i for i, v in enumerate(vehicles)}
    node_index.update({(TOWER, tw.id): n_v + j for j, tw in enumerate(towers)})

    X = np.zeros((n_v + n_t, FEATURE_SPEC.d_in))
    for i, v in enumerate(vehicles):
        f = normalize_features({"speed": v.speed_mps, "heading": v.heading, "position": v.position}, config)
        X[i, :5] = (f["speed"], *f["heading"], *f["position"])
    load = tower_loads(serving, n_t)
    for j, tw in enumerate(towers):
        f = normalize_features({"load": load[tw.id], "position": tw.position}, config)
        X[n_v + j] = (f["load"], *f["position"], 0.0, 0.0, 1.0)

    v_idx, t_idx = np.nonzero(measurements.in_range)
    throughput = np.zeros(len(v_idx))
    history = np.zeros(len(v_idx), dtype=bool)
    for e, (v, tw) in enumerate(zip(v_idx, t_idx)):
        value = pair_throughput.get((int(v), int(tw)))
        if value is not None:
            throughput[e] = value
            history[e] = True
    weights = _edge_weights(throughput, history, measurements.sinr_db[v_idx, t_idx],
                            measurements.distance_m[v_idx, t_idx], config)
    edges = np.stack([v_idx, n_v + t_idx], axis=1) if len(v_idx) else np.zeros((0, 2), dtype=np.int64)

    return GraphSnapshot(
        timestamp_s=t,
        node_index=node_index,
        X=X,
        edges=edges,
        edge_weights=weights,
        serving={v.id: serving.get(v.id) for v in vehicles},
        vehicle_ids=tuple(v.id for v in vehicles),
        tower_ids=tuple(tw.id for tw in towers),
    )


# ─── export ───────────────────────────────────────────────────────────────────

def to_networkx(snapshot: GraphSnapshot) -> nx.Graph:
    """Bipartite networkx view (node attrs: kind, id, features; edge attr: weight)."""
    g = nx.Graph(timestamp_s=snapshot.timestamp_s)
    for (kind, ident), row in sorted(snapshot.node_index.items(), key=lambda kv: kv[1]):
        g.add_node(row, kind=kind, id=ident, features=snapshot.X[row].tolist(),
                   bipartite=0 if kind == VEHICLE else 1)
    for (a, b), w in zip(snapshot.edges.tolist(), snapshot.edge_weights.tolist()):
        g.add_edge(a, b, weight=w)
    return g


def dump_snapshot(snapshot: GraphSnapshot, directory: os.PathLike) -> Tuple[Path, Path]:
    """Append-free dump: edges_<t>.txt (t vehicle tower weight) and nodes_<t>.csv."""
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    stamp = f"{snapshot.timestamp_s:010.3f}"
    n_v = snapshot.n_vehicles
    edge_path = out / f"edges_{stamp}.txt"
    with open(edge_path, "w", encoding="utf-8", newline="\n") as fh:
        for (a, b), w in zip(snapshot.edges.tolist(), snapshot.edge_weights.tolist()):
            fh.write(f"{snapshot.timestamp_s!r} {snapshot.vehicle_ids[a]} {snapshot.tower_ids[b - n_v]} {w!r}\n")
    rows = []
    for (kind, ident), row in sorted(snapshot.node_index.items(), key=lambda kv: kv[1]):
        rows.append({"row": row, "kind": kind, "id": ident, **{f"f{k}": snapshot.X[row, k] for k in range(snapshot.X.shape[1])}})
    node_path = write_csv(out / f"nodes_{stamp}.csv", rows,
                          ["row", "kind", "id"] + [f"f{k}" for k in range(snapshot.X.shape[1])])
    return edge_path, node_path
