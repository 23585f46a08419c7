"""
Radio service – log-distance path loss, frozen shadowing and downlink SINR.

All towers share one band, so every other in-range tower interferes.
Out-of-range towers neither serve nor interfere.
"""
import math
from typing import List, Optional, Sequence

import numpy as np

from app.models.mobility import VehicleState
from app.models.radio import LinkMeasurement, LinkTable
from app.models.scenario import RadioConfig, Tower
from app.utils.helpers import db_to_linear, db_to_linear_scalar, linear_to_db, linear_to_db_scalar

LINK_TRACE_COLUMNS = ["t", "vehicle_id", "tower_id", "distance", "sinr_db"]


def path_loss_db(distance_m, cfg: RadioConfig):
    """ref_loss + 10 n log10(max(d, 1 m)). Scalar in, scalar out; arrays too."""
    if np.isscalar(distance_m):
        if distance_m < 0:
            raise ValueError(f"distance must be non-negative, got {distance_m}")
        return cfg.ref_loss_db + 10.0 * cfg.pathloss_exponent * math.log10(max(float(distance_m), 1.0))
    d = np.maximum(np.asarray(distance_m, dtype=float), 1.0)
    return cfg.ref_loss_db + 10.0 * cfg.pathloss_exponent * np.log10(d)


def draw_shadowing(rng: np.random.Generator, n_vehicles: int, n_towers: int, cfg: RadioConfig) -> np.ndarray:
    """One log-normal shadowing value (dB of extra loss) per vehicle-tower pair."""
    if cfg.shadowing_sigma_db == 0.0:
        return np.zeros((n_vehicles, n_towers))
    return rng.normal(0.0, cfg.shadowing_sigma_db, size=(n_vehicles, n_towers))


def sinr_from_powers(serving_dbm: float, interferers_dbm: Sequence[float], noise_dbm: float) -> float:
    """S / (N + sum I) evaluated in the linear domain, returned in dB."""
    denom = db_to_linear_scalar(noise_dbm) + sum(db_to_linear_scalar(p) for p in interferers_dbm)
    return linear_to_db_scalar(db_to_linear_scalar(serving_dbm) / denom)


def _rx_dbm(vehicle: VehicleState, tower: Tower, cfg: RadioConfig, shadow_table: Optional[np.ndarray]) -> float:
    distance = math.dist(vehicle.position, tower.position)
    shadow = 0.0 if shadow_table is None else float(shadow_table[vehicle.id, tower.id])
    return tower.tx_power_dbm - path_loss_db(distance, cfg) - shadow


def sinr_db(vehicle: VehicleState, serving_tower: Tower, all_towers: Sequence[Tower], cfg: RadioConfig,
            shadow_table: Optional[np.ndarray] = None) -> Optional[float]:
    """Downlink SINR of `serving_tower` at `vehicle`; None when out of range."""
    if math.dist(vehicle.position, serving_tower.position) > serving_tower.comm_range_m:
        return None
    serving = _rx_dbm(vehicle, serving_tower, cfg, shadow_table)
    interferers = [
        _rx_dbm(vehicle, t, cfg, shadow_table)
        for t in all_towers
        if t.id != serving_tower.id and math.dist(vehicle.position, t.position) <= t.comm_range_m
    ]
    return sinr_from_powers(serving, interferers, cfg.noise_dbm)


# ─── vectorised sampling ──────────────────────────────────────────────────────

def measure_matrix(t: float, vehicle_xy: np.ndarray, tower_xy: np.ndarray, tx_power_dbm: np.ndarray,
                   comm_range_m: np.ndarray, cfg: RadioConfig, shadow_table: Optional[np.ndarray] = None) -> LinkTable:
    """Every vehicle-tower pair at once. Rows = vehicles, columns = towers."""
    diff = vehicle_xy[:, None, :] - tower_xy[None, :, :]
    distance = np.hypot(diff[..., 0], diff[..., 1])
    rx = tx_power_dbm[None, :] - path_loss_db(distance, cfg)
    if shadow_table is not None:
        rx = rx - shadow_table
    in_range = distance <= comm_range_m[None, :]

    power = np.where(in_range, db_to_linear(rx), 0.0)
    noise = db_to_linear_scalar(cfg.noise_dbm)
    sinr = np.full(distance.shape, np.nan)
    n_towers = tower_xy.shape[0]
    for j in range(n_towers):
        others = np.delete(power, j, axis=1).sum(axis=1) if n_towers > 1 else 0.0
        col = linear_to_db(power[:, j] / (noise + others))
        sinr[:, j] = np.where(in_range[:, j], col, np.nan)
    return LinkTable(t=t, distance_m=distance, rx_power_dbm=rx, sinr_db=sinr, in_range=in_range)


def tower_arrays(towers: Sequence[Tower]):
    ordered = sorted(towers, key=lambda t: t.id)
    xy = np.array([t.position for t in ordered], dtype=float)
    tx = np.array([t.tx_power_dbm for t in ordered], dtype=float)
    rng_m = np.array([t.comm_range_m for t in ordered], dtype=float)
    return xy, tx, rng_m


def measure_all(vehicles: Sequence[VehicleState], towers: Sequence[Tower], cfg: RadioConfig,
                shadow_table: Optional[np.ndarray] = None, t: float = 0.0) -> List[LinkMeasurement]:
    """One measurement per in-range vehicle-tower pair."""
    xy, tx, rng_m = tower_arrays(towers)
    vehicle_xy = np.array([v.position for v in sorted(vehicles, key=lambda v: v.id)], dtype=float).reshape(-1, 2)
    return measure_matrix(t, vehicle_xy, xy, tx, rng_m, cfg, shadow_table).to_measurements()


def trace_rows(table: LinkTable) -> List[dict]:
    return [
        {"t": table.t, "vehicle_id": m.vehicle_id, "tower_id": m.tower_id,
         "distance": m.distance_m, "sinr_db": m.sinr_db}
        for m in table.to_measurements()
    ]
