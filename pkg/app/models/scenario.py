"""
Scenario model and schemas

Every default mirrors the parameter table of the evaluation setup; anything
not in that table is a lab decision and is documented next to the field.
"""
import math
from typing import Literal, Tuple

from pydantic import BaseModel, ConfigDict, Field, ValidationInfo, field_validator

Policy = Literal["th_gcn", "max_sinr"]

# Tolerance for "is a multiple of tick_s" checks on float config values.
_MULTIPLE_TOL = 1e-9


def _is_multiple(value: float, step: float) -> bool:
    ratio = value / step
    return abs(ratio - round(ratio)) < _MULTIPLE_TOL * max(1.0, ratio)


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class RadioConfig(_Section):
    """Log-distance channel with frozen log-normal shadowing"""
    pathloss_exponent: float = Field(default=3.5, ge=2.0, le=6.0)
    ref_loss_db: float = 47.0
    shadowing_sigma_db: float = Field(default=4.0, ge=0.0)
    noise_dbm: float = -95.0
    vehicle_tx_power_dbm: float = 26.0
    tower_tx_power_dbm: float = 46.0
    comm_range_m: float = Field(default=1000.0, gt=0)

    @field_validator("ref_loss_db", "noise_dbm", "vehicle_tx_power_dbm", "tower_tx_power_dbm")
    @classmethod
    def must_be_finite(cls, v):
        if not math.isfinite(v):
            raise ValueError("must be finite")
        return v


class TrafficConfig(_Section):
    """VoIP uplink flow and the threshold-plus-capacity loss model"""
    packet_size_bytes: int = Field(default=256, gt=0)
    interval_s: float = Field(default=0.02, gt=0)
    outage_sinr_db: float = -3.0
    capacity_flows: int = Field(default=120, ge=0)
    base_delay_s: float = Field(default=0.010, ge=0)
    per_load_delay_s: float = Field(default=0.0005, ge=0)

    @property
    def nominal_bitrate_bps(self) -> float:
        return 8.0 * self.packet_size_bytes / self.interval_s


class MobilityConfig(_Section):
    block_size_m: float = Field(default=250.0, gt=0)
    max_speed_mps: float = Field(default=50.0, gt=0)
    spawn_speed_min_mps: float = Field(default=5.0, ge=0)
    spawn_speed_max_mps: float = Field(default=25.0, ge=0)
    speed_step_mps: float = Field(default=1.0, ge=0)

    @field_validator("spawn_speed_max_mps")
    @classmethod
    def spawn_range_ordered(cls, v, info: ValidationInfo):
        low = info.data.get("spawn_speed_min_mps")
        if low is not None and v < low:
            raise ValueError(f"must be >= spawn_speed_min_mps ({low})")
        return v


class GraphConfig(_Section):
    """Edge-weight mixing coefficients and normalisation windows"""
    c_throughput: float = Field(default=1.0 / 3.0, ge=0)
    c_sinr: float = Field(default=1.0 / 3.0, ge=0)
    c_distance: float = Field(default=1.0 / 3.0, ge=0)
    sinr_floor_db: float = -10.0
    sinr_ceil_db: float = 40.0
    max_speed_mps: float = Field(default=50.0, gt=0)

    @field_validator("c_distance")
    @classmethod
    def convex_combination(cls, v, info: ValidationInfo):
        total = v + info.data.get("c_throughput", 0.0) + info.data.get("c_sinr", 0.0)
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"edge weight coefficients must sum to 1 (got {total:.6g})")
        return v

    @field_validator("sinr_ceil_db")
    @classmethod
    def window_ordered(cls, v, info: ValidationInfo):
        floor = info.data.get("sinr_floor_db")
        if floor is not None and v <= floor:
            raise ValueError(f"must exceed sinr_floor_db ({floor})")
        return v


class GcnConfig(_Section):
    hidden: int = Field(default=64, gt=0)
    out: int = Field(default=32, gt=0)


class TrainConfig(_Section):
    learning_rate: float = Field(default=0.01, gt=0)
    margin: float = Field(default=1.0, gt=0)
    epochs: int = Field(default=50, ge=0)
    momentum: float = Field(default=0.0, ge=0, lt=1)


class TraceConfig(_Section):
    """Optional heavy traces; the core traces are always written"""
    mobility: bool = False
    links: bool = False
    packets_full: bool = False
    snapshots: bool = False


class ScenarioConfig(_Section):
    """Validated world configuration for one run"""
    schema_version: int = 1

    area_width_m: float = Field(default=5000.0, gt=0)
    area_height_m: float = Field(default=5000.0, gt=0)
    n_vehicles: int = Field(default=100, ge=1)
    n_towers: int = Field(default=10, ge=1)
    sim_duration_s: float = Field(default=300.0, gt=0)

    # interval fields come before tick_s so the tick validator can see them
    gnn_interval_s: float = Field(default=5.0, gt=0)
    sinr_sampling_s: float = Field(default=0.5, gt=0)
    tick_s: float = Field(default=0.5, gt=0)

    seed: int = Field(default=0, ge=0, lt=2 ** 64)

    hysteresis_db: float = Field(default=3.0, ge=0)
    adaptive_hysteresis: bool = False
    min_sinr_db: float = -5.0
    pingpong_window_s: float = Field(default=2.0, ge=0)
    policy: Policy = "th_gcn"

    radio: RadioConfig = Field(default_factory=RadioConfig)
    traffic: TrafficConfig = Field(default_factory=TrafficConfig)
    mobility: MobilityConfig = Field(default_factory=MobilityConfig, validate_default=True)
    graph: GraphConfig = Field(default_factory=GraphConfig)
    gcn: GcnConfig = Field(default_factory=GcnConfig)
    train: TrainConfig = Field(default_factory=TrainConfig)
    traces: TraceConfig = Field(default_factory=TraceConfig)

    @field_validator("schema_version")
    @classmethod
    def known_schema(cls, v):
        from app.config.settings import settings
        if v != settings.SCHEMA_VERSION:
            raise ValueError(f"unsupported schema_version {v} (expected {settings.SCHEMA_VERSION})")
        return v

    @field_validator("sinr_sampling_s")
    @classmethod
    def sampling_divides_gnn_interval(cls, v, info: ValidationInfo):
        interval = info.data.get("gnn_interval_s")
        if interval is not None and not _is_multiple(interval, v):
            raise ValueError(f"gnn_interval_s ({interval}) is not a multiple of sinr_sampling_s ({v})")
        return v

    @field_validator("mobility")
    @classmethod
    def area_holds_a_block(cls, v, info: ValidationInfo):
        for name in ("area_width_m", "area_height_m"):
            side = info.data.get(name)
            if side is not None and side < v.block_size_m:
                raise ValueError(f"{name} ({side}) is smaller than mobility.block_size_m ({v.block_size_m})")
        return v

    @field_validator("tick_s")
    @classmethod
    def tick_fits_intervals(cls, v, info: ValidationInfo):
        for name in ("gnn_interval_s", "sinr_sampling_s"):
            interval = info.data.get(name)
            if interval is None:
                continue
            if v > interval:
                raise ValueError(f"tick_s ({v}) exceeds {name} ({interval})")
            if not _is_multiple(interval, v):
                raise ValueError(f"{name} ({interval}) is not a multiple of tick_s ({v})")
        return v

    @property
    def n_ticks(self) -> int:
        return int(round(self.sim_duration_s / self.tick_s))

    @property
    def ticks_per_sinr_sample(self) -> int:
        return int(round(self.sinr_sampling_s / self.tick_s))

    @property
    def ticks_per_gnn_interval(self) -> int:
        return int(round(self.gnn_interval_s / self.tick_s))

    def echo(self) -> dict:
        """The config values every report carries for auditability."""
        return {
            "policy": self.policy,
            "density": self.n_vehicles,
            "seed": self.seed,
            "hysteresis_db": self.hysteresis_db,
            "min_sinr_db": self.min_sinr_db,
            "pingpong_window_s": self.pingpong_window_s,
            "gnn_interval_s": self.gnn_interval_s,
        }


class Tower(BaseModel):
    """A gNodeB"""
    model_config = ConfigDict(frozen=True)

    id: int = Field(ge=0)
    position: Tuple[float, float]
    tx_power_dbm: float = 46.0
    comm_range_m: float = Field(default=1000.0, gt=0)

    @field_validator("tx_power_dbm")
    @classmethod
    def finite_power(cls, v):
        if not math.isfinite(v):
            raise ValueError("tx_power_dbm must be finite")
        return v


class SimClock:
    """Tick counter; time is always derived from the index, never accumulated."""

    def __init__(self, tick_s: float):
        if tick_s <= 0:
            raise ValueError(f"tick_s must be positive, got {tick_s}")
        self.tick_s = tick_s
        self.tick_index = 0

    @property
    def now_s(self) -> float:
        return self.tick_index * self.tick_s

    def advance(self) -> float:
        self.tick_index += 1
        return self.now_s

    def every(self, n_ticks: int) -> bool:
        """True on ticks that are multiples of `n_ticks` (tick 0 included)."""
        return self.tick_index % n_ticks == 0
