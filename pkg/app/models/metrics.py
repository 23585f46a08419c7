"""
Metrics report models and schemas
"""
from typing import Dict, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

# Metrics that are aggregated across seeds, in report order.
METRIC_FIELDS = (
    "avg_sinr_db",
    "avg_throughput_bps",
    "ptr_pps",
    "ptr_bps",
    "packet_loss_ratio",
    "packet_delivery_ratio",
    "handover_count",
    "pingpong_count",
)

# Config echo keys; everything except `seed` must agree for aggregation.
ECHO_FIELDS = ("policy", "density", "seed", "hysteresis_db", "min_sinr_db", "pingpong_window_s", "gnn_interval_s")


class MetricsReport(BaseModel):
    """One run's evaluation metrics plus the config values that produced them"""
    model_config = ConfigDict(frozen=True)

    avg_sinr_db: float = 0.0
    avg_throughput_bps: float = Field(default=0.0, ge=0)
    ptr_pps: float = Field(default=0.0, ge=0)
    ptr_bps: float = Field(default=0.0, ge=0)
    packet_loss_ratio: float = Field(default=0.0, ge=0, le=1)
    packet_delivery_ratio: float = Field(default=0.0, ge=0, le=1)
    handover_count: int = Field(default=0, ge=0)
    pingpong_count: int = Field(default=0, ge=0)

    generated_packets: int = Field(default=0, ge=0)
    delivered_packets: int = Field(default=0, ge=0)
    lost_packets: int = Field(default=0, ge=0)
    sinr_samples: int = Field(default=0, ge=0)
    empty_run: bool = False

    # config echo
    policy: Literal["th_gcn", "max_sinr"] = "th_gcn"
    density: int = 0
    seed: int = 0
    hysteresis_db: float = 0.0
    min_sinr_db: float = 0.0
    pingpong_window_s: float = 0.0
    gnn_interval_s: float = 0.0

    @model_validator(mode="after")
    def consistent_counts(self):
        if self.pingpong_count > self.handover_count:
            raise ValueError(f"pingpong_count {self.pingpong_count} > handover_count {self.handover_count}")
        if self.delivered_packets + self.lost_packets != self.generated_packets:
            raise ValueError("delivered + lost != generated")
        return self

    def config_key(self, exclude=("seed",)) -> Dict[str, object]:
        return {k: getattr(self, k) for k in ECHO_FIELDS if k not in exclude}


class MetricSummary(BaseModel):
    mean: float
    ci95: Optional[float] = Field(default=None)


class AggregateReport(BaseModel):
    """Across-seed mean and 95% Student-t half-width per metric"""
    policy: str
    density: int
    n_seeds: int = Field(ge=1)
    metrics: Dict[str, MetricSummary]
    config: Dict[str, object] = Field(default_factory=dict)
