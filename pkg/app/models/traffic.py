"""
VoIP traffic models
"""
from dataclasses import dataclass
from typing import Optional

from app.models.scenario import TrafficConfig


@dataclass(frozen=True)
class VoipFlow:
    """Constant-bitrate uplink flow, one per vehicle"""
    packet_size_bytes: int = 256
    interval_s: float = 0.02

    def __post_init__(self):
        if self.packet_size_bytes <= 0:
            raise ValueError(f"packet_size_bytes must be positive, got {self.packet_size_bytes}")
        if self.interval_s <= 0:
            raise ValueError(f"interval_s must be positive, got {self.interval_s}")

    @property
    def bitrate_bps(self) -> float:
        return 8.0 * self.packet_size_bytes / self.interval_s

    @classmethod
    def from_config(cls, cfg: TrafficConfig) -> "VoipFlow":
        return cls(packet_size_bytes=cfg.packet_size_bytes, interval_s=cfg.interval_s)


@dataclass(frozen=True)
class PacketRecord:
    packet_id: int
    vehicle_id: int
    tower_id: Optional[int]
    send_ts_s: float
    size_bytes: int = 256
    delivered: bool = False
    recv_ts_s: Optional[float] = None
    # False until deliver() has judged the packet; disconnected packets start resolved
    resolved: bool = False

    @property
    def latency_s(self) -> Optional[float]:
        if not self.delivered:
            return None
        return self.recv_ts_s - self.send_ts_s
