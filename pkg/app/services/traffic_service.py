"""
Traffic service – VoIP uplink generation, per-packet delivery and windowed
throughput.

Two layers:
  * record-level functions (generate_packets / deliver / throughput_bps /
    pair_throughput) operating on PacketRecord lists;
  * PacketLedger, the vectorised form the simulator uses. It resolves a whole
    tick of packets per vehicle at once (all packets of one vehicle in one
    tick share the same link state) and keeps only counters.
"""
import dataclasses
import logging
import math
from collections import defaultdict
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from app.models.scenario import TrafficConfig
from app.models.traffic import PacketRecord, VoipFlow

logger = logging.getLogger(__name__)

PACKET_TRACE_COLUMNS = [
    "t0", "t1", "vehicle_id", "tower_id", "generated", "delivered", "delivered_in_run", "latency_s", "size_bytes",
]
PACKET_FULL_COLUMNS = ["packet_id", "vehicle_id", "tower_id", "send_ts", "recv_ts"]

# slack for float boundaries like 0.5 / 0.02
_EPS = 1e-9


def _first_index_at_or_after(t: float, interval: float) -> int:
    return int(math.ceil(t / interval - _EPS))


def packet_index_range(flow: VoipFlow, window: Tuple[float, float]) -> range:
    """Sequence numbers k whose send time k*interval lies in [t0, t1)."""
    t0, t1 = window
    if t1 <= t0:
        raise ValueError(f"empty packet window [{t0}, {t1})")
    return range(_first_index_at_or_after(t0, flow.interval_s), _first_index_at_or_after(t1, flow.interval_s))


# ─── record level ─────────────────────────────────────────────────────────────

def generate_packets(vehicle_id: int, flow: VoipFlow, window: Tuple[float, float],
                     serving_tower: Optional[int] = None) -> List[PacketRecord]:
    """One packet per interval boundary in [t0, t1), addressed to the serving tower.

    The packet id is the flow's sequence number, so consecutive windows give
    strictly increasing ids with no gaps. Without a serving tower every packet
    is lost on the spot.
    """
    disconnected = serving_tower is None
    return [
        PacketRecord(
            packet_id=k,
            vehicle_id=vehicle_id,
            tower_id=serving_tower,
            send_ts_s=k * flow.interval_s,
            size_bytes=flow.packet_size_bytes,
            delivered=False,
            resolved=disconnected,
        )
        for k in packet_index_range(flow, window)
    ]


def link_outcome(sinr_db: Optional[float], tower_load: int, cfg: TrafficConfig) -> Tuple[bool, float]:
    """(delivered, latency_s) for a link in the given state."""
    if sinr_db is None or not math.isfinite(sinr_db):
        return False, 0.0
    ok = sinr_db >= cfg.outage_sinr_db and tower_load <= cfg.capacity_flows
    return ok, cfg.base_delay_s + cfg.per_load_delay_s * tower_load


def deliver(packet: PacketRecord, sinr_db: Optional[float], tower_load: int, cfg: TrafficConfig) -> PacketRecord:
    """Resolve one packet: SINR outage threshold plus tower flow cap."""
    if packet.resolved:
        raise ValueError(f"packet {packet.packet_id} of vehicle {packet.vehicle_id} already resolved")
    ok, latency = link_outcome(sinr_db, tower_load, cfg)
    return dataclasses.replace(
        packet,
        delivered=ok,
        recv_ts_s=packet.send_ts_s + latency if ok else None,
        resolved=True,
    )


def throughput_bps(records: Iterable[PacketRecord], window: Tuple[float, float]) -> float:
    """Throughput: delivered bits with recv_ts in [t0, t1) over the window length."""
    t0, t1 = window
    if t1 <= t0:
        return 0.0
    total = sum(r.size_bytes for r in records if r.delivered and t0 <= r.recv_ts_s < t1)
    return 8.0 * total / (t1 - t0)


def pair_throughput(records: Iterable[PacketRecord], window: Tuple[float, float]) -> Dict[Tuple[int, int], float]:
    """Throughput per (vehicle, tower) pair over `window`. Pairs without packets are absent."""
    t0, t1 = window
    span = t1 - t0
    if span <= 0:
        return {}
    totals: Dict[Tuple[int, int], int] = defaultdict(int)
    for r in records:
        if r.tower_id is None or not (t0 <= r.send_ts_s < t1):
            continue
        key = (r.vehicle_id, r.tower_id)
        totals[key] += r.size_bytes if (r.delivered and r.recv_ts_s < t1) else 0
    return {key: 8.0 * b / span for key, b in sorted(totals.items())}


def delivery_counts(records: Sequence[PacketRecord]) -> Tuple[int, int, int]:
    """(generated, delivered, lost)"""
    delivered = sum(1 for r in records if r.delivered)
    return len(records), delivered, len(records) - delivered


# ─── vectorised ledger ────────────────────────────────────────────────────────

def _count_received_before(k_lo: int, n: int, interval: float, latency: np.ndarray, boundary: float) -> np.ndarray:
    """Of packets k_lo..k_lo+n-1 sent at k*interval, how many arrive before `boundary`."""
    last_ok = np.ceil((boundary - latency) / interval - _EPS) - k_lo
    return np.clip(last_ok, 0, n).astype(np.int64)


class PacketLedger:
    """Counters for every flow of a run.

    `record_window` resolves one tick of traffic for all vehicles; rows for
    packets.csv are kept per (window, vehicle).
    """

    def __init__(self, n_vehicles: int, n_towers: int, cfg: TrafficConfig, run_end_s: float,
                 keep_full_trace: bool = False):
        self.cfg = cfg
        self.flow = VoipFlow.from_config(cfg)
        self.n_vehicles = n_vehicles
        self.n_towers = n_towers
        self.run_end_s = run_end_s
        self._blocks: List[Dict[str, np.ndarray]] = []
        self.full_rows: Optional[List[dict]] = [] if keep_full_trace else None

        self.generated = np.zeros(n_vehicles, dtype=np.int64)
        self.delivered = np.zeros(n_vehicles, dtype=np.int64)
        # packets delivered in the current pair-throughput window, and their spill into the next
        self._pair_packets = np.zeros((n_vehicles, n_towers), dtype=np.int64)
        self._pair_seen = np.zeros((n_vehicles, n_towers), dtype=bool)
        self._pair_spill = np.zeros((n_vehicles, n_towers), dtype=np.int64)
        self._pair_t0 = 0.0

    def record_window(self, t0: float, t1: float, serving: np.ndarray, serving_sinr_db: np.ndarray,
                      tower_load: np.ndarray, pair_window_end: float) -> None:
        """Generate and resolve every packet sent in [t0, t1).

        serving: tower id per vehicle, -1 when unserved.
        serving_sinr_db: SINR of the serving link (NaN when unserved or out of range).
        tower_load: vehicles served per tower.
        """
        span = packet_index_range(self.flow, (t0, t1))
        n = len(span)
        if n == 0:
            return
        k_lo = span.start
        served = serving >= 0
        load = np.where(served, tower_load[np.where(served, serving, 0)], 0)
        with np.errstate(invalid="ignore"):
            good_sinr = np.nan_to_num(serving_sinr_db, nan=-np.inf) >= self.cfg.outage_sinr_db
        ok = served & good_sinr & (load <= self.cfg.capacity_flows)
        latency = np.where(ok, self.cfg.base_delay_s + self.cfg.per_load_delay_s * load, 0.0)

        delivered = np.where(ok, n, 0)
        in_run = np.where(ok, _count_received_before(k_lo, n, self.flow.interval_s, latency, self.run_end_s), 0)
        in_pair = np.where(ok, _count_received_before(k_lo, n, self.flow.interval_s, latency, pair_window_end), 0)

        self.generated += n
        self.delivered += delivered
        rows_v = np.flatnonzero(served)
        towers = serving[rows_v]
        self._pair_seen[rows_v, towers] = True
        np.add.at(self._pair_packets, (rows_v, towers), in_pair[rows_v])
        np.add.at(self._pair_spill, (rows_v, towers), (delivered - in_pair)[rows_v])

        self._blocks.append({
            "t0": np.full(self.n_vehicles, t0), "t1": np.full(self.n_vehicles, t1),
            "vehicle_id": np.arange(self.n_vehicles), "tower_id": serving.astype(np.int64),
            "generated": np.full(self.n_vehicles, n, dtype=np.int64), "delivered": delivered.astype(np.int64),
            "delivered_in_run": in_run.astype(np.int64), "latency_s": latency.astype(float),
            "size_bytes": np.full(self.n_vehicles, self.flow.packet_size_bytes, dtype=np.int64),
        })
        if self.full_rows is not None:
            self._append_full(span, serving, ok, latency)

    def _append_full(self, span: range, serving: np.ndarray, ok: np.ndarray, latency: np.ndarray) -> None:
        for v in range(self.n_vehicles):
            tower = int(serving[v])
            for k in span:
                send = k * self.flow.interval_s
                self.full_rows.append({
                    "packet_id": k, "vehicle_id": v, "tower_id": tower if tower >= 0 else "",
                    "send_ts": send, "recv_ts": send + latency[v] if ok[v] else "LOST",
                })

    def pair_throughput(self, t_end: float) -> Dict[Tuple[int, int], float]:
        """Throughput per served pair since the last call, then start a new window."""
        span = t_end - self._pair_t0
        out: Dict[Tuple[int, int], float] = {}
        if span > 0:
            bits = 8.0 * self.flow.packet_size_bytes * self._pair_packets
            for v, t in zip(*np.nonzero(self._pair_seen)):
                out[(int(v), int(t))] = float(bits[v, t] / span)
        self._pair_packets = self._pair_spill
        self._pair_spill = np.zeros_like(self._pair_packets)
        self._pair_seen = self._pair_packets > 0
        self._pair_t0 = t_end
        return out

    @property
    def lost(self) -> np.ndarray:
        return self.generated - self.delivered

    def frame(self) -> pd.DataFrame:
        """packets.csv contents: one row per (window, vehicle)."""
        if not self._blocks:
            return pd.DataFrame(columns=PACKET_TRACE_COLUMNS)
        data = {col: np.concatenate([b[col] for b in self._blocks]) for col in PACKET_TRACE_COLUMNS}
        return pd.DataFrame(data, columns=PACKET_TRACE_COLUMNS)
