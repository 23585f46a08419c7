"""
Simulation Service – one deterministic run of one policy.

Per tick:
    shadowing redraw (GNN boundaries) → SINR sample (sampling boundaries)
    → handover decisions → traffic for [t, t+tick) → mobility step

TH-GCN decides at GNN boundaries (build snapshot, train, embed, rank,
decide) and only repairs lost links in between; the max-SINR baseline
decides at every SINR sample.
"""
import logging
import os
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np
import pandas as pd

from app.config.scenario import override
from app.config.settings import settings
from app.models.handover import ServingState
from app.models.scenario import ScenarioConfig
from app.models.training import TrainerState
from app.services import (
    gcn_engine,
    graph_service,
    handover_logic,
    metrics_service,
    mobility_service,
    radio_service,
    training_service,
)
from app.services.metrics_service import SINR_TRACE_COLUMNS, RunTraces
from app.services.scenario_service import make_clock, place_towers, rng_stream
from app.services.traffic_service import PACKET_FULL_COLUMNS, PacketLedger
from app.models.metrics import MetricsReport
from app.utils.helpers import ensure_writable_dir, run_dir, write_csv, write_frame

logger = logging.getLogger(__name__)


@dataclass
class SimulationResult:
    report: MetricsReport
    traces: RunTraces
    run_dir: Path
    trained_intervals: int = 0
    skipped_intervals: int = 0


class _Run:
    """Mutable state of one run; `simulate` drives it tick by tick."""

    def __init__(self, cfg: ScenarioConfig, out: Path, init_params: Optional[os.PathLike]):
        self.cfg = cfg
        self.out = out
        seed = cfg.seed
        self.towers = place_towers(cfg, rng_stream(seed, "placement"))
        self.tower_xy, self.tower_tx, self.tower_range = radio_service.tower_arrays(self.towers)
        self.network = mobility_service.generate_road_network(cfg, rng_stream(seed, "roads"))
        self.mobility_rng = rng_stream(seed, "mobility")
        self.vehicles = mobility_service.spawn_vehicles(cfg, self.network, self.mobility_rng)
        self.shadow_rng = rng_stream(seed, "shadowing")
        self.train_rng = rng_stream(seed, "training")
        self.clock = make_clock(cfg)

        n_v, n_t = len(self.vehicles), len(self.towers)
        self.states = [ServingState(vehicle_id=v.id) for v in self.vehicles]
        self.ledger = PacketLedger(n_v, n_t, cfg.traffic, cfg.sim_duration_s, keep_full_trace=cfg.traces.packets_full)
        self.shadow = np.zeros((n_v, n_t))
        self.links = None
        self.omega: Dict[int, List[int]] = {}

        self.sinr_rows: List[dict] = []
        self.event_rows: List[dict] = []
        self.loss_rows: List[dict] = []
        self.mobility_rows: List[dict] = []
        self.link_rows: List[dict] = []
        self.trained = 0
        self.skipped = 0

        self.params = None
        self.trainer_state = TrainerState()
        self.params_path = out / settings.PARAMS_FILENAME
        if cfg.policy == "th_gcn":
            if init_params is not None:
                self.params = gcn_engine.load_params(init_params)
                logger.info("Starting from saved parameters %s", init_params)
            else:
                self.params = gcn_engine.init_params(self.train_rng, cfg.gcn)

    # ── helpers ──────────────────────────────────────────────────────────────

    def serving_map(self) -> Dict[int, Optional[int]]:
        return {s.vehicle_id: s.current_tower for s in self.states}

    def serving_array(self) -> np.ndarray:
        return np.array([-1 if s.current_tower is None else s.current_tower for s in self.states], dtype=np.int64)

    def apply(self, vehicle_id: int, decision, t: float) -> None:
        event = handover_logic.record_event(self.states[vehicle_id], decision, t, self.cfg.pingpong_window_s,
                                            policy=self.cfg.policy)
        if event is not None:
            self.event_rows.append(handover_logic.event_row(event))

    def sample_links(self, t: float) -> None:
        xy = mobility_service.positions(self.vehicles)
        self.links = radio_service.measure_matrix(t, xy, self.tower_xy, self.tower_tx, self.tower_range,
                                                  self.cfg.radio, self.shadow)
        if self.cfg.traces.links:
            self.link_rows.extend(radio_service.trace_rows(self.links))

    # ── policies ─────────────────────────────────────────────────────────────

    def max_sinr_decisions(self, t: float) -> None:
        for v in self.vehicles:
            decision = handover_logic.decide_max_sinr(v.id, self.links, self.states[v.id], self.cfg, v.speed_mps)
            self.apply(v.id, decision, t)

    def gnn_decisions(self, t: float) -> None:
        pair_tp = self.ledger.pair_throughput(t)
        snapshot = graph_service.build_snapshot(t, self.vehicles, self.towers, self.links, pair_tp,
                                                self.serving_map(), self.cfg)
        if self.cfg.traces.snapshots:
            graph_service.dump_snapshot(snapshot, self.out / "snapshots")

        result = training_service.train_interval(snapshot, self.params, self.cfg.train, self.train_rng,
                                                 state=self.trainer_state, params_path=None)
        if result.skipped:
            self.skipped += 1
        elif result.losses:
            self.trained += 1
            self.params = result.params
            gcn_engine.save_params(self.params, self.params_path)
            self.loss_rows.extend(training_service.loss_rows(t, result))

        embeddings = gcn_engine.forward(snapshot, self.params)
        sims = handover_logic.similarity_matrix(embeddings, snapshot)
        for v in self.vehicles:
            omega = handover_logic.rank_top3(sims.row(v.id), self.links.candidates(v.id), self.links.sinr_db[v.id])
            self.omega[v.id] = omega
            decision = handover_logic.decide_th_gcn(v.id, omega, self.links, self.states[v.id], self.cfg,
                                                    v.speed_mps)
            self.apply(v.id, decision, t)

    def link_recovery(self, t: float) -> None:
        """Between GNN boundaries: only vehicles without a usable link are re-decided."""
        for v in self.vehicles:
            state = self.states[v.id]
            sinr = self.links.sinr(v.id, state.current_tower)
            if state.current_tower is not None and sinr is not None and sinr >= self.cfg.min_sinr_db:
                continue
            decision = handover_logic.decide_th_gcn(v.id, self.omega.get(v.id, []), self.links, state, self.cfg,
                                                    v.speed_mps)
            self.apply(v.id, decision, t)

    # ── tick ─────────────────────────────────────────────────────────────────

    def tick(self) -> None:
        cfg = self.cfg
        clock = self.clock
        t = clock.now_s
        gnn_boundary = clock.every(cfg.ticks_per_gnn_interval)
        sinr_boundary = clock.every(cfg.ticks_per_sinr_sample)

        if gnn_boundary:
            self.shadow = radio_service.draw_shadowing(self.shadow_rng, len(self.vehicles), len(self.towers),
                                                       cfg.radio)
        if sinr_boundary or self.links is None:
            self.sample_links(t)

        if cfg.policy == "max_sinr":
            if sinr_boundary:
                self.max_sinr_decisions(t)
        elif gnn_boundary:
            self.gnn_decisions(t)
        elif sinr_boundary:
            self.link_recovery(t)

        serving = self.serving_array()
        serving_sinr = np.full(len(self.vehicles), np.nan)
        served = np.flatnonzero(serving >= 0)
        serving_sinr[served] = self.links.sinr_db[served, serving[served]]
        if sinr_boundary:
            for v in served[np.isfinite(serving_sinr[served])]:
                self.sinr_rows.append({"t": t, "vehicle_id": int(v), "tower_id": int(serving[v]),
                                       "sinr_db": float(serving_sinr[v])})

        load = np.bincount(serving[served], minlength=len(self.towers))
        t_end = (clock.tick_index + 1) * cfg.tick_s
        next_gnn = (clock.tick_index // cfg.ticks_per_gnn_interval + 1) * cfg.ticks_per_gnn_interval * cfg.tick_s
        self.ledger.record_window(t, t_end, serving, serving_sinr, load, pair_window_end=next_gnn)

        if cfg.traces.mobility:
            self.mobility_rows.extend(mobility_service.trace_rows(t, self.vehicles))
        mobility_service.step_vehicles(self.vehicles, self.network, cfg.tick_s, self.mobility_rng, cfg)
        clock.advance()

    # ── outputs ──────────────────────────────────────────────────────────────

    def traces(self) -> RunTraces:
        return RunTraces(
            sinr=pd.DataFrame(self.sinr_rows, columns=SINR_TRACE_COLUMNS),
            packets=self.ledger.frame(),
            handovers=pd.DataFrame(self.event_rows, columns=handover_logic.HANDOVER_TRACE_COLUMNS),
            echo=self.cfg.echo(),
            duration_s=self.cfg.sim_duration_s,
            n_vehicles=len(self.vehicles),
        )

    def write(self, traces: RunTraces, report: MetricsReport) -> None:
        out = self.out
        write_frame(out / "sinr.csv", traces.sinr)
        write_frame(out / "packets.csv", traces.packets)
        write_frame(out / "handovers.csv", traces.handovers)
        metrics_service.write_run_meta(out, traces)
        metrics_service.write_report(out, report)
        if self.cfg.policy == "th_gcn":
            write_csv(out / "loss.csv", self.loss_rows, training_service.LOSS_TRACE_COLUMNS)
        if self.cfg.traces.mobility:
            write_csv(out / "mobility.csv", self.mobility_rows, mobility_service.MOBILITY_TRACE_COLUMNS)
        if self.cfg.traces.links:
            write_csv(out / "links.csv", self.link_rows, radio_service.LINK_TRACE_COLUMNS)
        if self.ledger.full_rows is not None:
            write_csv(out / "packets_full.csv", self.ledger.full_rows, PACKET_FULL_COLUMNS)


def simulate(config: ScenarioConfig, seed: Optional[int] = None, policy: Optional[str] = None,
             output_dir: Optional[os.PathLike] = None, init_params: Optional[os.PathLike] = None) -> SimulationResult:
    """Run one (config, seed, policy) end to end and write its traces and report.

    Output goes to output_dir/<policy>/<density>/<seed>/; the directory is
    checked for writability before anything is simulated.
    """
    cfg = override(config, seed=seed, policy=policy)
    out = ensure_writable_dir(run_dir(output_dir or settings.OUTPUT_DIR, cfg.policy, cfg.n_vehicles, cfg.seed))
    stale = out / settings.PARAMS_FILENAME
    if stale.exists():
        stale.unlink()

    started = time.perf_counter()
    logger.info("▶ Run policy=%s density=%d seed=%d (%d ticks)", cfg.policy, cfg.n_vehicles, cfg.seed, cfg.n_ticks)
    run = _Run(cfg, out, init_params)
    for _ in range(cfg.n_ticks):
        run.tick()

    traces = run.traces()
    report = metrics_service.per_run_report(traces)
    run.write(traces, report)
    logger.info(
        "✅ Run policy=%s density=%d seed=%d done in %.1fs: HO=%d PP=%d PDR=%.4f SINR=%.2f dB",
        cfg.policy, cfg.n_vehicles, cfg.seed, time.perf_counter() - started,
        report.handover_count, report.pingpong_count, report.packet_delivery_ratio, report.avg_sinr_db,
    )
    if run.skipped:
        logger.debug("%d training interval(s) skipped for lack of triplets", run.skipped)
    return SimulationResult(report=report, traces=traces, run_dir=out, trained_intervals=run.trained,
                            skipped_intervals=run.skipped)
