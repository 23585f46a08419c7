"""
Handover logic – embedding similarity, candidate ranking and the
hysteresis-gated decision shared by both policies.

Decision rule for one vehicle, given a ranked candidate list:
  * best = first candidate with a valid (in-range) measurement
  * unserved       -> attach to the first candidate with SINR >= min_sinr
  * best beats current by more than the hysteresis margin -> handover
  * current below min_sinr (or lost) and no handover      -> disconnect
  * otherwise                                              -> stay
A served vehicle may move to a target under min_sinr; a vehicle whose serving
link is lost re-attaches only to a target that clears it.
"""
import logging
import math
from typing import List, Optional, Sequence

import numpy as np

from app.models.gcn import EmbeddingMatrix
from app.models.graph import GraphSnapshot
from app.models.handover import Decision, HandoverEvent, ServingState, SimilarityMatrix
from app.models.radio import LinkTable
from app.models.scenario import ScenarioConfig

logger = logging.getLogger(__name__)

TOP_K = 3
HANDOVER_TRACE_COLUMNS = ["t", "vehicle_id", "from", "to", "is_pingpong", "policy"]


# ─── similarity & ranking ─────────────────────────────────────────────────────

def cosine(u: np.ndarray, v: np.ndarray) -> float:
    """Cosine similarity; 0 when either vector is zero."""
    nu, nv = float(np.linalg.norm(u)), float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        return 0.0
    return float(np.clip(np.dot(u, v) / (nu * nv), -1.0, 1.0))


def similarity_matrix(embeddings: EmbeddingMatrix, snapshot: GraphSnapshot) -> SimilarityMatrix:
    """Cosine similarity of every vehicle row against every tower row."""
    E = embeddings.values
    V = E[:snapshot.n_vehicles]
    T = E[snapshot.n_vehicles:snapshot.n_nodes]
    nv = np.linalg.norm(V, axis=1)
    nt = np.linalg.norm(T, axis=1)
    denom = nv[:, None] * nt[None, :]
    with np.errstate(invalid="ignore", divide="ignore"):
        sims = np.where(denom > 0.0, (V @ T.T) / np.where(denom > 0.0, denom, 1.0), 0.0)
    return SimilarityMatrix(values=np.clip(sims, -1.0, 1.0), vehicle_ids=snapshot.vehicle_ids,
                            tower_ids=snapshot.tower_ids)


def _tie_sinr(sinr_row, tower: int) -> float:
    if sinr_row is None:
        return 0.0
    value = sinr_row[tower]
    return -math.inf if value is None or not math.isfinite(value) else float(value)


def rank_top3(sim_row: Sequence[float], in_range_towers: Sequence[int], sinr_row: Sequence[float] = None,
              k: int = TOP_K) -> List[int]:
    """In-range towers by similarity, descending; ties on higher SINR then lower id."""
    ordered = sorted(
        (int(t) for t in in_range_towers),
        key=lambda t: (-float(sim_row[t]), -_tie_sinr(sinr_row, t), t),
    )
    return ordered[:k]


def max_sinr_ranking(vehicle_id: int, links: LinkTable) -> List[int]:
    """In-range towers by measured SINR, descending; ties on lower id."""
    row = links.sinr_db[vehicle_id]
    return sorted(links.candidates(vehicle_id), key=lambda t: (-float(row[t]), t))


# ─── decisions ────────────────────────────────────────────────────────────────

def effective_hysteresis(cfg: ScenarioConfig, speed_mps: Optional[float] = None) -> float:
    """Hysteresis margin, widened with speed when adaptive hysteresis is on."""
    if cfg.adaptive_hysteresis and speed_mps is not None:
        return cfg.hysteresis_db * (1.0 + min(max(speed_mps, 0.0), cfg.mobility.max_speed_mps)
                                    / cfg.mobility.max_speed_mps)
    return cfg.hysteresis_db


def _beats(candidate_sinr: float, current_sinr: Optional[float], hysteresis: float) -> bool:
    if math.isinf(hysteresis):
        return False
    if current_sinr is None:
        return True
    return candidate_sinr > current_sinr + hysteresis


def _decide(vehicle_id: int, ranked: Sequence[int], links: LinkTable, state: ServingState,
            cfg: ScenarioConfig, speed_mps: Optional[float]) -> Decision:
    valid = [(t, s) for t in ranked if (s := links.sinr(vehicle_id, t)) is not None]
    current = state.current_tower

    if current is None:
        for tower, sinr in valid:
            if sinr >= cfg.min_sinr_db:
                return Decision.handover(tower)
        return Decision.stay()

    current_sinr = links.sinr(vehicle_id, current)
    if valid:
        best, best_sinr = valid[0]
        # a lost serving link re-attaches under the attachment floor
        reachable = current_sinr is not None or best_sinr >= cfg.min_sinr_db
        if (best != current and reachable
                and _beats(best_sinr, current_sinr, effective_hysteresis(cfg, speed_mps))):
            return Decision.handover(best)
    if current_sinr is None or current_sinr < cfg.min_sinr_db:
        return Decision.disconnect()
    return Decision.stay()


def decide_th_gcn(vehicle_id: int, omega: Sequence[int], links: LinkTable, state: ServingState,
                  cfg: ScenarioConfig, speed_mps: Optional[float] = None) -> Decision:
    """Decision over the embedding-ranked candidates Ω_v.

    When no tower in Ω_v has a valid measurement the max-SINR ranking is used
    instead, so stale embeddings never strand a vehicle.
    """
    if not any(links.sinr(vehicle_id, t) is not None for t in omega):
        omega = max_sinr_ranking(vehicle_id, links)
    return _decide(vehicle_id, omega, links, state, cfg, speed_mps)


def decide_max_sinr(vehicle_id: int, links: LinkTable, state: ServingState, cfg: ScenarioConfig,
                    speed_mps: Optional[float] = None) -> Decision:
    """Baseline: the same gates with candidates ranked purely by measured SINR."""
    return _decide(vehicle_id, max_sinr_ranking(vehicle_id, links), links, state, cfg, speed_mps)


# ─── bookkeeping ──────────────────────────────────────────────────────────────

def record_event(state: ServingState, decision: Decision, t: float, pingpong_window_s: float,
                 policy: str = "") -> Optional[HandoverEvent]:
    """Apply `decision` to `state` and return the event it produced, if any.

    A tower-to-tower handover back to the previous tower within
    `pingpong_window_s` of the last event is a ping-pong.
    """
    if decision.kind == "stay":
        return None
    from_tower = state.current_tower
    to_tower = decision.to_tower if decision.kind == "handover" else None
    if from_tower == to_tower:
        return None

    is_pingpong = (
        from_tower is not None and to_tower is not None
        and to_tower == state.previous_tower
        and t - state.last_ho_ts_s <= pingpong_window_s
    )
    state.previous_tower = from_tower
    state.current_tower = to_tower
    state.last_ho_ts_s = t
    return HandoverEvent(t_s=t, vehicle_id=state.vehicle_id, from_tower=from_tower, to_tower=to_tower,
                         is_pingpong=is_pingpong, policy=policy)


def event_row(event: HandoverEvent) -> dict:
    return {
        "t": event.t_s,
        "vehicle_id": event.vehicle_id,
        "from": "" if event.from_tower is None else event.from_tower,
        "to": "" if event.to_tower is None else event.to_tower,
        "is_pingpong": int(event.is_pingpong),
        "policy": event.policy,
    }
