import os
import sys

# Ensure usage of the current directory for imports
sys.path.append(os.path.dirname(os.path.abspath(__file__)))

import math

import numpy as np
import pytest

from app.models.gcn import EmbeddingMatrix
from app.models.handover import Decision, ServingState
from app.models.radio import LinkTable
from app.models.scenario import ScenarioConfig
from app.services.handover_logic import (
    cosine,
    decide_max_sinr,
    decide_th_gcn,
    effective_hysteresis,
    event_row,
    max_sinr_ranking,
    rank_top3,
    record_event,
    similarity_matrix,
)

CFG = ScenarioConfig()


def _links(sinr_rows, in_range=None):
    sinr = np.array(sinr_rows, dtype=float)
    if in_range is None:
        in_range = np.isfinite(sinr)
    in_range = np.asarray(in_range, dtype=bool)
    sinr = np.where(in_range, sinr, np.nan)
    zeros = np.zeros_like(sinr)
    return LinkTable(t=0.0, distance_m=zeros, rx_power_dbm=zeros, sinr_db=sinr, in_range=in_range)


# ─── similarity & ranking ─────────────────────────────────────────────────────

def test_cosine_basics():
    assert cosine(np.array([1.0, 0.0]), np.array([2.0, 0.0])) == pytest.approx(1.0)
    assert cosine(np.array([1.0, 0.0]), np.array([-1.0, 0.0])) == pytest.approx(-1.0)
    assert cosine(np.array([1.0, 0.0]), np.array([0.0, 3.0])) == pytest.approx(0.0)
    assert cosine(np.zeros(3), np.ones(3)) == 0.0


def test_similarity_matrix_matches_pairwise_cosine(make_snapshot):
    rng = np.random.default_rng(0)
    snap = make_snapshot(rng, 3, 4)
    E = rng.normal(size=(7, 5))
    E[2] = 0.0
    sims = similarity_matrix(EmbeddingMatrix(values=E, node_index=snap.node_index), snap)
    assert sims.values.shape == (3, 4)
    for v in range(3):
        for t in range(4):
            assert sims.row(v)[t] == pytest.approx(cosine(E[v], E[3 + t]), abs=1e-12)
    assert np.all(sims.row(2) == 0.0)


def test_rank_top3_matches_brute_force_sort():
    rng = np.random.default_rng(42)
    for _ in range(1000):
        n = int(rng.integers(1, 12))
        # coarse values so ties are common
        row = np.round(rng.uniform(-1.0, 1.0, size=n), 1)
        expected = sorted(range(n), key=lambda t: (-row[t], t))[:3]
        assert rank_top3(row, range(n)) == expected


def test_rank_top3_only_in_range_and_short_lists():
    row = np.array([0.9, 0.8, 0.7, 0.6, 0.5])
    assert rank_top3(row, [4, 1, 3]) == [1, 3, 4]
    assert rank_top3(row, [2]) == [2]
    assert rank_top3(row, []) == []


def test_rank_top3_ties_break_on_sinr_then_id():
    row = np.array([0.5, 0.5, 0.5, 0.1])
    sinr = np.array([3.0, 9.0, 3.0, 20.0])
    assert rank_top3(row, range(4), sinr) == [1, 0, 2]


def test_max_sinr_ranking():
    links = _links([[5.0, np.nan, 12.0, 12.0]])
    assert max_sinr_ranking(0, links) == [2, 3, 0]


# ─── decisions ────────────────────────────────────────────────────────────────

def test_unserved_attaches_to_best_valid_candidate():
    links = _links([[-8.0, 4.0, 1.0]])
    state = ServingState(vehicle_id=0)
    assert decide_max_sinr(0, links, state, CFG) == Decision.handover(1)
    # ranked first but below min_sinr: skip to the next one that qualifies
    assert decide_th_gcn(0, [0, 2], links, state, CFG) == Decision.handover(2)


def test_unserved_stays_unserved_without_candidate():
    links = _links([[-9.0, np.nan]])
    assert decide_max_sinr(0, links, ServingState(vehicle_id=0), CFG) == Decision.stay()


def test_hysteresis_gate():
    state = ServingState(vehicle_id=0, current_tower=0)
    # 2.5 dB better is inside the 3 dB margin
    assert decide_max_sinr(0, _links([[10.0, 12.5]]), state, CFG) == Decision.stay()
    # exactly the margin is not enough
    assert decide_max_sinr(0, _links([[10.0, 13.0]]), state, CFG) == Decision.stay()
    assert decide_max_sinr(0, _links([[10.0, 13.5]]), state, CFG) == Decision.handover(1)


def test_weak_link_moves_to_better_tower_below_floor():
    state = ServingState(vehicle_id=0, current_tower=0)
    # -6 > -10 + 3: hand over even though both are under min_sinr
    assert decide_max_sinr(0, _links([[-10.0, -6.0]]), state, CFG) == Decision.handover(1)
    assert decide_th_gcn(0, [1, 0], _links([[-10.0, -6.0]]), state, CFG) == Decision.handover(1)
    # no candidate clears the margin: the weak link is dropped
    assert decide_max_sinr(0, _links([[-10.0, -8.0]]), state, CFG) == Decision.disconnect()


def test_lost_link_hands_over_or_disconnects():
    state = ServingState(vehicle_id=0, current_tower=0)
    assert decide_max_sinr(0, _links([[np.nan, 2.0]]), state, CFG) == Decision.handover(1)
    assert decide_max_sinr(0, _links([[np.nan, -7.0]]), state, CFG) == Decision.disconnect()
    assert decide_max_sinr(0, _links([[-6.0, np.nan]]), state, CFG) == Decision.disconnect()


def test_th_gcn_falls_back_when_omega_has_no_measurement():
    links = _links([[np.nan, 6.0, 2.0]])
    state = ServingState(vehicle_id=0)
    assert decide_th_gcn(0, [0], links, state, CFG) == Decision.handover(1)
    assert decide_th_gcn(0, [], links, state, CFG) == Decision.handover(1)


def test_th_gcn_follows_embedding_rank_not_sinr():
    links = _links([[10.0, 25.0, 15.0]])
    state = ServingState(vehicle_id=0, current_tower=0)
    # best by similarity is tower 2, which clears the margin
    assert decide_th_gcn(0, [2, 1], links, state, CFG) == Decision.handover(2)
    # best by similarity is the serving tower: stay
    assert decide_th_gcn(0, [0, 1], links, state, CFG) == Decision.stay()


def test_adaptive_hysteresis_widens_with_speed():
    cfg = ScenarioConfig(adaptive_hysteresis=True)
    assert effective_hysteresis(cfg, 0.0) == pytest.approx(3.0)
    assert effective_hysteresis(cfg, 25.0) == pytest.approx(4.5)
    assert effective_hysteresis(cfg, 500.0) == pytest.approx(6.0)
    assert effective_hysteresis(CFG, 25.0) == 3.0
    state = ServingState(vehicle_id=0, current_tower=0)
    assert decide_max_sinr(0, _links([[10.0, 14.0]]), state, cfg, speed_mps=25.0) == Decision.stay()
    assert decide_max_sinr(0, _links([[10.0, 14.0]]), state, cfg, speed_mps=0.0) == Decision.handover(1)


def test_infinite_hysteresis_never_hands_over():
    cfg = ScenarioConfig(hysteresis_db=math.inf)
    rng = np.random.default_rng(5)
    state = ServingState(vehicle_id=0)
    transitions = 0
    for step in range(2000):
        sinr = rng.uniform(-2.0, 30.0, size=(1, 5))
        decision = decide_max_sinr(0, _links(sinr), state, cfg)
        event = record_event(state, decision, step * 0.5, 2.0)
        if event is not None and event.is_transition:
            transitions += 1
    assert transitions == 0
    assert state.current_tower is not None


def _random_state(rng, n_towers):
    sinr = rng.uniform(-15.0, 30.0, size=n_towers)
    sinr[rng.uniform(size=n_towers) < 0.3] = np.nan
    # coarse values so SINR ties occur
    sinr = np.round(sinr)
    current = None if rng.uniform() < 0.25 else int(rng.integers(0, n_towers))
    return _links([sinr]), ServingState(vehicle_id=0, current_tower=current)


def test_sinr_ordered_similarity_reduces_to_max_sinr():
    rng = np.random.default_rng(123)
    for _ in range(1000):
        n_towers = int(rng.integers(1, 8))
        links, state = _random_state(rng, n_towers)
        sim_row = np.nan_to_num(links.sinr_db[0], nan=-np.inf)
        omega = rank_top3(sim_row, links.candidates(0), links.sinr_db[0])
        assert decide_th_gcn(0, omega, links, state, CFG) == decide_max_sinr(0, links, state, CFG)


# ─── bookkeeping ──────────────────────────────────────────────────────────────

def test_record_event_and_pingpong():
    state = ServingState(vehicle_id=4)
    attach = record_event(state, Decision.handover(0), 0.0, 2.0, policy="max_sinr")
    assert attach.from_tower is None and not attach.is_transition and not attach.is_pingpong

    assert record_event(state, Decision.stay(), 0.5, 2.0) is None
    first = record_event(state, Decision.handover(1), 1.0, 2.0)
    assert first.is_transition and not first.is_pingpong
    back = record_event(state, Decision.handover(0), 2.5, 2.0)
    assert back.is_pingpong
    later = record_event(state, Decision.handover(1), 10.0, 2.0)
    assert later.is_transition and not later.is_pingpong

    drop = record_event(state, Decision.disconnect(), 11.0, 2.0)
    assert drop.to_tower is None and not drop.is_transition
    assert state.current_tower is None and state.previous_tower == 1


def test_pingpong_window_is_inclusive():
    state = ServingState(vehicle_id=0, current_tower=1, previous_tower=0, last_ho_ts_s=3.0)
    assert record_event(state, Decision.handover(0), 5.0, 2.0).is_pingpong


def test_event_row_blank_for_no_tower():
    state = ServingState(vehicle_id=2)
    row = event_row(record_event(state, Decision.handover(3), 1.5, 2.0, policy="th_gcn"))
    assert row == {"t": 1.5, "vehicle_id": 2, "from": "", "to": 3, "is_pingpong": 0, "policy": "th_gcn"}
