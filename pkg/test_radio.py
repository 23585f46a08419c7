import os
import sys

# Ensure usage of the current directory for imports
sys.path.append(os.path.dirname(os.path.abspath(__file__)))

import math

import numpy as np
import pytest

from app.models.mobility import VehicleState
from app.models.scenario import RadioConfig, Tower
from app.services.radio_service import (
    draw_shadowing,
    measure_all,
    measure_matrix,
    path_loss_db,
    sinr_db,
    sinr_from_powers,
    tower_arrays,
    trace_rows,
)
from app.services.scenario_service import rng_stream
from app.utils.helpers import db_to_linear, db_to_linear_scalar, linear_to_db, linear_to_db_scalar

CFG = RadioConfig()


def _vehicle(vid, x, y):
    return VehicleState(id=vid, position=(x, y), speed_mps=10.0, heading=(1.0, 0.0), route=[0, 1])


def _towers():
    return [
        Tower(id=0, position=(0.0, 0.0)),
        Tower(id=1, position=(800.0, 0.0)),
        Tower(id=2, position=(3000.0, 0.0)),
    ]


def test_path_loss_reference_and_slope():
    assert path_loss_db(1.0, CFG) == pytest.approx(47.0)
    assert path_loss_db(10.0, CFG) == pytest.approx(47.0 + 35.0)
    assert path_loss_db(1000.0, CFG) == pytest.approx(47.0 + 105.0)
    # clamped below 1 m
    assert path_loss_db(0.0, CFG) == path_loss_db(1.0, CFG)
    with pytest.raises(ValueError):
        path_loss_db(-1.0, CFG)


def test_path_loss_vectorised_matches_scalar():
    d = np.array([0.5, 1.0, 37.0, 999.0])
    assert np.allclose(path_loss_db(d, CFG), [path_loss_db(float(x), CFG) for x in d])


def test_sinr_noise_limited():
    # -60 dBm over -95 dBm noise
    assert sinr_from_powers(-60.0, [], -95.0) == pytest.approx(35.0)


def test_sinr_interference_limited():
    # one equal-power interferer, negligible noise -> about 0 dB
    assert sinr_from_powers(-50.0, [-50.0], -200.0) == pytest.approx(0.0, abs=1e-9)
    # two equal interferers -> -3 dB
    assert sinr_from_powers(-50.0, [-50.0, -50.0], -200.0) == pytest.approx(-10 * math.log10(2), abs=1e-9)


def test_out_of_range_neither_serves_nor_interferes():
    towers = _towers()
    v = _vehicle(0, 100.0, 0.0)
    assert sinr_db(v, towers[2], towers, CFG) is None
    with_far = sinr_db(v, towers[0], towers, CFG)
    without_far = sinr_db(v, towers[0], towers[:2], CFG)
    assert with_far == pytest.approx(without_far)


def test_matrix_agrees_with_scalar_sinr():
    towers = _towers()
    vehicles = [_vehicle(0, 100.0, 0.0), _vehicle(1, 700.0, 50.0), _vehicle(2, 2500.0, 0.0)]
    shadow = draw_shadowing(rng_stream(0, "shadowing"), 3, 3, CFG)
    xy, tx, rng_m = tower_arrays(towers)
    table = measure_matrix(0.0, np.array([v.position for v in vehicles]), xy, tx, rng_m, CFG, shadow)
    for v in vehicles:
        for t in towers:
            expected = sinr_db(v, t, towers, CFG, shadow)
            got = table.sinr(v.id, t.id)
            if expected is None:
                assert got is None
                assert math.isnan(table.sinr_db[v.id, t.id])
            else:
                assert got == pytest.approx(expected, abs=1e-9)


def test_candidates_are_in_range_towers():
    towers = _towers()
    xy, tx, rng_m = tower_arrays(towers)
    table = measure_matrix(0.0, np.array([[100.0, 0.0], [5000.0, 5000.0]]), xy, tx, rng_m, CFG)
    assert table.candidates(0) == [0, 1]
    assert table.candidates(1) == []
    assert table.sinr(0, None) is None


def test_shadowing_shape_and_zero_sigma():
    shadow = draw_shadowing(rng_stream(1, "shadowing"), 4, 3, CFG)
    assert shadow.shape == (4, 3)
    assert np.all(draw_shadowing(rng_stream(1, "shadowing"), 4, 3, RadioConfig(shadowing_sigma_db=0.0)) == 0.0)


def test_measurements_and_trace_rows():
    towers = _towers()
    measurements = measure_all([_vehicle(0, 100.0, 0.0)], towers, CFG)
    assert [(m.vehicle_id, m.tower_id) for m in measurements] == [(0, 0), (0, 1)]
    assert all(m.in_range for m in measurements)
    xy, tx, rng_m = tower_arrays(towers)
    rows = trace_rows(measure_matrix(2.5, np.array([[100.0, 0.0]]), xy, tx, rng_m, CFG))
    assert {r["t"] for r in rows} == {2.5}
    assert rows[0]["distance"] == pytest.approx(100.0)


def test_extra_interferer_never_raises_sinr():
    rng = np.random.default_rng(17)
    for _ in range(200):
        towers = [Tower(id=i, position=tuple(rng.uniform(0.0, 1500.0, size=2))) for i in range(5)]
        v = _vehicle(0, *rng.uniform(0.0, 1500.0, size=2))
        shadow = draw_shadowing(rng, 1, 5, CFG)
        for k in range(1, 5):
            fewer = sinr_db(v, towers[0], towers[:k], CFG, shadow)
            more = sinr_db(v, towers[0], towers[:k + 1], CFG, shadow)
            if fewer is None:
                assert more is None
            else:
                assert more <= fewer + 1e-12


def test_db_linear_round_trip():
    values_db = np.linspace(-150.0, 60.0, 2101)
    assert np.max(np.abs(linear_to_db(db_to_linear(values_db)) - values_db)) <= 1e-12
    linear = np.geomspace(1e-15, 1e6, 500)
    assert np.allclose(db_to_linear(linear_to_db(linear)), linear, rtol=1e-12, atol=0.0)
    for x in (-123.4, -3.0, 0.0, 26.0, 46.0):
        assert abs(linear_to_db_scalar(db_to_linear_scalar(x)) - x) <= 1e-12
    assert linear_to_db_scalar(0.0) == -math.inf
