"""
Scenario service – random streams, tower placement and the run clock.

Every consumer of randomness (mobility, traffic, shadowing, training,
placement) draws from its own labelled stream so adding a consumer never
shifts another consumer's draws.
"""
import hashlib
import math
from typing import List

import numpy as np

from app.models.scenario import ScenarioConfig, SimClock, Tower

STREAM_LABELS = ("placement", "roads", "mobility", "traffic", "shadowing", "training")

# cell-size fraction a tower may wander away from its cell centre
PLACEMENT_JITTER = 0.10


def _label_key(stream_id: str) -> int:
    """Stable 64-bit key for a label (Python's hash() is salted per process)."""
    digest = hashlib.sha256(stream_id.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def rng_stream(seed: int, stream_id: str) -> np.random.Generator:
    """Independent, reproducible generator for (seed, stream_id).

    Philox is counter-based; the key comes from a SeedSequence over the seed
    and the label so streams never overlap.
    """
    seq = np.random.SeedSequence([int(seed), _label_key(stream_id)])
    return np.random.Generator(np.random.Philox(seq))


# ─── placement ────────────────────────────────────────────────────────────────

def _spread_cells(n_cells: int, n_towers: int) -> List[int]:
    """Pick `n_towers` of `n_cells` evenly spaced in row-major order."""
    if n_towers >= n_cells:
        return list(range(n_cells))
    step = n_cells / n_towers
    return [int(math.floor(i * step + step / 2.0)) for i in range(n_towers)]


def place_towers(config: ScenarioConfig, rng: np.random.Generator) -> List[Tower]:
    """Jittered uniform grid: one tower per chosen cell centre, ±10% jitter.

    The grid is ceil(sqrt(n)) x ceil(sqrt(n)); when it has spare cells the
    used ones are spread evenly so coverage is not packed into the top rows.
    """
    n = config.n_towers
    side = int(math.ceil(math.sqrt(n)))
    cell_w = config.area_width_m / side
    cell_h = config.area_height_m / side

    towers: List[Tower] = []
    for tower_id, cell in enumerate(_spread_cells(side * side, n)):
        row, col = divmod(cell, side)
        cx = (col + 0.5) * cell_w
        cy = (row + 0.5) * cell_h
        jx, jy = rng.uniform(-PLACEMENT_JITTER, PLACEMENT_JITTER, size=2)
        x = min(max(cx + jx * cell_w, 0.0), config.area_width_m)
        y = min(max(cy + jy * cell_h, 0.0), config.area_height_m)
        towers.append(Tower(
            id=tower_id,
            position=(float(x), float(y)),
            tx_power_dbm=config.radio.tower_tx_power_dbm,
            comm_range_m=config.radio.comm_range_m,
        ))
    return towers


def tower_positions(towers: List[Tower]) -> np.ndarray:
    """(n_towers, 2) array in tower-id order."""
    return np.array([t.position for t in sorted(towers, key=lambda t: t.id)], dtype=float)


def make_clock(config: ScenarioConfig) -> SimClock:
    return SimClock(config.tick_s)
