"""
Radio measurement models
"""
from dataclasses import dataclass
from typing import List, Optional

import numpy as np


@dataclass(frozen=True)
class LinkMeasurement:
    vehicle_id: int
    tower_id: int
    distance_m: float
    rx_power_dbm: float
    sinr_db: Optional[float]
    in_range: bool


@dataclass(frozen=True)
class LinkTable:
    """Dense vehicle x tower measurement matrices for one sampling instant.

    Vehicle and tower ids are dense (0..n-1), so ids double as row/column
    indices.

    Rows follow vehicle ids, columns follow tower ids. `sinr_db` is NaN
    wherever `in_range` is False.
    """
    t: float
    distance_m: np.ndarray
    rx_power_dbm: np.ndarray
    sinr_db: np.ndarray
    in_range: np.ndarray

    @property
    def shape(self):
        return self.in_range.shape

    def sinr(self, vehicle: int, tower: Optional[int]) -> Optional[float]:
        """SINR of one link, or None when there is no tower or it is out of range."""
        if tower is None or not self.in_range[vehicle, tower]:
            return None
        return float(self.sinr_db[vehicle, tower])

    def candidates(self, vehicle: int) -> List[int]:
        return [int(t) for t in np.flatnonzero(self.in_range[vehicle])]

    def to_measurements(self) -> List[LinkMeasurement]:
        out = []
        for v, t in zip(*np.nonzero(self.in_range)):
            out.append(LinkMeasurement(
                vehicle_id=int(v),
                tower_id=int(t),
                distance_m=float(self.distance_m[v, t]),
                rx_power_dbm=float(self.rx_power_dbm[v, t]),
                sinr_db=float(self.sinr_db[v, t]),
                in_range=True,
            ))
        return out
