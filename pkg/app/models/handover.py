"""
Handover models
"""
from dataclasses import dataclass
from typing import Literal, Optional, Tuple

import numpy as np

DecisionKind = Literal["stay", "handover", "disconnect"]


@dataclass(frozen=True)
class SimilarityMatrix:
    """Cosine similarity, rows = vehicles (by id), columns = towers (by id)."""
    values: np.ndarray
    vehicle_ids: Tuple[int, ...]
    tower_ids: Tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "_rows", {v: i for i, v in enumerate(self.vehicle_ids)})

    def row(self, vehicle_id: int) -> np.ndarray:
        """Similarities of one vehicle, indexed by tower position in `tower_ids`."""
        return self.values[self._rows[vehicle_id]]


@dataclass
class ServingState:
    vehicle_id: int
    current_tower: Optional[int] = None
    previous_tower: Optional[int] = None
    last_ho_ts_s: float = float("-inf")


@dataclass(frozen=True)
class Decision:
    kind: DecisionKind
    to_tower: Optional[int] = None

    @classmethod
    def stay(cls) -> "Decision":
        return cls("stay")

    @classmethod
    def handover(cls, tower: int) -> "Decision":
        return cls("handover", tower)

    @classmethod
    def disconnect(cls) -> "Decision":
        return cls("disconnect")


@dataclass(frozen=True)
class HandoverEvent:
    t_s: float
    vehicle_id: int
    from_tower: Optional[int]
    to_tower: Optional[int]
    is_pingpong: bool = False
    policy: str = ""

    @property
    def is_transition(self) -> bool:
        """Tower-to-tower handover (attachments and disconnects are not)."""
        return self.from_tower is not None and self.to_tower is not None
