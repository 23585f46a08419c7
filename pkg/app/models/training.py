"""
Training models
"""
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from app.models.gcn import GcnParameters


@dataclass(frozen=True)
class Triplet:
    anchor_row: int      # vehicle
    positive_row: int    # its serving tower
    negative_row: int    # a tower not serving it


@dataclass
class Gradients:
    dW1: np.ndarray
    dW2: np.ndarray
    loss: float
    n_active: int = 0


@dataclass
class TrainerState:
    """Optimizer state that lives across intervals but is not persisted."""
    velocity_W1: Optional[np.ndarray] = None
    velocity_W2: Optional[np.ndarray] = None


@dataclass
class TrainResult:
    params: GcnParameters
    losses: List[float] = field(default_factory=list)
    n_triplets: int = 0
    skipped: bool = False
