"""
GCN parameter and embedding models
"""
from dataclasses import dataclass, field
from typing import Dict

import numpy as np

from app.models.graph import FEATURE_SPEC, NodeKey

PARAMS_SCHEMA_VERSION = 1


@dataclass
class GcnParameters:
    """Layer weights (theta) plus the metadata that pins them to a feature layout."""
    W1: np.ndarray
    W2: np.ndarray
    schema_version: int = PARAMS_SCHEMA_VERSION
    feature_spec_hash: str = field(default_factory=FEATURE_SPEC.hash)

    @property
    def d_in(self) -> int:
        return int(self.W1.shape[0])

    @property
    def hidden(self) -> int:
        return int(self.W1.shape[1])

    @property
    def out(self) -> int:
        return int(self.W2.shape[1])

    def copy(self) -> "GcnParameters":
        return GcnParameters(self.W1.copy(), self.W2.copy(), self.schema_version, self.feature_spec_hash)

    def allclose(self, other: "GcnParameters", atol: float = 0.0) -> bool:
        return (self.W1.shape == other.W1.shape and self.W2.shape == other.W2.shape
                and np.allclose(self.W1, other.W1, rtol=0.0, atol=atol)
                and np.allclose(self.W2, other.W2, rtol=0.0, atol=atol))


@dataclass(frozen=True)
class EmbeddingMatrix:
    """Final-layer node embeddings, rows aligned with the snapshot's node_index."""
    values: np.ndarray
    node_index: Dict[NodeKey, int]

    @property
    def width(self) -> int:
        return int(self.values.shape[1])

    def row(self, key: NodeKey) -> np.ndarray:
        return self.values[self.node_index[key]]
