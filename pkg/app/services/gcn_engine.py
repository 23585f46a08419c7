"""
GCN Engine – edge-weighted two-layer graph convolution on dense matrices.

    Ñ  = D̂^-1/2 (A⊙W + I) D̂^-1/2
    H1 = ReLU(Ñ X W1)
    E  = Ñ H1 W2            (no activation on the output layer)

Also owns parameter initialisation and the versioned binary parameter file:

    magic "THGCNPRM" | u16 schema_version | u32 d_in | u32 hidden | u32 out
    | 64 ascii bytes feature_spec_hash | W1 row-major <f8 | W2 row-major <f8
"""
import logging
import os
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from app.models.gcn import PARAMS_SCHEMA_VERSION, EmbeddingMatrix, GcnParameters
from app.models.graph import FEATURE_SPEC, FeatureSpec, GraphSnapshot
from app.models.scenario import GcnConfig
from app.utils.errors import DimensionError, ParamsFormatError, ParamsVersionError

logger = logging.getLogger(__name__)

MAGIC = b"THGCNPRM"
_HEADER = struct.Struct("<8sHIII64s")


# ─── adjacency ────────────────────────────────────────────────────────────────

def weighted_adjacency(snapshot: GraphSnapshot) -> np.ndarray:
    """A⊙W: symmetric, zero diagonal."""
    n = snapshot.n_nodes
    a = np.zeros((n, n))
    if len(snapshot.edges):
        rows, cols = snapshot.edges[:, 0], snapshot.edges[:, 1]
        a[rows, cols] = snapshot.edge_weights
        a[cols, rows] = snapshot.edge_weights
    return a


def symmetric_normalize(a_hat: np.ndarray) -> np.ndarray:
    """D^-1/2 Â D^-1/2 with D the row sums of Â. Every row sum must be positive."""
    d_inv_sqrt = 1.0 / np.sqrt(a_hat.sum(axis=1))
    return d_inv_sqrt[:, None] * a_hat * d_inv_sqrt[None, :]


def normalize(a: np.ndarray) -> np.ndarray:
    """Self-loops of weight 1, then symmetric degree normalisation."""
    return symmetric_normalize(a + np.eye(a.shape[0]))


def normalized_adjacency(snapshot: GraphSnapshot) -> np.ndarray:
    return normalize(weighted_adjacency(snapshot))


# ─── forward ──────────────────────────────────────────────────────────────────

@dataclass
class ForwardCache:
    """Intermediates kept for backpropagation."""
    N: np.ndarray
    NX: np.ndarray
    Z1: np.ndarray
    H1: np.ndarray
    NH1: np.ndarray
    E: np.ndarray


def check_dimensions(snapshot: GraphSnapshot, params: GcnParameters) -> None:
    d_in = snapshot.X.shape[1]
    if params.W1.shape[0] != d_in:
        raise DimensionError(f"W1 expects {params.W1.shape[0]} input features, snapshot has {d_in}")
    if params.W2.shape[0] != params.W1.shape[1]:
        raise DimensionError(f"W2 rows ({params.W2.shape[0]}) != W1 columns ({params.W1.shape[1]})")


def forward_cached(snapshot: GraphSnapshot, params: GcnParameters, N: Optional[np.ndarray] = None) -> ForwardCache:
    check_dimensions(snapshot, params)
    if N is None:
        N = normalized_adjacency(snapshot)
    NX = N @ snapshot.X
    Z1 = NX @ params.W1
    H1 = np.maximum(Z1, 0.0)
    NH1 = N @ H1
    E = NH1 @ params.W2
    return ForwardCache(N=N, NX=NX, Z1=Z1, H1=H1, NH1=NH1, E=E)


def forward(snapshot: GraphSnapshot, params: GcnParameters) -> EmbeddingMatrix:
    """Node embeddings for every row of the snapshot."""
    cache = forward_cached(snapshot, params)
    if not np.all(np.isfinite(cache.E)):
        raise FloatingPointError("non-finite embedding values")
    return EmbeddingMatrix(values=cache.E, node_index=dict(snapshot.node_index))


# ─── parameters ───────────────────────────────────────────────────────────────

def glorot_uniform(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


def init_params(rng: np.random.Generator, gcn: GcnConfig = None, spec: FeatureSpec = FEATURE_SPEC) -> GcnParameters:
    gcn = gcn or GcnConfig()
    return GcnParameters(
        W1=glorot_uniform(rng, spec.d_in, gcn.hidden),
        W2=glorot_uniform(rng, gcn.hidden, gcn.out),
        schema_version=PARAMS_SCHEMA_VERSION,
        feature_spec_hash=spec.hash(),
    )


def save_params(params: GcnParameters, path: os.PathLike) -> Path:
    """Write the parameter file atomically (temp file + rename)."""
    path = Path(path)
    header = _HEADER.pack(MAGIC, params.schema_version, params.d_in, params.hidden, params.out,
                          params.feature_spec_hash.encode("ascii"))
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(params.W1, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(params.W2, dtype="<f8").tobytes())
    os.replace(tmp, path)
    return path


def load_params(path: os.PathLike, spec: FeatureSpec = FEATURE_SPEC) -> GcnParameters:
    """Read a parameter file. A missing file raises FileNotFoundError so the
    caller can fall back to fresh initialisation; anything else that is wrong
    with the file is an error."""
    path = Path(path)
    blob = path.read_bytes()
    if len(blob) < _HEADER.size:
        raise ParamsFormatError(f"{path}: truncated header ({len(blob)} bytes)")
    magic, version, d_in, hidden, out, spec_hash = _HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise ParamsFormatError(f"{path}: not a parameter file (bad magic {magic!r})")
    if version != PARAMS_SCHEMA_VERSION:
        raise ParamsVersionError(
            f"{path}: schema_version {version} != expected {PARAMS_SCHEMA_VERSION}",
            expected=str(PARAMS_SCHEMA_VERSION), found=str(version),
        )
    found_hash = spec_hash.decode("ascii", errors="replace")
    expected_hash = spec.hash()
    if found_hash != expected_hash:
        raise ParamsVersionError(
            f"{path}: feature_spec_hash mismatch (file {found_hash}, expected {expected_hash})",
            expected=expected_hash, found=found_hash,
        )
    if d_in != spec.d_in:
        raise ParamsVersionError(f"{path}: d_in {d_in} != feature spec d_in {spec.d_in}",
                                 expected=str(spec.d_in), found=str(d_in))

    n1, n2 = d_in * hidden, hidden * out
    expected_len = _HEADER.size + 8 * (n1 + n2)
    if len(blob) != expected_len:
        raise ParamsFormatError(f"{path}: expected {expected_len} bytes, found {len(blob)}")
    body = np.frombuffer(blob, dtype="<f8", offset=_HEADER.size)
    W1 = body[:n1].reshape(d_in, hidden).astype(np.float64)
    W2 = body[n1:].reshape(hidden, out).astype(np.float64)
    if not (np.all(np.isfinite(W1)) and np.all(np.isfinite(W2))):
        raise ParamsFormatError(f"{path}: non-finite parameter values")
    return GcnParameters(W1=W1, W2=W2, schema_version=version, feature_spec_hash=found_hash)


def load_or_init(path: os.PathLike, rng: np.random.Generator, gcn: GcnConfig = None) -> GcnParameters:
    """Resume from `path` when it exists, otherwise start fresh."""
    try:
        params = load_params(path)
        logger.info("Resumed GCN parameters from %s", path)
        return params
    except FileNotFoundError:
        logger.info("No saved parameters at %s, initialising fresh", path)
        return init_params(rng, gcn)
