"""
Training Service – unsupervised incremental training with triplet loss.

Per epoch: sample one triplet per served vehicle, run the forward pass,
take the mean hinge loss

    L = mean max(‖e_a − e_p‖ − ‖e_a − e_n‖ + α, 0)

backpropagate analytically through both layers and take one full-batch
gradient step. Only the latest snapshot is trained on.
"""
import logging
import math
import os
from typing import List, Optional, Sequence, Tuple

import numpy as np

from app.models.gcn import GcnParameters
from app.models.graph import GraphSnapshot
from app.models.scenario import TrainConfig
from app.models.training import Gradients, TrainerState, TrainResult, Triplet
from app.services.gcn_engine import ForwardCache, forward_cached, normalized_adjacency, save_params

logger = logging.getLogger(__name__)

LOSS_TRACE_COLUMNS = ["interval_ts", "epoch", "mean_loss", "n_triplets"]


# ─── sampling ─────────────────────────────────────────────────────────────────

def sample_triplets(snapshot: GraphSnapshot, rng: np.random.Generator) -> List[Triplet]:
    """One triplet per served vehicle, in vehicle-row order.

    The negative is drawn uniformly from towers that do not serve the vehicle,
    restricted to out-of-range towers whenever the vehicle has any.
    """
    if snapshot.n_towers < 2:
        return []
    tower_rows = snapshot.tower_rows()
    triplets: List[Triplet] = []
    for vehicle_id in snapshot.vehicle_ids:
        tower_id = snapshot.serving.get(vehicle_id)
        if tower_id is None:
            continue
        anchor = snapshot.vehicle_row(vehicle_id)
        positive = snapshot.tower_row(tower_id)
        linked = set(snapshot.neighbours(anchor).tolist())
        others = [int(r) for r in tower_rows if r != positive]
        unlinked = [r for r in others if r not in linked]
        pool = unlinked or others
        negative = pool[int(rng.integers(0, len(pool)))]
        triplets.append(Triplet(anchor, positive, negative))
    return triplets


def _rows(triplets: Sequence[Triplet]) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    a = np.fromiter((t.anchor_row for t in triplets), dtype=np.int64, count=len(triplets))
    p = np.fromiter((t.positive_row for t in triplets), dtype=np.int64, count=len(triplets))
    n = np.fromiter((t.negative_row for t in triplets), dtype=np.int64, count=len(triplets))
    return a, p, n


# ─── loss ─────────────────────────────────────────────────────────────────────

def triplet_loss(e_a: np.ndarray, e_p: np.ndarray, e_n: np.ndarray, alpha: float) -> float:
    """Single-triplet hinge loss with Euclidean distance."""
    d_ap = float(np.linalg.norm(np.asarray(e_a, dtype=float) - np.asarray(e_p, dtype=float)))
    d_an = float(np.linalg.norm(np.asarray(e_a, dtype=float) - np.asarray(e_n, dtype=float)))
    return max(d_ap - d_an + alpha, 0.0)


def mean_triplet_loss(E: np.ndarray, triplets: Sequence[Triplet], alpha: float) -> float:
    if not triplets:
        return 0.0
    a, p, n = _rows(triplets)
    d_ap = np.linalg.norm(E[a] - E[p], axis=1)
    d_an = np.linalg.norm(E[a] - E[n], axis=1)
    return float(np.mean(np.maximum(d_ap - d_an + alpha, 0.0)))


def _unit_rows(diff: np.ndarray) -> np.ndarray:
    """diff / ‖diff‖ per row; coincident points take subgradient 0."""
    norm = np.linalg.norm(diff, axis=1, keepdims=True)
    safe = np.where(norm > 0.0, norm, 1.0)
    return np.where(norm > 0.0, diff / safe, 0.0)


def embedding_gradient(E: np.ndarray, triplets: Sequence[Triplet], alpha: float) -> Tuple[np.ndarray, float, int]:
    """dL/dE for the mean loss, plus the loss and the number of active triplets."""
    dE = np.zeros_like(E)
    if not triplets:
        return dE, 0.0, 0
    a, p, n = _rows(triplets)
    diff_ap = E[a] - E[p]
    diff_an = E[a] - E[n]
    margins = np.linalg.norm(diff_ap, axis=1) - np.linalg.norm(diff_an, axis=1) + alpha
    active = margins > 0.0
    loss = float(np.mean(np.maximum(margins, 0.0)))
    if not np.any(active):
        return dE, loss, 0
    scale = 1.0 / len(triplets)
    g_p = _unit_rows(diff_ap[active]) * scale
    g_n = _unit_rows(diff_an[active]) * scale
    np.add.at(dE, a[active], g_p - g_n)
    np.add.at(dE, p[active], -g_p)
    np.add.at(dE, n[active], g_n)
    return dE, loss, int(active.sum())


# ─── backward ─────────────────────────────────────────────────────────────────

def backward(snapshot: GraphSnapshot, params: GcnParameters, triplets: Sequence[Triplet], alpha: float = 1.0,
             cache: Optional[ForwardCache] = None) -> Gradients:
    """Exact gradients of the mean triplet loss w.r.t. W1 and W2."""
    if cache is None:
        cache = forward_cached(snapshot, params)
    dE, loss, n_active = embedding_gradient(cache.E, triplets, alpha)
    if n_active == 0:
        return Gradients(np.zeros_like(params.W1), np.zeros_like(params.W2), loss, 0)
    # E = N H1 W2
    dW2 = cache.NH1.T @ dE
    # Ñ is symmetric, so Ñᵀ dE = Ñ dE
    dH1 = cache.N @ (dE @ params.W2.T)
    dZ1 = dH1 * (cache.Z1 > 0.0)
    dW1 = cache.NX.T @ dZ1
    return Gradients(dW1, dW2, loss, n_active)


def sgd_step(params: GcnParameters, grads: Gradients, cfg: TrainConfig,
             state: Optional[TrainerState] = None) -> GcnParameters:
    """θ ← θ − lr·∇θ (heavy-ball momentum when cfg.momentum > 0)."""
    if cfg.momentum > 0.0 and state is not None:
        if state.velocity_W1 is None:
            state.velocity_W1 = np.zeros_like(params.W1)
            state.velocity_W2 = np.zeros_like(params.W2)
        state.velocity_W1 = cfg.momentum * state.velocity_W1 + grads.dW1
        state.velocity_W2 = cfg.momentum * state.velocity_W2 + grads.dW2
        step1, step2 = state.velocity_W1, state.velocity_W2
    else:
        step1, step2 = grads.dW1, grads.dW2
    return GcnParameters(
        W1=params.W1 - cfg.learning_rate * step1,
        W2=params.W2 - cfg.learning_rate * step2,
        schema_version=params.schema_version,
        feature_spec_hash=params.feature_spec_hash,
    )


def train_interval(snapshot: GraphSnapshot, params: GcnParameters, cfg: TrainConfig, rng: np.random.Generator,
                   state: Optional[TrainerState] = None, params_path: Optional[os.PathLike] = None) -> TrainResult:
    """`cfg.epochs` passes of sample → forward → loss → backward → step.

    Returns the updated parameters and the per-epoch mean loss (measured
    before each step). Saves to `params_path` afterwards when given.
    """
    if cfg.epochs == 0:
        return TrainResult(params=params, losses=[], n_triplets=0, skipped=False)

    N = normalized_adjacency(snapshot)
    losses: List[float] = []
    n_triplets = 0
    current = params
    for epoch in range(cfg.epochs):
        triplets = sample_triplets(snapshot, rng)
        if not triplets:
            logger.warning("No triplets at t=%.1fs, skipping training interval", snapshot.timestamp_s)
            return TrainResult(params=params, losses=[], n_triplets=0, skipped=True)
        n_triplets = len(triplets)
        cache = forward_cached(snapshot, current, N=N)
        grads = backward(snapshot, current, triplets, cfg.margin, cache=cache)
        if not math.isfinite(grads.loss):
            raise FloatingPointError(f"non-finite triplet loss at epoch {epoch}")
        losses.append(grads.loss)
        current = sgd_step(current, grads, cfg, state)

    logger.debug("Trained t=%.1fs: %d triplets, loss %.4f -> %.4f",
                 snapshot.timestamp_s, n_triplets, losses[0], losses[-1])
    if params_path is not None:
        save_params(current, params_path)
    return TrainResult(params=current, losses=losses, n_triplets=n_triplets, skipped=False)


def loss_rows(interval_ts: float, result: TrainResult) -> List[dict]:
    return [
        {"interval_ts": interval_ts, "epoch": i, "mean_loss": loss, "n_triplets": result.n_triplets}
        for i, loss in enumerate(result.losses)
    ]
