"""Generator-point fitting: Chamfer optimization and per-cell accumulation.

Points start on a regular grid, descend the bi-directional Chamfer distance
to the input sampling with Adam, and are then enriched per Voronoi cell with
the mean sample normal and the summed tangent-plane quadric.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .errors import DivergenceError, InvalidInputError
from .parallel import worker_count
from .quadric import Quadric, accumulate_plane_quadrics, batch_minimizer
from .sampling import SampleSet

DEGENERATE_NORMAL_TOL = 1e-6


@dataclass(frozen=True)
class FitConfig:
    """Hyper-parameters of the point optimization."""

    grid_res: int
    epochs: int = 400
    learning_rate: float = 0.01
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    seed: int = 0
    # learning rate is multiplied by 0.1 once this fraction of epochs has run
    decay_fraction: float = 0.75

    def __post_init__(self):
        if self.grid_res < 1:
            raise InvalidInputError("grid_res must be >= 1")
        if self.epochs < 1:
            raise InvalidInputError("epochs must be >= 1")
        if self.learning_rate <= 0.0:
            raise InvalidInputError("learning_rate must be positive")


@dataclass
class PoNQElement:
    """One surviving generator: position, mean normal, quadric, optimal vertex."""

    p: np.ndarray
    n: np.ndarray
    q: Quadric
    v_star: np.ndarray
    sample_count: int

    def __post_init__(self):
        if self.sample_count < 1:
            raise InvalidInputError("element must be supported by >= 1 sample")


def default_learning_rate(bbox_min, bbox_max, res: int) -> float:
    """A quarter grid cell per step: sub-cell moves early, and small enough
    that the Chamfer loss descends with almost no oscillation."""
    extent = float(np.max(np.asarray(bbox_max) - np.asarray(bbox_min)))
    return 0.25 * extent / res


def init_grid(bbox_min, bbox_max, res: int) -> np.ndarray:
    """res^3 points at the cell centers of a regular grid over the box."""
    lo = np.asarray(bbox_min, dtype=np.float64)
    hi = np.asarray(bbox_max, dtype=np.float64)
    if not np.all(hi > lo):
        raise InvalidInputError("bbox_max must exceed bbox_min componentwise")
    axes = [lo[d] + (hi[d] - lo[d]) * (np.arange(res) + 0.5) / res for d in range(3)]
    gx, gy, gz = np.meshgrid(*axes, indexing="ij")
    return np.stack([gx.ravel(), gy.ravel(), gz.ravel()], axis=1)


def _check_nonempty(P, S):
    if len(P) == 0 or len(S) == 0:
        raise InvalidInputError("point and sample sets must be non-empty")


def chamfer(P: np.ndarray, S: np.ndarray) -> float:
    """Bi-directional Chamfer distance between point sets (squared distances,
    each direction averaged over its own set)."""
    P = np.asarray(P, dtype=np.float64).reshape(-1, 3)
    S = np.asarray(S, dtype=np.float64).reshape(-1, 3)
    _check_nonempty(P, S)
    d_ps, _ = cKDTree(S).query(P, workers=worker_count())
    d_sp, _ = cKDTree(P).query(S, workers=worker_count())
    return float(np.mean(d_ps ** 2) + np.mean(d_sp ** 2))


def chamfer_gradient(P: np.ndarray, S: np.ndarray) -> tuple[float, np.ndarray]:
    """Loss and its exact gradient w.r.t. P, with nearest neighbors held fixed."""
    P = np.asarray(P, dtype=np.float64).reshape(-1, 3)
    S = np.asarray(S, dtype=np.float64).reshape(-1, 3)
    _check_nonempty(P, S)
    d_ps, nn_ps = cKDTree(S).query(P, workers=worker_count())
    d_sp, nn_sp = cKDTree(P).query(S, workers=worker_count())
    loss = float(np.mean(d_ps ** 2) + np.mean(d_sp ** 2))

    grad = (2.0 / len(P)) * (P - S[nn_ps])
    pull = np.zeros_like(P)
    np.add.at(pull, nn_sp, P[nn_sp] - S)
    grad += (2.0 / len(S)) * pull
    return loss, grad


def optimize_points(P0: np.ndarray, S: SampleSet | np.ndarray,
                    cfg: FitConfig, history: list | None = None) -> np.ndarray:
    """Adam descent of the Chamfer loss; returns the best positions seen.

    Pass a list as `history` to collect the per-epoch loss values.
    """
    P = np.array(P0, dtype=np.float64).reshape(-1, 3)
    targets = S.positions if isinstance(S, SampleSet) else np.asarray(S, dtype=np.float64)
    _check_nonempty(P, targets)

    m = np.zeros_like(P)
    v = np.zeros_like(P)
    decay_at = int(cfg.epochs * cfg.decay_fraction)
    best_loss = np.inf
    best_P = P.copy()

    for epoch in range(cfg.epochs):
        loss, grad = chamfer_gradient(P, targets)
        if not np.isfinite(loss):
            raise DivergenceError(epoch)
        if history is not None:
            history.append(loss)
        if loss < best_loss:
            best_loss = loss
            best_P = P.copy()
        lr = cfg.learning_rate * (0.1 if epoch >= decay_at else 1.0)
        m = cfg.adam_beta1 * m + (1.0 - cfg.adam_beta1) * grad
        v = cfg.adam_beta2 * v + (1.0 - cfg.adam_beta2) * grad ** 2
        m_hat = m / (1.0 - cfg.adam_beta1 ** (epoch + 1))
        v_hat = v / (1.0 - cfg.adam_beta2 ** (epoch + 1))
        P = P - lr * m_hat / (np.sqrt(v_hat) + cfg.adam_eps)

    if chamfer(P, targets) <= best_loss:
        return P
    return best_P


def assign_voronoi(P: np.ndarray, S: SampleSet | np.ndarray) -> np.ndarray:
    """Index of the nearest generator per sample; ties go to the lowest index.

    Matches brute-force nearest search exactly: candidate neighbors come from
    a KD-tree, and any group of equidistant candidates is resolved by index.
    """
    P = np.asarray(P, dtype=np.float64).reshape(-1, 3)
    pts = S.positions if isinstance(S, SampleSet) else np.asarray(S, dtype=np.float64)
    pts = pts.reshape(-1, 3)
    if len(P) == 0:
        raise InvalidInputError("generator set must be non-empty")
    if len(pts) == 0:
        return np.zeros(0, dtype=np.intp)

    k = min(len(P), 8)
    tree = cKDTree(P)
    dist, idx = tree.query(pts, k=k, workers=worker_count())
    if k == 1:
        return np.asarray(idx, dtype=np.intp).ravel()

    tied = dist == dist[:, :1]
    pick = np.where(tied, idx, len(P)).min(axis=1)

    # all k candidates tied: fall back to a full scan for those samples
    unresolved = tied.all(axis=1)
    if unresolved.any():
        for row in np.flatnonzero(unresolved):
            d2 = np.einsum("ij,ij->i", P - pts[row], P - pts[row])
            pick[row] = np.flatnonzero(d2 == d2.min())[0]
    return pick.astype(np.intp)


def accumulate(P: np.ndarray, S: SampleSet, assignment: np.ndarray) -> list[PoNQElement]:
    """Per non-empty Voronoi cell: mean normal, summed quadric, optimal vertex.

    Cells whose sample normals cancel out (norm of the mean below tolerance)
    take the normal of their sample closest to the generator instead.
    """
    P = np.asarray(P, dtype=np.float64).reshape(-1, 3)
    assignment = np.asarray(assignment, dtype=np.intp)
    if len(assignment) != len(S):
        raise InvalidInputError("assignment length must match sample count")

    counts = np.bincount(assignment, minlength=len(P))
    occupied = np.flatnonzero(counts > 0)
    if len(occupied) == 0:
        return []
    dense = -np.ones(len(P), dtype=np.intp)
    dense[occupied] = np.arange(len(occupied))
    groups = dense[assignment]

    qa = accumulate_plane_quadrics(S.positions, S.normals, groups, len(occupied))

    normal_sum = np.zeros((len(occupied), 3))
    np.add.at(normal_sum, groups, S.normals)
    norms = np.linalg.norm(normal_sum, axis=1)
    degenerate = norms < DEGENERATE_NORMAL_TOL
    for cell in np.flatnonzero(degenerate):
        members = np.flatnonzero(groups == cell)
        gen = P[occupied[cell]]
        d2 = np.einsum("ij,ij->i", S.positions[members] - gen, S.positions[members] - gen)
        normal_sum[cell] = S.normals[members[np.argmin(d2)]]
        norms[cell] = np.linalg.norm(normal_sum[cell])
    mean_normals = normal_sum / norms[:, None]

    anchors = P[occupied]
    v_star = batch_minimizer(qa, anchors)

    return [
        PoNQElement(
            p=anchors[i].copy(),
            n=mean_normals[i].copy(),
            q=qa.quadric(i),
            v_star=v_star[i].copy(),
            sample_count=int(counts[occupied[i]]),
        )
        for i in range(len(occupied))
    ]


def fit_elements(S: SampleSet, cfg: FitConfig,
                 bbox_min=None, bbox_max=None) -> tuple[list[PoNQElement], np.ndarray]:
    """Full fit: grid init, Chamfer optimization, Voronoi accumulation.

    Returns the elements and the optimized generator positions.
    """
    lo = np.min(S.positions, axis=0) if bbox_min is None else np.asarray(bbox_min, float)
    hi = np.max(S.positions, axis=0) if bbox_max is None else np.asarray(bbox_max, float)
    span = hi - lo
    # guard flat shapes: give collapsed axes a sliver of thickness
    flat = span <= 0.0
    if flat.any():
        pad = 0.05 * max(float(span.max()), 1.0)
        lo = lo - pad * flat
        hi = hi + pad * flat
    P0 = init_grid(lo, hi, cfg.grid_res)
    P = optimize_points(P0, S, cfg)
    assignment = assign_voronoi(P, S)
    return accumulate(P, S, assignment), P
