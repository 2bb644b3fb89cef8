"""Quadric error algebra on tangent planes.

A quadric stores the sum of squared point-to-plane distances for a set of
oriented planes as the triple (A, b, c):

    error(x) = x^T A x - 2 b^T x + c

where each plane through point s with unit normal n contributes
A += n n^T, b += (n . s) n, c += (n . s)^2.  Sums of quadrics therefore
encode unions of plane sets, and the error is minimized at the solution of
A v = b.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateQuadricError, InvalidInputError

UNIT_NORMAL_TOL = 1e-9
DEFAULT_EPS_RANK = 1e-3


def _as_vec3(x) -> np.ndarray:
    v = np.asarray(x, dtype=np.float64)
    if v.shape != (3,):
        raise InvalidInputError(f"expected a 3-vector, got shape {v.shape}")
    return v


@dataclass(frozen=True)
class PlaneConstraint:
    """Oriented tangent plane through `point` with unit `normal`."""

    point: np.ndarray
    normal: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "point", _as_vec3(self.point))
        object.__setattr__(self, "normal", _as_vec3(self.normal))
        norm = float(np.linalg.norm(self.normal))
        if abs(norm - 1.0) > UNIT_NORMAL_TOL:
            raise InvalidInputError(f"plane normal must be unit length, |n| = {norm!r}")


@dataclass(frozen=True)
class Quadric:
    """Accumulated squared-distance form (A, b, c).

    A is symmetric positive semi-definite; treat instances as immutable.
    """

    A: np.ndarray
    b: np.ndarray
    c: float

    def __post_init__(self):
        A = np.asarray(self.A, dtype=np.float64)
        if A.shape != (3, 3):
            raise InvalidInputError(f"A must be 3x3, got {A.shape}")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", _as_vec3(self.b))
        object.__setattr__(self, "c", float(self.c))

    def __add__(self, other: "Quadric") -> "Quadric":
        return Quadric(self.A + other.A, self.b + other.b, self.c + other.c)

    @staticmethod
    def zero() -> "Quadric":
        return Quadric(np.zeros((3, 3)), np.zeros(3), 0.0)


def plane_quadric(pc: PlaneConstraint) -> Quadric:
    """Quadric of a single plane: rank-1 A = n n^T, b = A s, c = s^T A s."""
    n = pc.normal
    s = pc.point
    A = np.outer(n, n)
    d = float(n @ s)
    return Quadric(A, d * n, d * d)


def quadric_sum(*quadrics: Quadric) -> Quadric:
    """Componentwise sum; evaluate(sum, x) == sum of evaluate(q_i, x)."""
    total = Quadric.zero()
    for q in quadrics:
        total = total + q
    return total


def evaluate(q: Quadric, x) -> float:
    """Summed squared plane distances at x: x^T A x - 2 b^T x + c."""
    v = _as_vec3(x)
    return float(v @ q.A @ v - 2.0 * (q.b @ v) + q.c)


def _eigh3(A: np.ndarray):
    # eigenvalues ascending; symmetrize first so accumulated rounding in A
    # cannot push eigh off the symmetric branch
    return np.linalg.eigh(0.5 * (A + A.T))


def minimizer(q: Quadric, anchor, eps_rank: float = DEFAULT_EPS_RANK) -> np.ndarray:
    """Error-minimizing point, with rank-deficient directions pinned to `anchor`.

    Eigenvalues below eps_rank * lambda_max are treated as zero: the solve is
    restricted to the well-conditioned eigen-subspace and the remaining
    components are copied from the anchor, so flat or edge-like quadrics keep
    their minimizer nearby instead of escaping to infinity.
    """
    a = _as_vec3(anchor)
    w, V = _eigh3(q.A)
    lam_max = float(w[-1])
    if lam_max <= 0.0:
        raise DegenerateQuadricError("quadric has no positive eigenvalue")
    keep = w >= eps_rank * lam_max
    beta = V.T @ q.b
    alpha = V.T @ a
    coeffs = np.where(keep, beta / np.where(keep, w, 1.0), alpha)
    return V @ coeffs


def residual_at_minimizer(q: Quadric, v) -> float:
    """Error value at the full-rank minimizer, via the identity c - b^T v."""
    return float(q.c - q.b @ _as_vec3(v))


def normalize(q: Quadric) -> Quadric:
    """Divide (A, b, c) by the largest eigenvalue of A.

    Removes sampling-density bias while keeping the minimizer (and the
    eigenvalue ratios) unchanged; the result has lambda_max = 1.
    """
    w = np.linalg.eigvalsh(0.5 * (q.A + q.A.T))
    lam_max = float(w[-1])
    if lam_max <= 0.0:
        raise DegenerateQuadricError("cannot normalize a zero quadric")
    return Quadric(q.A / lam_max, q.b / lam_max, q.c / lam_max)


def anisotropy(q: Quadric) -> float:
    """Ratio lambda_2 / lambda_1 of the two largest eigenvalues of A.

    Near 0 on flat patches (one dominant plane direction), near 1 along
    sharp creases and corners.
    """
    w = np.linalg.eigvalsh(0.5 * (q.A + q.A.T))
    lam1 = float(w[2])
    lam2 = max(float(w[1]), 0.0)
    if lam1 <= 0.0:
        raise DegenerateQuadricError("anisotropy of a zero quadric is undefined")
    return min(lam2 / lam1, 1.0)


# ---------------------------------------------------------------------------
# Batched views used by the fitting and meshing hot paths.  Same math as the
# scalar API above, over stacked (n, ...) arrays.
# ---------------------------------------------------------------------------


@dataclass
class QuadricArrays:
    """Struct-of-arrays form of n quadrics."""

    A: np.ndarray  # (n, 3, 3)
    b: np.ndarray  # (n, 3)
    c: np.ndarray  # (n,)

    def __len__(self) -> int:
        return self.A.shape[0]

    def quadric(self, i: int) -> Quadric:
        return Quadric(self.A[i], self.b[i], self.c[i])


def accumulate_plane_quadrics(points, normals, groups, n_groups: int) -> QuadricArrays:
    """Sum single-plane quadrics into `n_groups` bins given per-plane group ids."""
    points = np.asarray(points, dtype=np.float64)
    normals = np.asarray(normals, dtype=np.float64)
    groups = np.asarray(groups, dtype=np.intp)
    d = np.einsum("ij,ij->i", normals, points)
    A = np.zeros((n_groups, 3, 3))
    b = np.zeros((n_groups, 3))
    c = np.zeros(n_groups)
    np.add.at(A, groups, np.einsum("ki,kj->kij", normals, normals))
    np.add.at(b, groups, d[:, None] * normals)
    np.add.at(c, groups, d * d)
    return QuadricArrays(A, b, c)


def batch_evaluate(qa: QuadricArrays, x: np.ndarray) -> np.ndarray:
    """evaluate(q_i, x_i) for matched rows of quadrics and points."""
    x = np.asarray(x, dtype=np.float64)
    quad = np.einsum("ni,nij,nj->n", x, qa.A, x)
    lin = np.einsum("ni,ni->n", qa.b, x)
    return quad - 2.0 * lin + qa.c


def batch_minimizer(qa: QuadricArrays, anchors: np.ndarray,
                    eps_rank: float = DEFAULT_EPS_RANK) -> np.ndarray:
    """Vectorized `minimizer` over stacked quadrics."""
    anchors = np.asarray(anchors, dtype=np.float64)
    A = 0.5 * (qa.A + np.transpose(qa.A, (0, 2, 1)))
    w, V = np.linalg.eigh(A)
    lam_max = w[:, -1]
    if np.any(lam_max <= 0.0):
        raise DegenerateQuadricError("zero quadric in batch")
    keep = w >= eps_rank * lam_max[:, None]
    beta = np.einsum("nij,ni->nj", V, qa.b)
    alpha = np.einsum("nij,ni->nj", V, anchors)
    coeffs = np.where(keep, beta / np.where(keep, w, 1.0), alpha)
    return np.einsum("nij,nj->ni", V, coeffs)


def batch_normalize(qa: QuadricArrays) -> QuadricArrays:
    """Divide each quadric by its largest eigenvalue."""
    A = 0.5 * (qa.A + np.transpose(qa.A, (0, 2, 1)))
    w = np.linalg.eigvalsh(A)
    lam_max = w[:, -1]
    if np.any(lam_max <= 0.0):
        raise DegenerateQuadricError("zero quadric in batch")
    return QuadricArrays(qa.A / lam_max[:, None, None], qa.b / lam_max[:, None],
                         qa.c / lam_max)


def batch_anisotropy(qa: QuadricArrays) -> np.ndarray:
    """lambda_2 / lambda_1 per quadric."""
    A = 0.5 * (qa.A + np.transpose(qa.A, (0, 2, 1)))
    w = np.linalg.eigvalsh(A)
    lam1 = w[:, 2]
    if np.any(lam1 <= 0.0):
        raise DegenerateQuadricError("zero quadric in batch")
    return np.clip(np.maximum(w[:, 1], 0.0) / lam1, 0.0, 1.0)
