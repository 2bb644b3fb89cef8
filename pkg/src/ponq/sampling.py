"""Oriented surface, sharp-edge, and boundary samplings of triangle meshes.

All samplers are deterministic under a fixed seed (counter-based Philox
streams) and weight triangles by area / edges by length.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptySurfaceError, InvalidInputError, NoBoundaryError
from .mesh import DEGENERATE_AREA_TOL, TriMesh


@dataclass
class SampleSet:
    """Sample positions with matching unit normals, stored as (n, 3) arrays."""

    positions: np.ndarray
    normals: np.ndarray

    def __post_init__(self):
        self.positions = np.ascontiguousarray(self.positions, dtype=np.float64).reshape(-1, 3)
        self.normals = np.ascontiguousarray(self.normals, dtype=np.float64).reshape(-1, 3)
        if len(self.positions) != len(self.normals):
            raise InvalidInputError("positions and normals length mismatch")

    def __len__(self) -> int:
        return len(self.positions)


@dataclass(frozen=True)
class SurfaceSample:
    """Single oriented sample; arrays in SampleSet are the bulk form."""

    position: np.ndarray
    normal: np.ndarray


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed))


def default_sample_count(res: int) -> int:
    """Sampling density used for a fit at grid resolution `res`."""
    return int(round(1024.0 * res ** (2.0 / 3.0)))


def sample_surface(mesh: TriMesh, count: int, seed: int = 0) -> SampleSet:
    """`count` area-weighted samples; each takes its triangle's unit normal.

    Degenerate triangles (area below tolerance) are never sampled.
    """
    if count <= 0:
        raise InvalidInputError("count must be positive")
    if mesh.n_triangles == 0:
        raise EmptySurfaceError("mesh has no triangles")
    areas = mesh.face_areas()
    usable = areas > DEGENERATE_AREA_TOL
    if not usable.any():
        raise EmptySurfaceError("all triangles are degenerate")

    tri_ids = np.flatnonzero(usable)
    weights = areas[tri_ids]
    cum = np.cumsum(weights)
    rng = _rng(seed)
    picks = tri_ids[np.searchsorted(cum, rng.random(count) * cum[-1], side="right")
                    .clip(0, len(tri_ids) - 1)]

    # sqrt trick gives uniform barycentric coordinates
    r1 = np.sqrt(rng.random(count))
    r2 = rng.random(count)
    w0 = 1.0 - r1
    w1 = r1 * (1.0 - r2)
    w2 = r1 * r2
    tri = mesh.vertices[mesh.triangles[picks]]
    positions = w0[:, None] * tri[:, 0] + w1[:, None] * tri[:, 1] + w2[:, None] * tri[:, 2]
    normals = mesh.face_normals()[picks]
    return SampleSet(positions, normals)


def sharp_edges(mesh: TriMesh, angle_threshold: float) -> np.ndarray:
    """(k, 2) vertex index pairs of interior edges whose face normals tilt
    by more than `angle_threshold` radians.  Edges with other than two
    incident triangles (boundary or non-manifold) have no dihedral and are
    skipped."""
    normals = mesh.face_normals()
    out = []
    for (u, v), tris in mesh.edges().items():
        if len(tris) != 2:
            continue
        cosang = float(np.clip(normals[tris[0]] @ normals[tris[1]], -1.0, 1.0))
        if np.arccos(cosang) > angle_threshold:
            out.append((u, v))
    return np.array(sorted(out), dtype=np.int64).reshape(-1, 2)


def _sample_on_edges(vertices, edge_list, count, rng) -> tuple[np.ndarray, np.ndarray]:
    """Length-weighted positions on the given edges; returns (positions, edge ids)."""
    a = vertices[edge_list[:, 0]]
    b = vertices[edge_list[:, 1]]
    lengths = np.linalg.norm(b - a, axis=1)
    cum = np.cumsum(lengths)
    if cum[-1] <= 0.0:
        raise InvalidInputError("edges have zero total length")
    picks = np.searchsorted(cum, rng.random(count) * cum[-1], side="right") \
        .clip(0, len(edge_list) - 1)
    t = rng.random(count)
    return a[picks] + t[:, None] * (b[picks] - a[picks]), picks


def sample_sharp_edges(mesh: TriMesh, angle_threshold: float, count: int,
                       seed: int = 0) -> np.ndarray:
    """`count` length-weighted points on sharp edges; empty when none qualify."""
    if count <= 0:
        raise InvalidInputError("count must be positive")
    edges = sharp_edges(mesh, angle_threshold)
    if len(edges) == 0:
        return np.zeros((0, 3))
    positions, _ = _sample_on_edges(mesh.vertices, edges, count, _rng(seed))
    return positions


def sample_boundary(mesh: TriMesh, count: int, seed: int = 0) -> tuple[SampleSet, SampleSet]:
    """Boundary-edge sampling plus a copy with normals rotated 90 degrees.

    The first set carries the incident triangle's normal.  The second set
    rotates each normal a quarter turn about the local edge tangent, choosing
    the sign that points away from the surface interior (negative dot with
    the direction from the sample toward the incident triangle's centroid).
    """
    if count <= 0:
        raise InvalidInputError("count must be positive")
    boundary = [(e, tris[0]) for e, tris in sorted(mesh.edges().items())
                if len(tris) == 1]
    if not boundary:
        raise NoBoundaryError("mesh is closed")

    edge_list = np.array([e for e, _ in boundary], dtype=np.int64)
    edge_tri = np.array([t for _, t in boundary], dtype=np.int64)
    positions, picks = _sample_on_edges(mesh.vertices, edge_list, count, _rng(seed))

    normals = mesh.face_normals()[edge_tri[picks]]
    a = mesh.vertices[edge_list[picks, 0]]
    b = mesh.vertices[edge_list[picks, 1]]
    tangents = b - a
    tangents /= np.linalg.norm(tangents, axis=1)[:, None]

    rotated = np.cross(tangents, normals)
    centroids = mesh.vertices[mesh.triangles[edge_tri[picks]]].mean(axis=1)
    inward = centroids - positions
    flip = np.einsum("ij,ij->i", rotated, inward) > 0.0
    rotated[flip] = -rotated[flip]
    rotated /= np.linalg.norm(rotated, axis=1)[:, None]

    return SampleSet(positions, normals), SampleSet(positions.copy(), rotated)


def augmented_open_sampling(mesh: TriMesh, count: int, boundary_count: int,
                            seed: int = 0) -> SampleSet:
    """Surface sampling extended with boundary samples and their rotated twins,
    which elongates boundary-cell quadrics along the boundary direction."""
    surf = sample_surface(mesh, count, seed)
    side, side_rot = sample_boundary(mesh, boundary_count, seed + 1)
    return SampleSet(
        np.vstack([surf.positions, side.positions, side_rot.positions]),
        np.vstack([surf.normals, side.normals, side_rot.normals]),
    )
