"""Inside/outside labeling of tetrahedra and boundary-surface extraction.

Labeling runs in stages that only ever refine UNKNOWN labels: tetrahedra
touching protective corners are outside; tetrahedra whose circumcenter and
barycenter fall on one side of every corner vertex's tangent plane get that
side; vertices missing a label on one side push their smallest ambiguous
neighbor to the opposite side; a minimum s-t cut over the remaining unknown
region decides the rest using per-triangle surface-likelihood scores.  The
output mesh is the set of faces between differently labeled tetrahedra,
which bounds the inside volume by construction.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from enum import IntEnum

import numpy as np
from scipy.spatial import cKDTree

from .delaunay import OUTSIDE_HULL, DelaunayComplex, tetrahedralize
from .errors import EmptyInteriorError, EmptyMeshError, InvalidInputError
from .fitting import PoNQElement
from .mesh import TriMesh
from .parallel import worker_count
from .quadric import QuadricArrays, batch_anisotropy, batch_normalize

_OPP_FACE = ((1, 3, 2), (0, 2, 3), (0, 3, 1), (0, 1, 2))


class TetLabel(IntEnum):
    UNKNOWN = 0
    INSIDE = 1
    OUTSIDE = 2


@dataclass(frozen=True)
class ExtractionParams:
    """Knobs of the labeling stages.

    `h` weighs the quadric term of the triangle score (squared inverse of
    the fitting grid spacing); `smallest_edge_threshold` bounds how large an
    ambiguous tetrahedron the per-vertex opposite-side rule may tag.
    """

    h: float
    smallest_edge_threshold: float
    anisotropy_threshold: float = 0.4

    def __post_init__(self):
        if self.h <= 0.0:
            raise InvalidInputError("h must be positive")
        if self.smallest_edge_threshold < 0.0 or self.anisotropy_threshold < 0.0:
            raise InvalidInputError("thresholds must be non-negative")


@dataclass(frozen=True)
class TriangleScore:
    s_n: float
    s_q: float
    total: float
    degenerate: bool = False


@dataclass
class ElementArrays:
    """Stacked per-element data in complex vertex order (inputs only)."""

    v_star: np.ndarray
    normals: np.ndarray
    quadrics: QuadricArrays

    @staticmethod
    def from_elements(elements: list[PoNQElement], normalized: bool = True
                      ) -> "ElementArrays":
        v = np.array([e.v_star for e in elements])
        n = np.array([e.n for e in elements])
        qa = QuadricArrays(
            np.array([e.q.A for e in elements]),
            np.array([e.q.b for e in elements]),
            np.array([e.q.c for e in elements]),
        )
        if normalized:
            qa = batch_normalize(qa)
        return ElementArrays(v, n, qa)


# ---------------------------------------------------------------------------
# Tagging stages
# ---------------------------------------------------------------------------


def tag_protective(complex_: DelaunayComplex) -> np.ndarray:
    """OUTSIDE for every tetrahedron incident to a protective corner."""
    labels = np.full(len(complex_.tetrahedra), TetLabel.UNKNOWN, dtype=np.int8)
    touches = complex_.protective_flags[complex_.tetrahedra].any(axis=1)
    labels[touches] = TetLabel.OUTSIDE
    return labels


def tag_halfspace(complex_: DelaunayComplex, arrays: ElementArrays,
                  labels: np.ndarray) -> np.ndarray:
    """Decide tetrahedra whose circumcenter and barycenter agree against all
    four corner tangent planes; ties (zero dot products) stay UNKNOWN."""
    labels = labels.copy()
    unknown = np.flatnonzero(labels == TetLabel.UNKNOWN)
    if len(unknown) == 0:
        return labels
    tets = complex_.tetrahedra[unknown]
    centers_c = complex_.circumcenters()[unknown]
    centers_b = complex_.barycenters()[unknown]

    vs = arrays.v_star[tets]      # (k, 4, 3)
    ns = arrays.normals[tets]     # (k, 4, 3)
    dot_c = np.einsum("kvi,kvi->kv", ns, centers_c[:, None, :] - vs)
    dot_b = np.einsum("kvi,kvi->kv", ns, centers_b[:, None, :] - vs)
    all_pos = (dot_c > 0.0).all(axis=1) & (dot_b > 0.0).all(axis=1)
    all_neg = (dot_c < 0.0).all(axis=1) & (dot_b < 0.0).all(axis=1)
    labels[unknown[all_pos]] = TetLabel.OUTSIDE
    labels[unknown[all_neg]] = TetLabel.INSIDE
    return labels


def tag_smallest_edge(complex_: DelaunayComplex, labels: np.ndarray,
                      threshold: float) -> np.ndarray:
    """Per-vertex opposite-side rule, one sequential pass in vertex order.

    A vertex of the triangulation lies on the surface, so a vertex with
    labeled neighbors on one side only gets its smallest ambiguous incident
    tetrahedron pushed to the other side, provided that tetrahedron is small
    enough to trust (shortest edge below `threshold`).
    """
    labels = labels.copy()
    incident = complex_.vertex_tets()
    min_edge = np.sqrt(complex_.tet_min_edge_sq())
    thr = float(threshold)

    for v in range(complex_.n_input):
        tets = incident[v]
        tagged = [labels[t] for t in tets if labels[t] != TetLabel.UNKNOWN]
        if not tagged:
            continue
        has_inside = TetLabel.INSIDE in tagged
        has_outside = TetLabel.OUTSIDE in tagged
        if has_inside == has_outside:
            continue
        candidates = [t for t in tets if labels[t] == TetLabel.UNKNOWN]
        if not candidates:
            continue
        best = min(candidates, key=lambda t: (min_edge[t], t))
        if min_edge[best] < thr:
            labels[best] = TetLabel.OUTSIDE if has_inside else TetLabel.INSIDE
    return labels


# ---------------------------------------------------------------------------
# Triangle scores
# ---------------------------------------------------------------------------


def triangle_score(tri_vertices, arrays: ElementArrays,
                   params: ExtractionParams) -> TriangleScore:
    """Surface-likelihood score of the triangle spanning three elements:
    an alignment term between the triangle normal and the element normals,
    plus `h` times the cross-evaluation of each element's quadric at the
    other corners' optimal vertices."""
    i, j, k = (int(v) for v in tri_vertices)
    vi, vj, vk = arrays.v_star[i], arrays.v_star[j], arrays.v_star[k]
    n_t = np.cross(vj - vi, vk - vi)
    norm = float(np.linalg.norm(n_t))
    degenerate = norm <= 1e-300
    if degenerate:
        n_t = np.array([0.0, 0.0, 1.0])
    else:
        n_t = n_t / norm
    ns = arrays.normals[[i, j, k]]
    dots = ns @ n_t
    if dots.sum() < 0.0:
        n_t = -n_t
        dots = -dots
    s_n = float((2.0 / np.pi * np.arccos(np.clip(dots, -1.0, 1.0)).sum()) ** 2)

    s_q = 0.0
    for a in (i, j, k):
        A, b, c = arrays.quadrics.A[a], arrays.quadrics.b[a], arrays.quadrics.c[a]
        for other, v_other in ((i, vi), (j, vj), (k, vk)):
            if other == a:
                continue
            s_q += float(v_other @ A @ v_other - 2.0 * (b @ v_other) + c)
    s_q = max(s_q, 0.0)
    return TriangleScore(s_n, s_q, s_n + params.h * s_q, degenerate)


# ---------------------------------------------------------------------------
# Minimum cut over the ambiguous region
# ---------------------------------------------------------------------------


class _Dinic:
    """Blocking-flow max-flow on float capacities, deterministic edge order."""

    def __init__(self, n: int):
        self.n = n
        self.head: list[list[int]] = [[] for _ in range(n)]
        self.to: list[int] = []
        self.cap: list[float] = []

    def add(self, u: int, v: int, cap_uv: float, cap_vu: float = 0.0) -> None:
        self.head[u].append(len(self.to)); self.to.append(v); self.cap.append(cap_uv)
        self.head[v].append(len(self.to)); self.to.append(u); self.cap.append(cap_vu)

    def max_flow(self, s: int, t: int) -> float:
        flow = 0.0
        while True:
            level = [-1] * self.n
            level[s] = 0
            q = deque([s])
            while q:
                u = q.popleft()
                for e in self.head[u]:
                    v = self.to[e]
                    if self.cap[e] > 0.0 and level[v] < 0:
                        level[v] = level[u] + 1
                        q.append(v)
            if level[t] < 0:
                return flow
            it = [0] * self.n

            def dfs(u: int, pushed: float) -> float:
                if u == t:
                    return pushed
                while it[u] < len(self.head[u]):
                    e = self.head[u][it[u]]
                    v = self.to[e]
                    if self.cap[e] > 0.0 and level[v] == level[u] + 1:
                        got = dfs(v, min(pushed, self.cap[e]))
                        if got > 0.0:
                            self.cap[e] -= got
                            self.cap[e ^ 1] += got
                            return got
                    it[u] += 1
                return 0.0

            while True:
                pushed = dfs(s, np.inf)
                if pushed <= 0.0:
                    break
                flow += pushed

    def source_side(self, s: int) -> np.ndarray:
        seen = np.zeros(self.n, dtype=bool)
        seen[s] = True
        q = deque([s])
        while q:
            u = q.popleft()
            for e in self.head[u]:
                v = self.to[e]
                if self.cap[e] > 0.0 and not seen[v]:
                    seen[v] = True
                    q.append(v)
        return seen


def _cut_faces(complex_: DelaunayComplex, labels: np.ndarray):
    """Faces with at least one UNKNOWN endpoint, each reported once."""
    adj = complex_.face_adjacency
    for t in range(len(labels)):
        for f in range(4):
            nb = int(adj[t, f])
            if nb == OUTSIDE_HULL or nb < t:
                continue
            if labels[t] == TetLabel.UNKNOWN or labels[nb] == TetLabel.UNKNOWN:
                tri = tuple(int(complex_.tetrahedra[t, k]) for k in _OPP_FACE[f])
                yield t, nb, tri


def mincut_labels(complex_: DelaunayComplex, labels: np.ndarray,
                  arrays: ElementArrays, params: ExtractionParams) -> np.ndarray:
    """Complete the labeling with a minimum s-t cut: inside tetrahedra merge
    into the source, outside into the sink, and each candidate face carries
    its triangle score as capacity.  Unknown tetrahedra on the source side of
    the cut become INSIDE, the rest OUTSIDE."""
    labels = labels.copy()
    unknown = np.flatnonzero(labels == TetLabel.UNKNOWN)
    if len(unknown) == 0:
        return labels
    if not (labels == TetLabel.INSIDE).any():
        raise EmptyInteriorError("no tetrahedron was tagged inside")

    node_of = {int(t): i for i, t in enumerate(unknown)}
    source = len(unknown)
    sink = source + 1

    merged: dict[tuple[int, int], float] = {}
    for t, nb, tri in _cut_faces(complex_, labels):
        ends = []
        for tet in (t, nb):
            if labels[tet] == TetLabel.INSIDE:
                ends.append(source)
            elif labels[tet] == TetLabel.OUTSIDE:
                ends.append(sink)
            else:
                ends.append(node_of[tet])
        u, v = min(ends), max(ends)
        if u == v:
            continue
        score = triangle_score(tri, arrays, params).total
        merged[(u, v)] = merged.get((u, v), 0.0) + score

    net = _Dinic(sink + 1)
    for (u, v), cap in merged.items():
        net.add(u, v, cap, cap)
    net.max_flow(source, sink)
    inside_side = net.source_side(source)
    for t, node in node_of.items():
        labels[t] = TetLabel.INSIDE if inside_side[node] else TetLabel.OUTSIDE
    return labels


# ---------------------------------------------------------------------------
# Surface extraction
# ---------------------------------------------------------------------------


def extract_boundary(complex_: DelaunayComplex, labels: np.ndarray) -> TriMesh:
    """Triangles between differently labeled tetrahedra, wound so normals
    point from inside toward outside; hull faces count as outside."""
    if (labels == TetLabel.UNKNOWN).any():
        raise InvalidInputError("labels must be complete")
    adj = complex_.face_adjacency
    tets = complex_.tetrahedra
    faces = []
    for t in range(len(tets)):
        if labels[t] != TetLabel.INSIDE:
            continue
        for f in range(4):
            nb = int(adj[t, f])
            nb_label = TetLabel.OUTSIDE if nb == OUTSIDE_HULL else labels[nb]
            if nb_label == TetLabel.OUTSIDE:
                i, j, k = (int(tets[t, m]) for m in _OPP_FACE[f])
                # stored winding faces the inside tet; flip it outward
                faces.append((i, k, j))
    if not faces:
        raise EmptyMeshError("no boundary faces between inside and outside")

    used = sorted({v for tri in faces for v in tri})
    remap = {v: i for i, v in enumerate(used)}
    triangles = np.array([[remap[a], remap[b], remap[c]] for a, b, c in faces])
    return TriMesh(complex_.vertices[used], triangles,
                   source_indices=np.array(used, dtype=np.int64))


def cull_open_boundary(mesh: TriMesh, elements: list[PoNQElement],
                       anisotropy_threshold: float) -> TriMesh:
    """Drop triangles whose three corners all have strongly anisotropic
    quadrics (boundary-elongated cells), opening the holes the closed
    extraction had sealed."""
    if mesh.source_indices is None:
        raise InvalidInputError("mesh lacks source indices for element lookup")
    arrays = ElementArrays.from_elements(elements, normalized=False)
    ratios = batch_anisotropy(arrays.quadrics)
    tri_sources = mesh.source_indices[mesh.triangles]
    drop = (ratios[tri_sources] > anisotropy_threshold).all(axis=1)
    kept = mesh.triangles[~drop]
    used = np.unique(kept)
    remap = -np.ones(mesh.n_vertices, dtype=np.int64)
    remap[used] = np.arange(len(used))
    return TriMesh(mesh.vertices[used], remap[kept],
                   source_indices=mesh.source_indices[used])


# ---------------------------------------------------------------------------
# Full meshing pipeline
# ---------------------------------------------------------------------------


@dataclass
class MeshingResult:
    mesh: TriMesh
    complex: DelaunayComplex
    labels: np.ndarray
    params: ExtractionParams


def default_extraction_params(v_star: np.ndarray, h: float | None = None,
                              edge_threshold: float | None = None,
                              anisotropy_threshold: float = 0.4,
                              grid_spacing: float | None = None) -> ExtractionParams:
    """Fill unspecified knobs from the point spacing: the median
    nearest-neighbor distance stands in for the fitting grid spacing."""
    if h is None or edge_threshold is None:
        if len(v_star) >= 2:
            d, _ = cKDTree(v_star).query(v_star, k=2, workers=worker_count())
            median_nn = float(np.median(d[:, 1]))
        else:
            median_nn = 1.0
        if median_nn <= 0.0:
            median_nn = 1.0
        if edge_threshold is None:
            edge_threshold = 4.0 * median_nn
        if h is None:
            spacing = grid_spacing if grid_spacing is not None else median_nn
            h = 1.0 / (spacing * spacing)
    return ExtractionParams(h, edge_threshold, anisotropy_threshold)


def mesh_elements(elements: list[PoNQElement],
                  params: ExtractionParams | None = None,
                  open_surface: bool = False,
                  grid_spacing: float | None = None) -> MeshingResult:
    """Normalize quadrics, tetrahedralize the optimal vertices, run all
    tagging stages, cut, and extract the boundary surface."""
    if not elements:
        raise InvalidInputError("no elements to mesh")
    arrays = ElementArrays.from_elements(elements, normalized=True)
    if params is None:
        params = default_extraction_params(arrays.v_star, grid_spacing=grid_spacing)

    complex_ = tetrahedralize(arrays.v_star)
    labels = tag_protective(complex_)
    labels = tag_halfspace(complex_, arrays, labels)
    labels = tag_smallest_edge(complex_, labels, params.smallest_edge_threshold)
    labels = mincut_labels(complex_, labels, arrays, params)
    mesh = extract_boundary(complex_, labels)
    if open_surface:
        mesh = cull_open_boundary(mesh, elements, params.anisotropy_threshold)
    return MeshingResult(mesh, complex_, labels, params)
