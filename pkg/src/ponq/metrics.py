"""Reconstruction quality metrics and structural validation.

Surface metrics compare dense samplings of two meshes (Chamfer distance,
F-score, normal consistency); edge metrics compare samplings of their sharp
edges.  Validation checks that a mesh bounds a volume (watertight) and that
no two non-adjacent triangles intersect, the latter decided with exact
arithmetic.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .errors import InvalidInputError
from .mesh import TriMesh
from .parallel import worker_count
from .predicates import _orient3d_det_int, orient3d
from .sampling import sample_sharp_edges, sample_surface

DEFAULT_EVAL_SAMPLES = 100_000
SHARP_EDGE_ANGLE = np.pi / 6.0
F1_THRESHOLD = 0.003
EF1_THRESHOLD = 0.005


def _chamfer_sets(a: np.ndarray, b: np.ndarray) -> float:
    d_ab, _ = cKDTree(b).query(a, workers=worker_count())
    d_ba, _ = cKDTree(a).query(b, workers=worker_count())
    return float(np.mean(d_ab ** 2) + np.mean(d_ba ** 2))


def eval_cd(mesh_a: TriMesh, mesh_b: TriMesh,
            n_samples: int = DEFAULT_EVAL_SAMPLES, seed: int = 0) -> float:
    """Bi-directional Chamfer distance between area-weighted samplings."""
    if mesh_a.n_triangles == 0 or mesh_b.n_triangles == 0:
        raise InvalidInputError("cannot evaluate an empty mesh")
    sa = sample_surface(mesh_a, n_samples, seed)
    sb = sample_surface(mesh_b, n_samples, seed)
    return _chamfer_sets(sa.positions, sb.positions)


def eval_f1(mesh_a: TriMesh, mesh_b: TriMesh, threshold: float = F1_THRESHOLD,
            n_samples: int = DEFAULT_EVAL_SAMPLES, seed: int = 0) -> float:
    """Harmonic mean of precision and recall of sample distances under
    `threshold`."""
    sa = sample_surface(mesh_a, n_samples, seed).positions
    sb = sample_surface(mesh_b, n_samples, seed).positions
    d_ab, _ = cKDTree(sb).query(sa, workers=worker_count())
    d_ba, _ = cKDTree(sa).query(sb, workers=worker_count())
    precision = float(np.mean(d_ab < threshold))
    recall = float(np.mean(d_ba < threshold))
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def eval_nc(mesh_a: TriMesh, mesh_b: TriMesh,
            n_samples: int = DEFAULT_EVAL_SAMPLES, seed: int = 0) -> float:
    """Mean absolute normal agreement between nearest sample pairs, averaged
    over both directions."""
    sa = sample_surface(mesh_a, n_samples, seed)
    sb = sample_surface(mesh_b, n_samples, seed)
    _, nn_ab = cKDTree(sb.positions).query(sa.positions, workers=worker_count())
    _, nn_ba = cKDTree(sa.positions).query(sb.positions, workers=worker_count())
    ab = np.abs(np.einsum("ij,ij->i", sa.normals, sb.normals[nn_ab])).mean()
    ba = np.abs(np.einsum("ij,ij->i", sb.normals, sa.normals[nn_ba])).mean()
    return float(0.5 * (ab + ba))


def eval_edge(mesh_a: TriMesh, mesh_b: TriMesh, angle: float = SHARP_EDGE_ANGLE,
              ecd_samples: int = DEFAULT_EVAL_SAMPLES,
              ef1_threshold: float = EF1_THRESHOLD,
              seed: int = 0) -> tuple[float, float]:
    """(edge Chamfer distance, edge F-score) between sharp-edge samplings.

    When neither mesh has sharp edges the pair is a perfect (0, 1); when
    only one has them, the worst (inf, 0).
    """
    ea = sample_sharp_edges(mesh_a, angle, ecd_samples, seed)
    eb = sample_sharp_edges(mesh_b, angle, ecd_samples, seed)
    if len(ea) == 0 and len(eb) == 0:
        return 0.0, 1.0
    if len(ea) == 0 or len(eb) == 0:
        return np.inf, 0.0
    ecd = _chamfer_sets(ea, eb)
    d_ab, _ = cKDTree(eb).query(ea, workers=worker_count())
    d_ba, _ = cKDTree(ea).query(eb, workers=worker_count())
    precision = float(np.mean(d_ab < ef1_threshold))
    recall = float(np.mean(d_ba < ef1_threshold))
    ef1 = 0.0 if precision + recall == 0.0 else \
        2.0 * precision * recall / (precision + recall)
    return ecd, ef1


# ---------------------------------------------------------------------------
# Watertightness
# ---------------------------------------------------------------------------


@dataclass
class WatertightReport:
    watertight: bool
    boundary_edges: list = field(default_factory=list)   # odd or single count
    misoriented_edges: list = field(default_factory=list)


def check_watertight(mesh: TriMesh) -> WatertightReport:
    """A mesh bounds a volume when every edge has an even number (>= 2) of
    incident triangles and their traversal directions pair up."""
    directed: dict[tuple[int, int], int] = {}
    for a, b, c in mesh.triangles:
        for u, v in ((a, b), (b, c), (c, a)):
            directed[(int(u), int(v))] = directed.get((int(u), int(v)), 0) + 1
    seen = set()
    boundary = []
    misoriented = []
    for (u, v), n_uv in directed.items():
        if (v, u) in seen or (u, v) in seen:
            continue
        seen.add((u, v))
        n_vu = directed.get((v, u), 0)
        total = n_uv + n_vu
        if total < 2 or total % 2 == 1:
            boundary.append((u, v))
        elif n_uv != n_vu:
            misoriented.append((u, v))
    ok = not boundary and not misoriented and mesh.n_triangles > 0
    return WatertightReport(ok, sorted(boundary), sorted(misoriented))


# ---------------------------------------------------------------------------
# Self intersection
# ---------------------------------------------------------------------------


@dataclass
class IntersectionReport:
    intersection_free: bool
    pairs: list = field(default_factory=list)


def _segment_crosses_triangle(p, q, a, b, c) -> bool:
    """Exact test: does closed segment pq meet closed triangle abc?
    Assumes p and q are on opposite strict sides of the triangle plane."""
    s1 = orient3d(p, q, a, b)
    s2 = orient3d(p, q, b, c)
    s3 = orient3d(p, q, c, a)
    return (s1 >= 0 and s2 >= 0 and s3 >= 0) or (s1 <= 0 and s2 <= 0 and s3 <= 0)


def _proj(p, axis):
    keep = [k for k in range(3) if k != axis]
    return (p[keep[0]], p[keep[1]])


def _orient2d(pa, pb, pc) -> int:
    """Exact sign of the 2D cross product (pb - pa) x (pc - pa)."""
    det = _orient3d_det_int((pa[0], pa[1], 0.0), (pb[0], pb[1], 1.0),
                            (pc[0], pc[1], 1.0), (pa[0], pa[1], 1.0))
    return (det > 0) - (det < 0)


def _seg_seg_2d(p1, p2, p3, p4) -> bool:
    """Exact closed-segment intersection in the plane."""
    d1 = _orient2d(p3, p4, p1)
    d2 = _orient2d(p3, p4, p2)
    d3 = _orient2d(p1, p2, p3)
    d4 = _orient2d(p1, p2, p4)
    if ((d1 > 0) != (d2 > 0) or d1 == 0 or d2 == 0) and \
       ((d3 > 0) != (d4 > 0) or d3 == 0 or d4 == 0):
        # with a zero sign the contact point is collinear, where bounding-box
        # contact is exact
        lo1 = (min(p1[0], p2[0]), min(p1[1], p2[1]))
        hi1 = (max(p1[0], p2[0]), max(p1[1], p2[1]))
        lo2 = (min(p3[0], p4[0]), min(p3[1], p4[1]))
        hi2 = (max(p3[0], p4[0]), max(p3[1], p4[1]))
        return (lo1[0] <= hi2[0] and lo2[0] <= hi1[0]
                and lo1[1] <= hi2[1] and lo2[1] <= hi1[1])
    return False


def _point_in_tri_2d(pt, tri) -> bool:
    """Exact closed point-in-triangle test; `tri` must be non-degenerate."""
    signs = [_orient2d(tri[k], tri[(k + 1) % 3], pt) for k in range(3)]
    return all(s >= 0 for s in signs) or all(s <= 0 for s in signs)


def _dominant_axis(tri):
    n = np.cross(np.subtract(tri[1], tri[0]), np.subtract(tri[2], tri[0]))
    return int(np.argmax(np.abs(n))) if np.abs(n).max() > 0 else 2


def _coplanar_overlap(t1, t2, axis) -> bool:
    """Exact 2D overlap of coplanar triangles, projected along `axis`."""
    u = [_proj(p, axis) for p in t1]
    v = [_proj(p, axis) for p in t2]
    for i in range(3):
        for j in range(3):
            if _seg_seg_2d(u[i], u[(i + 1) % 3], v[j], v[(j + 1) % 3]):
                return True
    return (any(_point_in_tri_2d(p, v) for p in u)
            or any(_point_in_tri_2d(p, u) for p in v))


def triangles_intersect(t1, t2) -> bool:
    """Exact intersection of two closed triangles given as 3x3 float arrays.

    Touching at a point or along a segment counts as intersecting; callers
    exclude index-adjacent triangle pairs before asking.
    """
    t1 = [tuple(map(float, p)) for p in t1]
    t2 = [tuple(map(float, p)) for p in t2]
    s2 = [orient3d(t1[0], t1[1], t1[2], p) for p in t2]
    if all(s > 0 for s in s2) or all(s < 0 for s in s2):
        return False
    s1 = [orient3d(t2[0], t2[1], t2[2], p) for p in t1]
    if all(s > 0 for s in s1) or all(s < 0 for s in s1):
        return False

    if all(s == 0 for s in s2):
        # coplanar: project along the dominant axis of the common plane
        return _coplanar_overlap(t1, t2, _dominant_axis(t1))

    # segment-across-plane tests in both directions
    for tri, other, signs in ((t1, t2, s1), (t2, t1, s2)):
        for i in range(3):
            j = (i + 1) % 3
            si, sj = signs[i], signs[j]
            if si == 0 and sj == 0:
                continue  # edge in the plane: covered by the other direction
            if si == sj:
                continue
            if _segment_crosses_triangle(tri[i], tri[j],
                                         other[0], other[1], other[2]):
                return True
    # vertices exactly on the other plane (touch cases)
    for tri, other, signs in ((t1, t2, s1), (t2, t1, s2)):
        axis = _dominant_axis(other)
        proj_other = [_proj(p, axis) for p in other]
        for i in range(3):
            if signs[i] == 0 and _point_in_tri_2d(_proj(tri[i], axis),
                                                  proj_other):
                return True
        # an edge lying inside the other plane can cross that triangle with
        # both endpoints outside it
        for i in range(3):
            j = (i + 1) % 3
            if signs[i] == 0 and signs[j] == 0:
                a, b = _proj(tri[i], axis), _proj(tri[j], axis)
                for k in range(3):
                    if _seg_seg_2d(a, b, proj_other[k], proj_other[(k + 1) % 3]):
                        return True
    return False


def _candidate_pairs(mesh: TriMesh):
    """Bounding-box overlapping, non-index-adjacent triangle pairs from a
    uniform grid over triangle bounding boxes."""
    tri = mesh.corners()
    lo = tri.min(axis=1)
    hi = tri.max(axis=1)
    diag = np.linalg.norm(hi - lo, axis=1)
    cell = max(float(np.median(diag)), 1e-12)
    origin = lo.min(axis=0)

    grid: dict[tuple[int, int, int], list[int]] = {}
    lo_cell = np.floor((lo - origin) / cell).astype(np.int64)
    hi_cell = np.floor((hi - origin) / cell).astype(np.int64)
    for t in range(len(tri)):
        for ix in range(lo_cell[t, 0], hi_cell[t, 0] + 1):
            for iy in range(lo_cell[t, 1], hi_cell[t, 1] + 1):
                for iz in range(lo_cell[t, 2], hi_cell[t, 2] + 1):
                    grid.setdefault((ix, iy, iz), []).append(t)

    tris = mesh.triangles
    seen = set()
    for bucket in grid.values():
        for a, b in itertools.combinations(bucket, 2):
            key = (a, b)
            if key in seen:
                continue
            seen.add(key)
            if set(tris[a]) & set(tris[b]):
                continue
            if (lo[a] <= hi[b]).all() and (lo[b] <= hi[a]).all():
                yield a, b


def check_self_intersection(mesh: TriMesh) -> IntersectionReport:
    """Exact triangle-triangle intersection over all non-adjacent pairs,
    accelerated by a uniform grid and a vectorized plane-side prefilter."""
    pairs = list(_candidate_pairs(mesh))
    if not pairs:
        return IntersectionReport(True, [])
    tri = mesh.corners()
    pa = tri[[a for a, _ in pairs]]
    pb = tri[[b for _, b in pairs]]

    # conservative filter: all of B strictly on one side of A's plane
    def one_sided(t_from, t_to):
        base = t_from[:, 0]
        e1 = t_from[:, 1] - base
        e2 = t_from[:, 2] - base
        n = np.cross(e1, e2)
        dets = np.einsum("pi,pvi->pv", n, t_to - base[:, None, :])
        scale = (np.abs(t_to - base[:, None, :]).max(axis=(1, 2))
                 * np.abs(n).max(axis=1))
        bound = 64.0 * 2.0 ** -53 * np.maximum(scale, 1e-300)
        return ((dets > bound[:, None]).all(axis=1)
                | (dets < -bound[:, None]).all(axis=1))

    clear = one_sided(pa, pb) | one_sided(pb, pa)
    bad = []
    for idx in np.flatnonzero(~clear):
        a, b = pairs[idx]
        if triangles_intersect(tri[a], tri[b]):
            bad.append((a, b))
    return IntersectionReport(not bad, sorted(bad))


# ---------------------------------------------------------------------------
# Combined report
# ---------------------------------------------------------------------------


def evaluate_reconstruction(mesh: TriMesh, reference: TriMesh,
                            f1_threshold: float = F1_THRESHOLD,
                            ef1_threshold: float = EF1_THRESHOLD,
                            edge_angle: float = SHARP_EDGE_ANGLE,
                            n_samples: int = DEFAULT_EVAL_SAMPLES,
                            seed: int = 0) -> dict:
    """All metrics of `mesh` against `reference`, as a JSON-ready mapping."""
    ecd, ef1 = eval_edge(mesh, reference, edge_angle, n_samples, ef1_threshold,
                         seed)
    return {
        "cd": eval_cd(mesh, reference, n_samples, seed),
        "f1": eval_f1(mesh, reference, f1_threshold, n_samples, seed),
        "nc": eval_nc(mesh, reference, n_samples, seed),
        "ecd": ecd,
        "ef1": ef1,
        "watertight": check_watertight(mesh).watertight,
        "self_intersection_free": check_self_intersection(mesh).intersection_free,
        "vertex_count": mesh.n_vertices,
        "face_count": mesh.n_triangles,
    }
