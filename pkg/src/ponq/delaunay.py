"""Incremental 3D Delaunay tetrahedralization with exact predicates.

Input points are wrapped in eight protective corner vertices (the corners of
their bounding box inflated by 10% per axis), so every input point is
strictly interior to the convex hull and hull-adjacent tetrahedra can later
be tagged as outside material.  Insertion follows Bowyer-Watson: walk to a
conflicting tetrahedron, grow the conflict cavity by exact (symbolically
perturbed) circumsphere tests, and star the new point to the cavity
boundary.  Cospherical ties resolve by vertex index, making the result
unique and independent of insertion order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateSimplexError, InvalidInputError
from .predicates import _insphere_det_int, insphere_perturbed, orient3d

OUTSIDE_HULL = -1
INFLATE = 0.10

# face opposite local vertex i, wound so the opposite vertex sits on the
# positive side (inward normal)
_OPP_FACE = ((1, 3, 2), (0, 2, 3), (0, 3, 1), (0, 1, 2))


@dataclass
class DelaunayComplex:
    """Tetrahedralization of the inputs plus eight protective corners."""

    vertices: np.ndarray          # (n, 3), inputs first, corners last
    tetrahedra: np.ndarray        # (T, 4) vertex ids, positively oriented
    face_adjacency: np.ndarray    # (T, 4); entry f = neighbor across face
                                  # opposite local vertex f, or OUTSIDE_HULL
    protective_flags: np.ndarray  # (n,) bool

    @property
    def n_input(self) -> int:
        return int((~self.protective_flags).sum())

    def barycenters(self) -> np.ndarray:
        return self.vertices[self.tetrahedra].mean(axis=1)

    def circumcenters(self) -> np.ndarray:
        return _circumcenters(self.vertices[self.tetrahedra])

    def tet_min_edge_sq(self) -> np.ndarray:
        """Squared length of the shortest edge of each tetrahedron."""
        corners = self.vertices[self.tetrahedra]
        best = np.full(len(self.tetrahedra), np.inf)
        for i in range(4):
            for j in range(i + 1, 4):
                d = corners[:, i] - corners[:, j]
                best = np.minimum(best, np.einsum("ij,ij->i", d, d))
        return best

    def vertex_tets(self) -> list[list[int]]:
        """Incident tetrahedra per vertex, in tet index order."""
        out: list[list[int]] = [[] for _ in range(len(self.vertices))]
        for t, tet in enumerate(self.tetrahedra):
            for v in tet:
                out[v].append(t)
        return out


def barycenter(tet_vertices) -> np.ndarray:
    """Arithmetic mean of the 4 corners."""
    pts = np.asarray(tet_vertices, dtype=np.float64).reshape(4, 3)
    return pts.mean(axis=0)


def circumcenter(tet_vertices) -> np.ndarray:
    """Point equidistant from the 4 corners (center of the circumsphere)."""
    return _circumcenters(np.asarray(tet_vertices, dtype=np.float64)
                          .reshape(1, 4, 3))[0]


def _circumcenters(corners: np.ndarray) -> np.ndarray:
    a = corners[:, 0]
    rows = corners[:, 1:] - a[:, None, :]
    rhs = 0.5 * np.einsum("tij,tij->ti", rows, rows)
    try:
        offset = np.linalg.solve(rows, rhs[:, :, None])[:, :, 0]
    except np.linalg.LinAlgError as exc:
        raise DegenerateSimplexError("flat tetrahedron has no circumcenter") from exc
    return a + offset


def protective_corners(points: np.ndarray) -> np.ndarray:
    """Corners of the inputs' bounding box inflated by 10% per axis."""
    lo = points.min(axis=0)
    hi = points.max(axis=0)
    span = hi - lo
    pad = INFLATE * span
    # degenerate axes still need volume around them
    fallback = 0.5 if span.max() == 0.0 else 0.1 * span.max()
    pad = np.where(pad > 0.0, pad, fallback)
    lo = lo - pad
    hi = hi + pad
    return np.array([[x, y, z]
                     for x in (lo[0], hi[0])
                     for y in (lo[1], hi[1])
                     for z in (lo[2], hi[2])])


def _morton_order(points: np.ndarray) -> np.ndarray:
    """Insertion order with spatial locality (10-bit interleaved grid code)."""
    lo = points.min(axis=0)
    span = np.maximum(points.max(axis=0) - lo, 1e-300)
    q = np.minimum(((points - lo) / span * 1023.0).astype(np.int64), 1023)
    code = np.zeros(len(points), dtype=np.int64)
    for bit in range(10):
        for axis in range(3):
            code |= ((q[:, axis] >> bit) & 1) << (3 * bit + axis)
    return np.argsort(code, kind="stable")


class _Builder:
    def __init__(self, pts: list[tuple[float, float, float]]):
        self.pts = pts
        self.tets: list[list[int] | None] = []
        self.adj: list[list[int] | None] = []
        self.mark: list[int] = []
        self.stamp = 0
        self.hint = 0

    # -- construction ------------------------------------------------------

    def init_box(self, corner_ids: list[int]) -> None:
        """Six-tetrahedra triangulation of the corner cuboid."""
        # corner ids follow bit pattern (x<<2 | y<<1 | z) over (lo, hi)
        paths = [
            (0, 4, 6, 7), (0, 4, 5, 7), (0, 2, 6, 7),
            (0, 2, 3, 7), (0, 1, 5, 7), (0, 1, 3, 7),
        ]
        faces: dict[tuple[int, int, int], tuple[int, int]] = {}
        for path in paths:
            tet = [corner_ids[k] for k in path]
            if orient3d(*(self.pts[v] for v in tet)) < 0:
                tet[0], tet[1] = tet[1], tet[0]
            self._new_tet(tet, faces)

    def _new_tet(self, tet: list[int],
                 faces: dict[tuple[int, int, int], tuple[int, int]]) -> int:
        tid = len(self.tets)
        self.tets.append(tet)
        self.adj.append([OUTSIDE_HULL] * 4)
        self.mark.append(0)
        for f in range(4):
            tri = tuple(sorted(tet[k] for k in _OPP_FACE[f]))
            other = faces.pop(tri, None)
            if other is None:
                faces[tri] = (tid, f)
            else:
                ot, of = other
                self.adj[tid][f] = ot
                self.adj[ot][of] = tid
        return tid

    def insert(self, vid: int) -> None:
        p = self.pts[vid]
        seed = self._find_conflict(p, vid)
        cavity, boundary = self._grow_cavity(seed, p, vid)

        for t in cavity:
            self.tets[t] = None
            self.adj[t] = None

        faces: dict[tuple[int, int], tuple[int, int]] = {}
        created = []
        for (u, v, w), outer in boundary:
            if orient3d(self.pts[u], self.pts[v], self.pts[w], p) <= 0:
                raise DegenerateSimplexError(
                    f"point {vid} exactly coplanar with cavity face "
                    f"({u}, {v}, {w}); perturb the input")
            tid = len(self.tets)
            self.tets.append([u, v, w, vid])
            self.adj.append([OUTSIDE_HULL] * 4)
            self.mark.append(0)
            created.append(tid)
            self.adj[tid][3] = outer
            if outer != OUTSIDE_HULL:
                oadj = self.adj[outer]
                otet = self.tets[outer]
                shared = {u, v, w}
                for f in range(4):
                    if otet[_OPP_FACE[f][0]] in shared \
                            and otet[_OPP_FACE[f][1]] in shared \
                            and otet[_OPP_FACE[f][2]] in shared:
                        oadj[f] = tid
                        break
            # side faces keyed by the boundary-face edge they contain
            for local, (e0, e1) in ((0, (v, w)), (1, (u, w)), (2, (u, v))):
                key = (e0, e1) if e0 < e1 else (e1, e0)
                other = faces.pop(key, None)
                if other is None:
                    faces[key] = (tid, local)
                else:
                    ot, of = other
                    self.adj[tid][local] = ot
                    self.adj[ot][of] = tid
        if faces:
            raise DegenerateSimplexError("cavity boundary was not closed")
        self.hint = created[-1]

    # -- conflict search ---------------------------------------------------

    def _conflicts(self, t: int, p, vid: int) -> bool:
        tet = self.tets[t]
        return insphere_perturbed(
            self.pts[tet[0]], self.pts[tet[1]], self.pts[tet[2]],
            self.pts[tet[3]], p, tet[0], tet[1], tet[2], tet[3], vid) > 0

    def _find_conflict(self, p, vid: int) -> int:
        t = self.hint
        if self.tets[t] is None:
            t = next(i for i, tet in enumerate(self.tets) if tet is not None)
        # orientation walk toward the containing tetrahedron
        prev = -1
        for _ in range(4 * len(self.tets) + 16):
            tet = self.tets[t]
            moved = False
            for f in range(4):
                nxt = self.adj[t][f]
                if nxt == prev or nxt == OUTSIDE_HULL:
                    continue
                i, j, k = _OPP_FACE[f]
                if orient3d(self.pts[tet[i]], self.pts[tet[j]],
                            self.pts[tet[k]], p) < 0:
                    prev, t = t, nxt
                    moved = True
                    break
            if not moved:
                break
        if self._conflicts(t, p, vid):
            return t
        # the walk can stall on degenerate configurations; search outward
        self.stamp += 1
        stack = [t]
        self.mark[t] = self.stamp
        while stack:
            cur = stack.pop()
            if self._conflicts(cur, p, vid):
                return cur
            for nxt in self.adj[cur]:
                if nxt != OUTSIDE_HULL and self.mark[nxt] != self.stamp \
                        and self.tets[nxt] is not None:
                    self.mark[nxt] = self.stamp
                    stack.append(nxt)
        raise InvalidInputError(f"point {vid} conflicts with no tetrahedron "
                                "(outside the triangulated domain?)")

    def _grow_cavity(self, seed: int, p, vid: int):
        self.stamp += 1
        self.mark[seed] = self.stamp
        cavity = [seed]
        boundary: list[tuple[tuple[int, int, int], int]] = []
        queue = [seed]
        while queue:
            t = queue.pop()
            tet = self.tets[t]
            for f in range(4):
                nxt = self.adj[t][f]
                if nxt != OUTSIDE_HULL and self.mark[nxt] == self.stamp:
                    continue
                if nxt != OUTSIDE_HULL and self._conflicts(nxt, p, vid):
                    self.mark[nxt] = self.stamp
                    cavity.append(nxt)
                    queue.append(nxt)
                else:
                    i, j, k = _OPP_FACE[f]
                    boundary.append(((tet[i], tet[j], tet[k]), nxt))
        return cavity, boundary


def tetrahedralize(points) -> DelaunayComplex:
    """Delaunay tetrahedralization of `points` plus protective box corners."""
    pts_in = np.ascontiguousarray(points, dtype=np.float64).reshape(-1, 3)
    if len(pts_in) < 1:
        raise InvalidInputError("need at least one point")
    if not np.isfinite(pts_in).all():
        raise InvalidInputError("points must be finite")
    uniq = np.unique(pts_in, axis=0)
    if len(uniq) != len(pts_in):
        raise InvalidInputError("duplicate points are not supported")

    corners = protective_corners(pts_in)
    all_pts = np.vstack([pts_in, corners])
    n_input = len(pts_in)

    builder = _Builder([tuple(map(float, p)) for p in all_pts])
    builder.init_box(list(range(n_input, n_input + 8)))
    for vid in _morton_order(pts_in):
        builder.insert(int(vid))

    alive = [i for i, t in enumerate(builder.tets) if t is not None]
    remap = {old: new for new, old in enumerate(alive)}
    tets = np.array([builder.tets[i] for i in alive], dtype=np.int64)
    adj = np.array(
        [[remap[n] if n != OUTSIDE_HULL else OUTSIDE_HULL for n in builder.adj[i]]
         for i in alive], dtype=np.int64)
    flags = np.zeros(len(all_pts), dtype=bool)
    flags[n_input:] = True
    return DelaunayComplex(all_pts, tets, adj, flags)


# ---------------------------------------------------------------------------
# Verification: exhaustive exact empty-circumsphere check
# ---------------------------------------------------------------------------


def empty_circumsphere_violations(complex_: DelaunayComplex,
                                  chunk: int = 256) -> list[tuple[int, int]]:
    """All (tet, vertex) pairs where the vertex lies strictly inside the
    tetrahedron's circumsphere, decided exactly.  Cospherical contacts are
    not violations.  Uses the same determinant as the scalar predicate,
    vectorized with its forward error bound; uncertain entries are retested
    with exact integer arithmetic."""
    pts = complex_.vertices
    tets = complex_.tetrahedra
    n = len(pts)
    violations: list[tuple[int, int]] = []
    eps = 2.0 ** -53
    bound_const = (16.0 + 224.0 * eps) * eps

    for start in range(0, len(tets), chunk):
        block = tets[start:start + chunk]
        a = pts[block[:, 0]][:, None, :]
        b = pts[block[:, 1]][:, None, :]
        c = pts[block[:, 2]][:, None, :]
        d = pts[block[:, 3]][:, None, :]
        e = pts[None, :, :]
        ae = a - e; be = b - e; ce = c - e; de = d - e

        ab = ae[..., 0] * be[..., 1] - be[..., 0] * ae[..., 1]
        bc = be[..., 0] * ce[..., 1] - ce[..., 0] * be[..., 1]
        cd = ce[..., 0] * de[..., 1] - de[..., 0] * ce[..., 1]
        da = de[..., 0] * ae[..., 1] - ae[..., 0] * de[..., 1]
        ac = ae[..., 0] * ce[..., 1] - ce[..., 0] * ae[..., 1]
        bd = be[..., 0] * de[..., 1] - de[..., 0] * be[..., 1]

        abc = ae[..., 2] * bc - be[..., 2] * ac + ce[..., 2] * ab
        bcd = be[..., 2] * cd - ce[..., 2] * bd + de[..., 2] * bc
        cda = ce[..., 2] * da + de[..., 2] * ac + ae[..., 2] * cd
        dab = de[..., 2] * ab + ae[..., 2] * bd + be[..., 2] * da

        alift = np.einsum("tne,tne->tn", ae, ae)
        blift = np.einsum("tne,tne->tn", be, be)
        clift = np.einsum("tne,tne->tn", ce, ce)
        dlift = np.einsum("tne,tne->tn", de, de)

        det = (dlift * abc - clift * dab) + (blift * cda - alift * bcd)

        azp = np.abs(ae[..., 2]); bzp = np.abs(be[..., 2])
        czp = np.abs(ce[..., 2]); dzp = np.abs(de[..., 2])
        def ap(u, v):
            return np.abs(u[..., 0] * v[..., 1]) + np.abs(v[..., 0] * u[..., 1])
        perm = ((ap(ce, de)) * bzp + (ap(de, be)) * czp + (ap(be, ce)) * dzp) * alift \
            + ((ap(de, ae)) * czp + (ap(ae, ce)) * dzp + (ap(ce, de)) * azp) * blift \
            + ((ap(ae, be)) * dzp + (ap(be, de)) * azp + (ap(de, ae)) * bzp) * clift \
            + ((ap(be, ce)) * azp + (ap(ce, ae)) * bzp + (ap(ae, be)) * czp) * dlift
        bound = bound_const * perm

        own = np.zeros((len(block), n), dtype=bool)
        rows = np.arange(len(block))[:, None]
        own[rows, block] = True

        inside = (det < -bound) & ~own
        uncertain = (np.abs(det) <= bound) & ~own
        for t_off, v in zip(*np.nonzero(inside)):
            violations.append((start + int(t_off), int(v)))
        for t_off, v in zip(*np.nonzero(uncertain)):
            tet = tets[start + t_off]
            exact = _insphere_det_int(*(tuple(pts[i]) for i in tet), tuple(pts[v]))
            if exact < 0:
                violations.append((start + int(t_off), int(v)))
    return violations
