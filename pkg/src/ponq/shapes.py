"""Procedural watertight (and open) test shapes used by the demo scripts and
the validation suite."""

from __future__ import annotations

import numpy as np

from .mesh import TriMesh


def box(half_extents=(0.5, 0.5, 0.5), center=(0.0, 0.0, 0.0)) -> TriMesh:
    """Axis-aligned box, 12 triangles, outward orientation."""
    h = np.asarray(half_extents, dtype=np.float64)
    c = np.asarray(center, dtype=np.float64)
    corners = np.array([[x, y, z] for x in (-1, 1) for y in (-1, 1) for z in (-1, 1)],
                       dtype=np.float64)
    vertices = c + corners * h
    # index = 4x + 2y + z over (0, 1) per axis
    quads = [
        (0, 1, 3, 2),  # -x
        (4, 6, 7, 5),  # +x
        (0, 4, 5, 1),  # -y
        (2, 3, 7, 6),  # +y
        (0, 2, 6, 4),  # -z
        (1, 5, 7, 3),  # +z
    ]
    triangles = []
    for a, b, cc, d in quads:
        triangles += [[a, b, cc], [a, cc, d]]
    return TriMesh(vertices, np.array(triangles))


def cube(size: float = 1.0, center=(0.0, 0.0, 0.0)) -> TriMesh:
    return box((size / 2.0,) * 3, center)


def thin_plate(side: float = 1.0, thickness: float = 0.05) -> TriMesh:
    return box((side / 2.0, side / 2.0, thickness / 2.0))


def icosphere(subdivisions: int = 3, radius: float = 1.0) -> TriMesh:
    """Subdivided icosahedron projected onto the sphere."""
    t = (1.0 + np.sqrt(5.0)) / 2.0
    verts = np.array([
        [-1, t, 0], [1, t, 0], [-1, -t, 0], [1, -t, 0],
        [0, -1, t], [0, 1, t], [0, -1, -t], [0, 1, -t],
        [t, 0, -1], [t, 0, 1], [-t, 0, -1], [-t, 0, 1],
    ], dtype=np.float64)
    verts /= np.linalg.norm(verts, axis=1)[:, None]
    faces = [
        (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
        (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
        (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
        (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
    ]
    verts = [v for v in verts]
    cache: dict[tuple[int, int], int] = {}

    def midpoint(i, j):
        key = (i, j) if i < j else (j, i)
        if key not in cache:
            m = verts[i] + verts[j]
            m /= np.linalg.norm(m)
            cache[key] = len(verts)
            verts.append(m)
        return cache[key]

    for _ in range(subdivisions):
        next_faces = []
        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            next_faces += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = next_faces

    return TriMesh(np.array(verts) * radius, np.array(faces))


def torus(major_radius: float = 1.0, minor_radius: float = 0.35,
          n_major: int = 48, n_minor: int = 24) -> TriMesh:
    """Ring torus around the z axis."""
    u = 2.0 * np.pi * np.arange(n_major) / n_major
    v = 2.0 * np.pi * np.arange(n_minor) / n_minor
    uu, vv = np.meshgrid(u, v, indexing="ij")
    ring = major_radius + minor_radius * np.cos(vv)
    verts = np.stack([ring * np.cos(uu), ring * np.sin(uu),
                      minor_radius * np.sin(vv)], axis=-1).reshape(-1, 3)

    def vid(i, j):
        return (i % n_major) * n_minor + (j % n_minor)

    triangles = []
    for i in range(n_major):
        for j in range(n_minor):
            a, b = vid(i, j), vid(i + 1, j)
            c, d = vid(i + 1, j + 1), vid(i, j + 1)
            triangles += [[a, b, c], [a, c, d]]
    return TriMesh(verts, np.array(triangles))


def half_sphere(radius: float = 1.0, n_rings: int = 12, n_seg: int = 36) -> TriMesh:
    """Open upper hemisphere; the equator circle is its single boundary loop."""
    verts = [np.array([0.0, 0.0, radius])]
    for r in range(1, n_rings + 1):
        phi = 0.5 * np.pi * r / n_rings
        for s in range(n_seg):
            theta = 2.0 * np.pi * s / n_seg
            verts.append(radius * np.array([
                np.sin(phi) * np.cos(theta),
                np.sin(phi) * np.sin(theta),
                np.cos(phi),
            ]))

    def vid(r, s):
        return 1 + (r - 1) * n_seg + (s % n_seg)

    triangles = []
    for s in range(n_seg):
        triangles.append([0, vid(1, s), vid(1, s + 1)])
    for r in range(1, n_rings):
        for s in range(n_seg):
            a, b = vid(r, s), vid(r, s + 1)
            c, d = vid(r + 1, s), vid(r + 1, s + 1)
            triangles += [[a, c, d], [a, d, b]]
    return TriMesh(np.array(verts), np.array(triangles))


def cube_with_hole(half_size: float = 0.5, hole_radius: float = 0.25,
                   n_seg: int = 32) -> TriMesh:
    """Cube minus an axis-aligned cylinder through its z faces (CSG-style),
    built directly as a watertight mesh."""
    a, h, rho = half_size, half_size, hole_radius
    theta = 2.0 * np.pi * (np.arange(n_seg) + 0.5) / n_seg
    circ = np.stack([np.cos(theta), np.sin(theta)], axis=1)
    # square boundary point in the same angular direction
    scale = a / np.max(np.abs(circ), axis=1)
    square = circ * scale[:, None]

    verts = []
    for z in (h, -h):
        for p in square:
            verts.append([p[0], p[1], z])
        for p in circ:
            verts.append([rho * p[0], rho * p[1], z])
    verts = np.array(verts)

    def sq(i, top):
        return (0 if top else 2 * n_seg) + (i % n_seg)

    def ci(i, top):
        return (n_seg if top else 3 * n_seg) + (i % n_seg)

    triangles = []
    for i in range(n_seg):
        # top annulus, normal +z
        triangles += [[sq(i, 1), ci(i + 1, 1), ci(i, 1)],
                      [sq(i, 1), sq(i + 1, 1), ci(i + 1, 1)]]
        # bottom annulus, normal -z
        triangles += [[sq(i, 0), ci(i, 0), ci(i + 1, 0)],
                      [sq(i, 0), ci(i + 1, 0), sq(i + 1, 0)]]
        # outer wall, normal radially out
        triangles += [[sq(i, 1), sq(i, 0), sq(i + 1, 0)],
                      [sq(i, 1), sq(i + 1, 0), sq(i + 1, 1)]]
        # inner wall, normal toward the axis
        triangles += [[ci(i, 1), ci(i + 1, 0), ci(i, 0)],
                      [ci(i, 1), ci(i + 1, 1), ci(i + 1, 0)]]
    return TriMesh(verts, np.array(triangles))
