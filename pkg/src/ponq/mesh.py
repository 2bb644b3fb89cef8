"""Indexed triangle meshes plus OBJ/PLY readers and writers."""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import FileFormatError, InvalidInputError

DEGENERATE_AREA_TOL = 1e-12


@dataclass
class TriMesh:
    """Vertices (n, 3) and counter-clockwise triangles (m, 3) into them.

    `source_indices`, when present, maps each vertex back to the index of the
    point it was created from (used to look up per-generator data after
    surface extraction re-indexes the vertex set).
    """

    vertices: np.ndarray
    triangles: np.ndarray
    source_indices: np.ndarray | None = None

    def __post_init__(self):
        self.vertices = np.ascontiguousarray(self.vertices, dtype=np.float64).reshape(-1, 3)
        self.triangles = np.ascontiguousarray(self.triangles, dtype=np.int64).reshape(-1, 3)
        if self.triangles.size and (self.triangles.min() < 0
                                    or self.triangles.max() >= len(self.vertices)):
            raise InvalidInputError("triangle indices out of range")

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    def corners(self) -> np.ndarray:
        """(m, 3, 3) array of triangle corner positions."""
        return self.vertices[self.triangles]

    def face_normals(self, normalized: bool = True) -> np.ndarray:
        tri = self.corners()
        n = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
        if normalized:
            lens = np.linalg.norm(n, axis=1)
            safe = np.where(lens > 0.0, lens, 1.0)
            n = n / safe[:, None]
        return n

    def face_areas(self) -> np.ndarray:
        return 0.5 * np.linalg.norm(self.face_normals(normalized=False), axis=1)

    def edges(self) -> dict[tuple[int, int], list[int]]:
        """Undirected edge -> incident triangle indices."""
        out: dict[tuple[int, int], list[int]] = {}
        for t, (a, b, c) in enumerate(self.triangles):
            for u, v in ((a, b), (b, c), (c, a)):
                key = (int(u), int(v)) if u < v else (int(v), int(u))
                out.setdefault(key, []).append(t)
        return out

    def boundary_edges(self) -> list[tuple[int, int]]:
        return [e for e, tris in self.edges().items() if len(tris) == 1]

    def boundary_loop_count(self) -> int:
        """Number of connected components among boundary edges."""
        edges = self.boundary_edges()
        if not edges:
            return 0
        parent: dict[int, int] = {}

        def find(x):
            while parent.setdefault(x, x) != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for u, v in edges:
            parent[find(u)] = find(v)
        return len({find(u) for u, _ in edges})

    def euler_characteristic(self) -> int:
        used = np.unique(self.triangles)
        return int(len(used) - len(self.edges()) + self.n_triangles)

    def signed_volume(self) -> float:
        tri = self.corners()
        return float(np.einsum("ij,ij->i", tri[:, 0],
                               np.cross(tri[:, 1], tri[:, 2])).sum() / 6.0)


# ---------------------------------------------------------------------------
# OBJ
# ---------------------------------------------------------------------------


def read_obj(path) -> TriMesh:
    """ASCII OBJ: `v` and `f` records, 1-based indices, faces fan-triangulated."""
    vertices: list[list[float]] = []
    triangles: list[list[int]] = []
    with open(path, "r", encoding="utf-8", errors="replace") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            tag = parts[0]
            if tag == "v":
                if len(parts) < 4:
                    raise FileFormatError(f"{path}:{lineno}: short vertex record")
                vertices.append([float(parts[1]), float(parts[2]), float(parts[3])])
            elif tag == "f":
                if len(parts) < 4:
                    raise FileFormatError(f"{path}:{lineno}: face with <3 vertices")
                idx = []
                for tok in parts[1:]:
                    head = tok.split("/")[0]
                    i = int(head)
                    # negative OBJ indices count back from the current vertex
                    idx.append(i - 1 if i > 0 else len(vertices) + i)
                for k in range(1, len(idx) - 1):
                    triangles.append([idx[0], idx[k], idx[k + 1]])
    if not vertices:
        raise FileFormatError(f"{path}: no vertices")
    return TriMesh(np.array(vertices), np.array(triangles, dtype=np.int64).reshape(-1, 3))


def write_obj(path, mesh: TriMesh) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for v in mesh.vertices:
            fh.write(f"v {float(v[0])!r} {float(v[1])!r} {float(v[2])!r}\n")
        for t in mesh.triangles:
            fh.write(f"f {t[0] + 1} {t[1] + 1} {t[2] + 1}\n")


# ---------------------------------------------------------------------------
# PLY (ASCII and binary_little_endian)
# ---------------------------------------------------------------------------

_PLY_SCALARS = {
    "char": ("b", 1), "int8": ("b", 1),
    "uchar": ("B", 1), "uint8": ("B", 1),
    "short": ("h", 2), "int16": ("h", 2),
    "ushort": ("H", 2), "uint16": ("H", 2),
    "int": ("i", 4), "int32": ("i", 4),
    "uint": ("I", 4), "uint32": ("I", 4),
    "float": ("f", 4), "float32": ("f", 4),
    "double": ("d", 8), "float64": ("d", 8),
}


def read_ply(path) -> TriMesh:
    with open(path, "rb") as fh:
        data = fh.read()
    if not data.startswith(b"ply"):
        raise FileFormatError(f"{path}: missing ply magic")
    end = data.find(b"end_header")
    if end < 0:
        raise FileFormatError(f"{path}: unterminated header")
    body_start = data.find(b"\n", end) + 1
    header = data[:end].decode("ascii", errors="replace").splitlines()

    fmt = None
    elements: list[tuple[str, int, list]] = []  # (name, count, properties)
    for line in header[1:]:
        parts = line.split()
        if not parts or parts[0] == "comment":
            continue
        if parts[0] == "format":
            fmt = parts[1]
        elif parts[0] == "element":
            elements.append((parts[1], int(parts[2]), []))
        elif parts[0] == "property":
            if not elements:
                raise FileFormatError(f"{path}: property before element")
            if parts[1] == "list":
                elements[-1][2].append(("list", parts[2], parts[3], parts[4]))
            else:
                elements[-1][2].append(("scalar", parts[1], parts[2]))
    if fmt not in ("ascii", "binary_little_endian"):
        raise FileFormatError(f"{path}: unsupported format {fmt!r}")

    vertices: list[list[float]] = []
    faces: list[list[int]] = []

    if fmt == "ascii":
        tokens = data[body_start:].decode("ascii", errors="replace").split()
        pos = 0
        for name, count, props in elements:
            for _ in range(count):
                values = {}
                for prop in props:
                    if prop[0] == "scalar":
                        values[prop[2]] = float(tokens[pos]); pos += 1
                    else:
                        n = int(tokens[pos]); pos += 1
                        values[prop[3]] = [int(tokens[pos + k]) for k in range(n)]
                        pos += n
                _ply_collect(name, values, vertices, faces)
    else:
        pos = body_start
        for name, count, props in elements:
            for _ in range(count):
                values = {}
                for prop in props:
                    if prop[0] == "scalar":
                        code, size = _PLY_SCALARS[prop[1]]
                        values[prop[2]] = struct.unpack_from("<" + code, data, pos)[0]
                        pos += size
                    else:
                        ccode, csize = _PLY_SCALARS[prop[1]]
                        icode, isize = _PLY_SCALARS[prop[2]]
                        n = struct.unpack_from("<" + ccode, data, pos)[0]
                        pos += csize
                        values[prop[3]] = list(struct.unpack_from(f"<{n}{icode}", data, pos))
                        pos += n * isize
                _ply_collect(name, values, vertices, faces)

    if not vertices:
        raise FileFormatError(f"{path}: no vertices")
    triangles = []
    for face in faces:
        for k in range(1, len(face) - 1):
            triangles.append([face[0], face[k], face[k + 1]])
    return TriMesh(np.array(vertices), np.array(triangles, dtype=np.int64).reshape(-1, 3))


def _ply_collect(element, values, vertices, faces):
    if element == "vertex":
        vertices.append([values["x"], values["y"], values["z"]])
    elif element == "face":
        key = "vertex_indices" if "vertex_indices" in values else "vertex_index"
        if key in values:
            faces.append([int(i) for i in values[key]])


def write_ply(path, mesh: TriMesh) -> None:
    """binary_little_endian PLY with double vertices."""
    with open(path, "wb") as fh:
        fh.write(b"ply\nformat binary_little_endian 1.0\n")
        fh.write(f"element vertex {mesh.n_vertices}\n".encode())
        fh.write(b"property double x\nproperty double y\nproperty double z\n")
        fh.write(f"element face {mesh.n_triangles}\n".encode())
        fh.write(b"property list uchar int vertex_indices\nend_header\n")
        fh.write(np.ascontiguousarray(mesh.vertices, dtype="<f8").tobytes())
        tris = np.ascontiguousarray(mesh.triangles, dtype="<i4")
        packed = bytearray()
        for row in tris:
            packed += b"\x03" + row.tobytes()
        fh.write(bytes(packed))


def read_mesh(path) -> TriMesh:
    """Dispatch on extension: .obj or .ply."""
    suffix = Path(path).suffix.lower()
    if suffix == ".obj":
        return read_obj(path)
    if suffix == ".ply":
        return read_ply(path)
    raise FileFormatError(f"unsupported mesh extension {suffix!r}")


def write_mesh(path, mesh: TriMesh) -> None:
    suffix = Path(path).suffix.lower()
    if suffix == ".obj":
        write_obj(path, mesh)
    elif suffix == ".ply":
        write_ply(path, mesh)
    else:
        raise FileFormatError(f"unsupported mesh extension {suffix!r}")
