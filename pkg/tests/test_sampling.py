import numpy as np
import pytest

from ponq.errors import EmptySurfaceError, InvalidInputError, NoBoundaryError
from ponq.mesh import TriMesh, read_mesh, read_obj, read_ply, write_obj, write_ply
from ponq.sampling import (augmented_open_sampling, default_sample_count,
                           sample_boundary, sample_sharp_edges, sample_surface,
                           sharp_edges)
from ponq.shapes import cube, half_sphere, icosphere


def unit_square():
    return TriMesh(
        np.array([[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0]], float),
        np.array([[0, 1, 2], [0, 2, 3]]),
    )


class TestSampleSurface:
    def test_flat_square(self):
        s = sample_surface(unit_square(), 1000, seed=1)
        assert len(s) == 1000
        assert np.allclose(s.normals, [0, 0, 1])
        assert np.all((s.positions[:, :2] >= 0) & (s.positions[:, :2] <= 1))
        assert np.allclose(s.positions[:, 2], 0.0)

    def test_area_weighting(self):
        # two triangles with areas 1 and 3
        mesh = TriMesh(
            np.array([[0, 0, 0], [2, 0, 0], [0, 1, 0],
                      [10, 0, 0], [16, 0, 0], [10, 1, 0]], float),
            np.array([[0, 1, 2], [3, 4, 5]]),
        )
        s = sample_surface(mesh, 40000, seed=2)
        on_second = np.sum(s.positions[:, 0] >= 5.0)
        # binomial(40000, 0.75): sigma = sqrt(40000*0.75*0.25) ~ 87, 3 sigma band
        assert abs(on_second - 30000) <= 500

    def test_count_rule(self):
        assert default_sample_count(32) == 10321

    def test_determinism(self):
        mesh = icosphere(2)
        a = sample_surface(mesh, 500, seed=42)
        b = sample_surface(mesh, 500, seed=42)
        assert a.positions.tobytes() == b.positions.tobytes()
        assert a.normals.tobytes() == b.normals.tobytes()
        c = sample_surface(mesh, 500, seed=43)
        assert a.positions.tobytes() != c.positions.tobytes()

    def test_unit_normals_and_on_surface(self):
        mesh = icosphere(2, radius=0.7)
        s = sample_surface(mesh, 2000, seed=3)
        assert np.allclose(np.linalg.norm(s.normals, axis=1), 1.0, atol=1e-9)
        # every sample sits on its source triangle's plane, inside the sphere hull
        tri = mesh.corners()
        n = mesh.face_normals()
        offs = np.einsum("ij,ij->i", n, tri[:, 0])
        d = s.positions @ n.T - offs[None, :]
        assert np.all(np.min(np.abs(d), axis=1) <= 1e-9)

    def test_degenerate_triangles_skipped(self):
        mesh = TriMesh(
            np.array([[0, 0, 0], [1, 0, 0], [2, 0, 0], [0, 1, 0]], float),
            np.array([[0, 1, 2], [0, 1, 3]]),  # first is collinear
        )
        s = sample_surface(mesh, 100, seed=0)
        assert np.allclose(np.abs(s.normals @ np.array([0, 0, 1.0])), 1.0)

    def test_all_degenerate_raises(self):
        mesh = TriMesh(np.array([[0, 0, 0], [1, 0, 0], [2, 0, 0]], float),
                       np.array([[0, 1, 2]]))
        with pytest.raises(EmptySurfaceError):
            sample_surface(mesh, 10, seed=0)

    def test_bad_count(self):
        with pytest.raises(InvalidInputError):
            sample_surface(unit_square(), 0, seed=0)


class TestSharpEdges:
    def test_smooth_sphere_has_none(self):
        assert len(sample_sharp_edges(icosphere(3), np.pi / 6, 100, seed=0)) == 0

    def test_cube_edges_found(self):
        # face diagonals join coplanar triangles, so only the 12 true edges remain
        assert len(sharp_edges(cube(), np.pi / 6)) == 12

    def test_cube_length_weighting(self):
        pts = sample_sharp_edges(cube(), np.pi / 6, 1200, seed=4)
        assert pts.shape == (1200, 3)
        # all points lie on cube edges: two coordinates at +-0.5
        at_face = np.isclose(np.abs(pts), 0.5)
        assert np.all(at_face.sum(axis=1) >= 2)
        # each of the 12 edges gets 100 +- 30 (3 sigma of binomial(1200, 1/12))
        counts = []
        for ax in range(3):
            others = [a for a in range(3) if a != ax]
            for s0 in (-0.5, 0.5):
                for s1 in (-0.5, 0.5):
                    on_edge = (np.isclose(pts[:, others[0]], s0)
                               & np.isclose(pts[:, others[1]], s1))
                    counts.append(int(on_edge.sum()))
        assert len(counts) == 12
        assert sum(counts) == 1200
        for c in counts:
            assert abs(c - 100) <= 30


class TestBoundary:
    def test_closed_mesh_raises(self):
        with pytest.raises(NoBoundaryError):
            sample_boundary(cube(), 10, seed=0)

    def test_counts_and_orthogonality(self):
        sb, sb_rot = sample_boundary(half_sphere(), 500, seed=5)
        assert len(sb) == len(sb_rot) == 500
        assert np.allclose(np.linalg.norm(sb_rot.normals, axis=1), 1.0, atol=1e-9)
        dots = np.einsum("ij,ij->i", sb.normals, sb_rot.normals)
        assert np.all(np.abs(dots) <= 1e-9)

    def test_flat_square_rotation_convention(self):
        sb, sb_rot = sample_boundary(unit_square(), 2000, seed=6)
        assert np.allclose(sb.normals, [0, 0, 1])
        # pick samples on the y=0 boundary edge: rotated normal must be (0,-1,0)
        on_bottom = np.isclose(sb.positions[:, 1], 0.0)
        assert on_bottom.any()
        assert np.allclose(sb_rot.normals[on_bottom], [0, -1, 0], atol=1e-12)
        # and on the x=1 edge it must point along +x
        on_right = np.isclose(sb.positions[:, 0], 1.0)
        assert on_right.any()
        assert np.allclose(sb_rot.normals[on_right], [1, 0, 0], atol=1e-12)

    def test_augmented_sampling_stacks(self):
        s = augmented_open_sampling(half_sphere(), 1000, 200, seed=7)
        assert len(s) == 1400


class TestMeshIO:
    def test_obj_round_trip(self, tmp_path):
        mesh = icosphere(1, radius=0.9)
        path = tmp_path / "m.obj"
        write_obj(path, mesh)
        back = read_obj(path)
        assert np.array_equal(back.vertices, mesh.vertices)
        assert np.array_equal(back.triangles, mesh.triangles)

    def test_obj_polygon_fan(self, tmp_path):
        path = tmp_path / "quad.obj"
        path.write_text("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n")
        mesh = read_obj(path)
        assert mesh.n_triangles == 2
        assert np.array_equal(mesh.triangles, [[0, 1, 2], [0, 2, 3]])

    def test_ply_binary_round_trip(self, tmp_path):
        mesh = cube()
        path = tmp_path / "m.ply"
        write_ply(path, mesh)
        back = read_ply(path)
        assert np.array_equal(back.vertices, mesh.vertices)
        assert np.array_equal(back.triangles, mesh.triangles)

    def test_ply_ascii(self, tmp_path):
        path = tmp_path / "a.ply"
        path.write_text(
            "ply\nformat ascii 1.0\n"
            "element vertex 3\nproperty float x\nproperty float y\nproperty float z\n"
            "element face 1\nproperty list uchar int vertex_indices\n"
            "end_header\n"
            "0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n"
        )
        mesh = read_ply(path)
        assert mesh.n_vertices == 3 and mesh.n_triangles == 1

    def test_read_mesh_dispatch(self, tmp_path):
        mesh = cube()
        for name in ("m.obj", "m.ply"):
            p = tmp_path / name
            (write_obj if name.endswith("obj") else write_ply)(p, mesh)
            assert read_mesh(p).n_triangles == 12
