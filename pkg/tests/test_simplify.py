import math

import numpy as np
import pytest

from ponq.errors import InvalidInputError
from ponq.fitting import accumulate, assign_voronoi
from ponq.sampling import sample_surface
from ponq.shapes import icosphere
from ponq.simplify import coarsen_grid, pool_elements

from helpers import assert_ulp_close, grid_search_minimizer


def sphere_elements(sub=2, n_samples=4000, seed=0):
    shape = icosphere(4)
    generators = icosphere(sub).vertices
    S = sample_surface(shape, n_samples, seed=seed)
    return accumulate(generators, S, assign_voronoi(generators, S)), S


def total_quadric(elements):
    A = np.array([e.q.A for e in elements])
    b = np.array([e.q.b for e in elements])
    c = np.array([e.q.c for e in elements])
    tA = np.array([[math.fsum(A[:, i, j]) for j in range(3)] for i in range(3)])
    tb = np.array([math.fsum(b[:, i]) for i in range(3)])
    return tA, tb, math.fsum(c)


class TestPoolElements:
    def test_identity_pooling(self):
        elems, _ = sphere_elements()
        pooled = pool_elements(elems, np.arange(len(elems)))
        assert len(pooled) == len(elems)
        for a, b in zip(pooled, elems):
            assert np.array_equal(a.q.A, b.q.A)
            assert np.array_equal(a.q.b, b.q.b)
            assert a.q.c == b.q.c
            assert np.allclose(a.p, b.p)
            assert np.allclose(a.n, b.n)
            assert a.sample_count == b.sample_count
            assert np.allclose(a.v_star, b.v_star, atol=1e-9)

    def test_pool_matches_direct_accumulation(self):
        # merging two cells' elements equals accumulating the union directly
        elems, S = sphere_elements(sub=1)
        merged = pool_elements(elems, np.zeros(len(elems), dtype=int))
        assert len(merged) == 1
        gen = np.array([[0.0, 0.0, 0.0]])
        direct = accumulate(gen, S, np.zeros(len(S), dtype=np.intp))
        assert_ulp_close(merged[0].q.A, direct[0].q.A, ulps=64)
        assert_ulp_close(merged[0].q.b, direct[0].q.b, ulps=64)
        assert_ulp_close(merged[0].q.c, direct[0].q.c, ulps=64)
        assert merged[0].sample_count == direct[0].sample_count

    def test_corner_cell_split(self):
        # elements on two faces of a corner pool into one that still snaps
        rng = np.random.default_rng(1)
        from ponq.sampling import SampleSet
        corner = np.array([0.5, 0.5, 0.5])
        pts, nrm = [], []
        for axis in range(3):
            p = corner - rng.uniform(0, 0.3, size=(200, 3))
            p[:, axis] = corner[axis]
            n = np.zeros(3); n[axis] = 1.0
            pts.append(p); nrm.append(np.tile(n, (200, 1)))
        S = SampleSet(np.vstack(pts), np.vstack(nrm))
        gens = np.array([[0.3, 0.45, 0.45], [0.45, 0.3, 0.45]])
        elems = accumulate(gens, S, assign_voronoi(gens, S))
        assert len(elems) == 2
        pooled = pool_elements(elems, np.zeros(2, dtype=int))
        assert np.linalg.norm(pooled[0].v_star - corner) < 1e-3
        ref, _ = grid_search_minimizer(S.positions, S.normals,
                                       corner - 0.4, corner + 0.4)
        assert np.linalg.norm(pooled[0].v_star - ref) < 1e-3

    def test_requires_full_mapping(self):
        elems, _ = sphere_elements(sub=1)
        with pytest.raises(InvalidInputError):
            pool_elements(elems, np.zeros(len(elems) - 1, dtype=int))


class TestCoarsenGrid:
    def test_res_two_single_level(self):
        elems, _ = sphere_elements(sub=1)
        levels = coarsen_grid(elems, grid_res=2, levels=1)
        assert len(levels) == 2
        assert len(levels[-1]) == 1

    def test_sample_count_conserved(self):
        elems, S = sphere_elements()
        levels = coarsen_grid(elems, grid_res=8, levels=3)
        for level in levels:
            assert sum(e.sample_count for e in level) == len(S)

    def test_quadric_conserved(self):
        elems, _ = sphere_elements()
        levels = coarsen_grid(elems, grid_res=8, levels=3)
        refA, refb, refc = total_quadric(levels[0])
        for level in levels[1:]:
            tA, tb, tc = total_quadric(level)
            assert_ulp_close(tA, refA, ulps=64)
            assert_ulp_close(tb, refb, ulps=64)
            assert_ulp_close(tc, refc, ulps=64)

    def test_element_count_non_increasing(self):
        elems, _ = sphere_elements()
        levels = coarsen_grid(elems, grid_res=16, levels=4)
        sizes = [len(level) for level in levels]
        assert all(a >= b for a, b in zip(sizes, sizes[1:]))

    def test_three_levels_from_128_to_16(self):
        # resolution halves per level: 128 -> 64 -> 32 -> 16
        elems, _ = sphere_elements(sub=1)
        levels = coarsen_grid(elems, grid_res=128, levels=3)
        assert len(levels) == 4

    def test_indivisible_resolution_rejected(self):
        elems, _ = sphere_elements(sub=1)
        with pytest.raises(InvalidInputError):
            coarsen_grid(elems, grid_res=24, levels=4)

    def test_pooled_mesh_still_valid(self):
        from ponq.extraction import mesh_elements
        elems, _ = sphere_elements(sub=3, n_samples=8000)
        levels = coarsen_grid(elems, grid_res=16, levels=1)
        result = mesh_elements(levels[-1])
        assert result.mesh.signed_volume() > 0
        assert result.mesh.boundary_loop_count() == 0
