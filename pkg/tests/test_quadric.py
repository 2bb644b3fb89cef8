import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ponq.errors import DegenerateQuadricError, InvalidInputError
from ponq.quadric import (PlaneConstraint, Quadric, accumulate_plane_quadrics,
                          anisotropy, batch_anisotropy, batch_evaluate,
                          batch_minimizer, batch_normalize, evaluate,
                          minimizer, normalize, plane_quadric, quadric_sum,
                          residual_at_minimizer)

from helpers import (assert_ulp_close, grid_search_minimizer, plane_set_error,
                     random_plane_set)


def quadric_of(points, normals):
    return quadric_sum(*(plane_quadric(PlaneConstraint(s, n))
                         for s, n in zip(points, normals)))


class TestPlaneQuadric:
    def test_plane_through_origin(self):
        q = plane_quadric(PlaneConstraint((0, 0, 0), (0, 0, 1)))
        assert np.allclose(q.A, np.diag([0, 0, 1]))
        assert np.allclose(q.b, 0)
        assert q.c == 0

    def test_direct_substitution(self):
        q = plane_quadric(PlaneConstraint((1, 2, 3), (1, 0, 0)))
        assert np.allclose(q.A, np.diag([1, 0, 0]))
        assert np.allclose(q.b, [1, 0, 0])
        assert q.c == pytest.approx(1.0)

    def test_squared_distance(self):
        q = plane_quadric(PlaneConstraint((1, 2, 3), (1, 0, 0)))
        assert evaluate(q, (4, 2, 3)) == pytest.approx(9.0)

    def test_rank_one(self):
        q = plane_quadric(PlaneConstraint((0.3, -0.2, 0.9), (0.6, 0.8, 0.0)))
        assert np.linalg.matrix_rank(q.A, tol=1e-12) == 1

    def test_non_unit_normal_rejected(self):
        with pytest.raises(InvalidInputError):
            PlaneConstraint((0, 0, 0), (0, 0, 1.001))


class TestSumAndEvaluate:
    def test_additive_identity(self):
        q = plane_quadric(PlaneConstraint((1, 2, 3), (0, 1, 0)))
        total = q + Quadric.zero()
        assert np.array_equal(total.A, q.A)
        assert np.array_equal(total.b, q.b)
        assert total.c == q.c

    def test_commutative(self):
        rng = np.random.default_rng(7)
        pts, nrm = random_plane_set(rng, 2)
        q1 = plane_quadric(PlaneConstraint(pts[0], nrm[0]))
        q2 = plane_quadric(PlaneConstraint(pts[1], nrm[1]))
        a = q1 + q2
        b = q2 + q1
        assert np.array_equal(a.A, b.A) and np.array_equal(a.b, b.b) and a.c == b.c

    def test_two_axis_planes(self):
        qx = plane_quadric(PlaneConstraint((1, 0, 0), (1, 0, 0)))
        qy = plane_quadric(PlaneConstraint((0, 2, 0), (0, 1, 0)))
        assert evaluate(qx + qy, (0, 0, 0)) == pytest.approx(5.0)

    def test_zero_quadric_everywhere_zero(self):
        for x in [(0, 0, 0), (1, -2, 3), (100, 0.5, -7)]:
            assert evaluate(Quadric.zero(), x) == 0.0

    def test_z_squared(self):
        q = plane_quadric(PlaneConstraint((0, 0, 0), (0, 0, 1)))
        assert evaluate(q, (5, 7, 2)) == pytest.approx(4.0)

    def test_sum_matches_per_plane_evaluation(self):
        rng = np.random.default_rng(11)
        for _ in range(100):
            pts, nrm = random_plane_set(rng, rng.integers(1, 12))
            q = quadric_of(pts, nrm)
            x = rng.uniform(-1, 1, 3)
            direct = sum(evaluate(plane_quadric(PlaneConstraint(s, n)), x)
                         for s, n in zip(pts, nrm))
            assert evaluate(q, x) == pytest.approx(direct, abs=1e-9)


class TestMinimizer:
    def test_three_orthogonal_planes(self):
        q = quadric_of(np.array([[1, 0, 0], [0, 2, 0], [0, 0, 3]], float), np.eye(3))
        assert np.allclose(minimizer(q, (0, 0, 0)), [1, 2, 3], atol=1e-12)

    def test_single_plane_projects_anchor(self):
        q = plane_quadric(PlaneConstraint((0, 0, 0), (0, 0, 1)))
        v = minimizer(q, (0.4, 0.7, 0.9))
        assert np.allclose(v, [0.4, 0.7, 0.0], atol=1e-12)

    def test_corner_planes_match_brute_force(self):
        rng = np.random.default_rng(3)
        # planes tangent to faces meeting near the origin corner
        pts = rng.uniform(-0.05, 0.05, size=(20, 3))
        base = np.eye(3)[rng.integers(0, 3, 20)]
        sign = rng.choice([-1.0, 1.0], 20)
        nrm = base * sign[:, None]
        q = quadric_of(pts, nrm)
        v = minimizer(q, np.zeros(3))
        ref, _ = grid_search_minimizer(pts, nrm, [-0.5] * 3, [0.5] * 3)
        assert np.linalg.norm(v - ref) < 1e-6

    def test_zero_quadric_raises(self):
        with pytest.raises(DegenerateQuadricError):
            minimizer(Quadric.zero(), (0, 0, 0))

    def test_never_worse_than_anchor(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            pts, nrm = random_plane_set(rng, rng.integers(1, 8))
            q = quadric_of(pts, nrm)
            anchor = rng.uniform(-1, 1, 3)
            v = minimizer(q, anchor)
            assert evaluate(q, v) <= evaluate(q, anchor) + 1e-9

    def test_local_optimality_under_perturbation(self):
        # 1000 full-rank quadrics, 100 random unit-millimeter nudges each
        rng = np.random.default_rng(21)
        deltas = rng.normal(size=(100, 3))
        deltas *= 1e-3 / np.linalg.norm(deltas, axis=1, keepdims=True)
        for _ in range(1000):
            pts = rng.uniform(-1, 1, (4, 3))
            frame = np.linalg.qr(rng.normal(size=(3, 3)))[0]
            extra = rng.normal(size=3)
            nrm = np.vstack([frame.T, extra / np.linalg.norm(extra)])
            q = quadric_of(pts, nrm)
            v = minimizer(q, np.zeros(3))
            base = evaluate(q, v)
            vals = (np.einsum("di,ij,dj->d", v + deltas, q.A, v + deltas)
                    - 2.0 * (v + deltas) @ q.b + q.c)
            assert (vals >= base - 1e-12).all()


class TestResidual:
    def test_planes_through_common_point(self):
        p = np.array([0.3, -0.4, 0.8])
        q = quadric_of(np.tile(p, (3, 1)), np.eye(3))
        v = minimizer(q, np.zeros(3))
        assert residual_at_minimizer(q, v) == pytest.approx(0.0, abs=1e-12)

    def test_two_parallel_planes(self):
        q = quadric_of(np.array([[0, 0, 0], [0, 0, 1]], float),
                       np.array([[0, 0, 1], [0, 0, 1]], float))
        v = minimizer(q, np.zeros(3))
        assert v[2] == pytest.approx(0.5)
        assert residual_at_minimizer(q, v) == pytest.approx(0.5)

    def test_matches_evaluate(self):
        rng = np.random.default_rng(9)
        for _ in range(50):
            pts, nrm = random_plane_set(rng, rng.integers(3, 10))
            q = quadric_of(pts, nrm)
            v = minimizer(q, rng.uniform(-1, 1, 3))
            assert residual_at_minimizer(q, v) == pytest.approx(evaluate(q, v), abs=1e-9)


class TestNormalizeAnisotropy:
    def test_divides_by_largest_eigenvalue(self):
        q = Quadric(np.diag([4.0, 2.0, 1.0]), np.zeros(3), 0.0)
        nq = normalize(q)
        assert np.allclose(nq.A, np.diag([1.0, 0.5, 0.25]))

    def test_minimizer_invariant(self):
        rng = np.random.default_rng(13)
        for _ in range(30):
            pts, nrm = random_plane_set(rng, rng.integers(4, 12))
            q = quadric_of(pts, nrm)
            anchor = rng.uniform(-1, 1, 3)
            assert np.allclose(minimizer(q, anchor), minimizer(normalize(q), anchor),
                               atol=1e-8)

    def test_evaluate_scales(self):
        rng = np.random.default_rng(17)
        pts, nrm = random_plane_set(rng, 6)
        q = quadric_of(pts, nrm)
        lam_max = np.linalg.eigvalsh(q.A)[-1]
        x = rng.uniform(-1, 1, 3)
        assert evaluate(normalize(q), x) == pytest.approx(evaluate(q, x) / lam_max)

    def test_zero_raises(self):
        with pytest.raises(DegenerateQuadricError):
            normalize(Quadric.zero())

    def test_anisotropy_single_plane(self):
        q = plane_quadric(PlaneConstraint((0.2, 0.1, 0.5), (0, 1, 0)))
        assert anisotropy(q) == pytest.approx(0.0, abs=1e-12)

    def test_anisotropy_isotropic(self):
        q = quadric_of(np.zeros((3, 3)), np.eye(3))
        assert anisotropy(q) == pytest.approx(1.0)

    def test_anisotropy_rotated_plane_pair(self):
        # z=0 plane plus the same plane rotated a quarter turn about x
        q = quadric_of(np.zeros((2, 3)),
                       np.array([[0, 0, 1], [0, 1, 0]], float))
        assert anisotropy(q) == pytest.approx(1.0)
        assert anisotropy(normalize(q)) == pytest.approx(1.0)


@st.composite
def plane_sets(draw):
    n = draw(st.integers(min_value=1, max_value=10))
    seed = draw(st.integers(min_value=0, max_value=2 ** 31))
    rng = np.random.default_rng(seed)
    return random_plane_set(rng, n)


@given(plane_sets(), st.integers(min_value=1, max_value=9))
@settings(max_examples=60, deadline=None)
def test_partition_additivity(planes, split):
    pts, nrm = planes
    cut = min(split, len(pts))
    full = quadric_of(pts, nrm)
    left = quadric_of(pts[:cut], nrm[:cut]) if cut else Quadric.zero()
    right = quadric_of(pts[cut:], nrm[cut:]) if cut < len(pts) else Quadric.zero()
    merged = left + right
    assert_ulp_close(merged.A, full.A)
    assert_ulp_close(merged.b, full.b)
    assert_ulp_close(merged.c, full.c)


@given(plane_sets())
@settings(max_examples=60, deadline=None)
def test_non_negative_everywhere(planes):
    pts, nrm = planes
    q = quadric_of(pts, nrm)
    rng = np.random.default_rng(0)
    for x in rng.uniform(-1, 1, size=(20, 3)):
        assert evaluate(q, x) >= -1e-9


@given(plane_sets())
@settings(max_examples=40, deadline=None)
def test_evaluate_matches_plane_set(planes):
    pts, nrm = planes
    q = quadric_of(pts, nrm)
    rng = np.random.default_rng(1)
    for x in rng.uniform(-1, 1, size=(5, 3)):
        assert evaluate(q, x) == pytest.approx(plane_set_error(pts, nrm, x), abs=1e-9)


class TestBatchedForms:
    def test_accumulate_matches_scalar(self):
        rng = np.random.default_rng(23)
        pts, nrm = random_plane_set(rng, 40)
        groups = rng.integers(0, 5, 40)
        qa = accumulate_plane_quadrics(pts, nrm, groups, 5)
        for g in range(5):
            mask = groups == g
            ref = quadric_of(pts[mask], nrm[mask])
            assert np.allclose(qa.A[g], ref.A, atol=1e-12)
            assert np.allclose(qa.b[g], ref.b, atol=1e-12)
            assert qa.c[g] == pytest.approx(ref.c, abs=1e-12)

    def test_batch_minimizer_evaluate_normalize(self):
        rng = np.random.default_rng(29)
        pts, nrm = random_plane_set(rng, 60)
        groups = np.repeat(np.arange(6), 10)
        qa = accumulate_plane_quadrics(pts, nrm, groups, 6)
        anchors = rng.uniform(-1, 1, (6, 3))
        vs = batch_minimizer(qa, anchors)
        evals = batch_evaluate(qa, vs)
        nqa = batch_normalize(qa)
        ratios = batch_anisotropy(qa)
        for g in range(6):
            q = qa.quadric(g)
            assert np.allclose(vs[g], minimizer(q, anchors[g]), atol=1e-9)
            assert evals[g] == pytest.approx(evaluate(q, vs[g]), abs=1e-9)
            assert np.allclose(nqa.quadric(g).A, normalize(q).A, atol=1e-12)
            assert ratios[g] == pytest.approx(anisotropy(q), abs=1e-12)
