"""Shared test oracles: deliberately independent of the library code paths."""

from __future__ import annotations

import numpy as np


def assert_ulp_close(a, b, ulps=8):
    """Equality up to a few ulps of the largest magnitude involved
    (re-association slack of float sums)."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    scale = max(float(np.max(np.abs(a), initial=0.0)),
                float(np.max(np.abs(b), initial=0.0)), 1.0)
    np.testing.assert_allclose(a, b, rtol=0.0, atol=ulps * np.spacing(scale))


def random_unit_vectors(rng, n):
    v = rng.normal(size=(n, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def random_plane_set(rng, n_planes, scale=1.0):
    points = rng.uniform(-scale, scale, size=(n_planes, 3))
    normals = random_unit_vectors(rng, n_planes)
    return points, normals


def plane_set_error(points, normals, x):
    """Direct sum of squared plane distances, no quadric algebra involved."""
    x = np.asarray(x, dtype=np.float64)
    d = np.einsum("ij,ij->i", normals, x[None, :] - points)
    return float(np.sum(d * d))


def grid_search_minimizer(points, normals, lo, hi, coarse=21, zooms=4,
                          descent_iters=60):
    """Brute-force minimizer of the summed squared plane distances.

    Nested grid search (each zoom shrinks the window around the incumbent
    until the step is at most 1e-3 of the original span) followed by
    per-coordinate parabolic descent.  The objective is evaluated directly
    from the plane set.
    """
    lo = np.asarray(lo, dtype=np.float64)
    hi = np.asarray(hi, dtype=np.float64)
    best = None
    best_val = np.inf
    window_lo, window_hi = lo.copy(), hi.copy()
    for _ in range(zooms):
        axes = [np.linspace(window_lo[d], window_hi[d], coarse) for d in range(3)]
        gx, gy, gz = np.meshgrid(*axes, indexing="ij")
        candidates = np.stack([gx.ravel(), gy.ravel(), gz.ravel()], axis=1)
        diffs = candidates[:, None, :] - points[None, :, :]
        d = np.einsum("kij,ij->ki", diffs, normals)
        vals = np.sum(d * d, axis=1)
        k = int(np.argmin(vals))
        if vals[k] < best_val:
            best_val = float(vals[k])
            best = candidates[k].copy()
        span = (window_hi - window_lo) / (coarse - 1)
        window_lo = best - 2.0 * span
        window_hi = best + 2.0 * span

    # coordinate descent: the objective restricted to one coordinate is an
    # exact parabola, so fit it from three samples and jump to its vertex
    x = best.copy()
    for _ in range(descent_iters):
        for d in range(3):
            h = 1e-4
            f0 = plane_set_error(points, normals, x)
            xp = x.copy(); xp[d] += h
            xm = x.copy(); xm[d] -= h
            fp = plane_set_error(points, normals, xp)
            fm = plane_set_error(points, normals, xm)
            curv = (fp - 2.0 * f0 + fm) / (h * h)
            if curv <= 0.0:
                continue
            x[d] -= (fp - fm) / (2.0 * h) / curv
    return x, plane_set_error(points, normals, x)
