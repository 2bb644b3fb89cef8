"""Element pooling: merge generators cell-by-cell by summing their quadrics.

Because quadrics add, a group of elements collapses into one whose optimal
vertex still snaps to the sharp feature the group described.  Pooling over
2x2x2 blocks of a power-of-two grid yields a mesh hierarchy at almost no
cost.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import InvalidInputError
from .fitting import DEGENERATE_NORMAL_TOL, PoNQElement
from .quadric import Quadric, QuadricArrays, batch_minimizer


def _fsum_axis0(values: np.ndarray) -> np.ndarray:
    """Correctly rounded per-component sum (shape-preserving over axis 0)."""
    flat = values.reshape(len(values), -1)
    out = np.array([math.fsum(flat[:, k]) for k in range(flat.shape[1])])
    return out.reshape(values.shape[1:])


def pool_elements(elements: list[PoNQElement], cell_of) -> list[PoNQElement]:
    """Merge all elements mapped to one cell into a single element.

    Quadrics are summed (correctly rounded per component); positions and
    normals average weighted by supporting sample count; the pooled optimal
    vertex re-minimizes the pooled quadric.  Output cells sort by cell id.
    """
    cell_of = np.asarray(cell_of, dtype=np.int64)
    if len(cell_of) != len(elements):
        raise InvalidInputError("cell_of must map every element")
    if len(elements) == 0:
        return []

    order = np.argsort(cell_of, kind="stable")
    cells, starts = np.unique(cell_of[order], return_index=True)
    bounds = np.append(starts, len(order))

    counts = np.array([e.sample_count for e in elements], dtype=np.float64)
    positions = np.array([e.p for e in elements])
    normals = np.array([e.n for e in elements])
    A = np.array([e.q.A for e in elements])
    b = np.array([e.q.b for e in elements])
    c = np.array([e.q.c for e in elements])

    pooled_A = np.empty((len(cells), 3, 3))
    pooled_b = np.empty((len(cells), 3))
    pooled_c = np.empty(len(cells))
    pooled_p = np.empty((len(cells), 3))
    pooled_n = np.empty((len(cells), 3))
    pooled_count = np.empty(len(cells), dtype=np.int64)

    for out, (lo, hi) in enumerate(zip(bounds[:-1], bounds[1:])):
        members = order[lo:hi]
        w = counts[members]
        wsum = w.sum()
        pooled_A[out] = _fsum_axis0(A[members])
        pooled_b[out] = _fsum_axis0(b[members])
        pooled_c[out] = math.fsum(c[members])
        pooled_p[out] = (w[:, None] * positions[members]).sum(axis=0) / wsum
        n = (w[:, None] * normals[members]).sum(axis=0)
        norm = np.linalg.norm(n)
        if norm < DEGENERATE_NORMAL_TOL:
            # opposing normals cancel: borrow from the member nearest the
            # pooled position, as the accumulation stage does with samples
            d2 = np.einsum("ij,ij->i", positions[members] - pooled_p[out],
                           positions[members] - pooled_p[out])
            n = normals[members[np.argmin(d2)]]
            norm = np.linalg.norm(n)
        pooled_n[out] = n / norm
        pooled_count[out] = int(w.sum())

    qa = QuadricArrays(pooled_A, pooled_b, pooled_c)
    v_star = batch_minimizer(qa, pooled_p)
    return [
        PoNQElement(p=pooled_p[i], n=pooled_n[i], q=Quadric(pooled_A[i],
                    pooled_b[i], pooled_c[i]), v_star=v_star[i],
                    sample_count=int(pooled_count[i]))
        for i in range(len(cells))
    ]


def grid_cells(elements: list[PoNQElement], bbox_min, bbox_max,
               res: int) -> np.ndarray:
    """Cell index of each element's position on a res^3 grid over the box."""
    lo = np.asarray(bbox_min, dtype=np.float64)
    hi = np.asarray(bbox_max, dtype=np.float64)
    span = np.maximum(hi - lo, 1e-300)
    pos = np.array([e.p for e in elements])
    ijk = np.clip(((pos - lo) / span * res).astype(np.int64), 0, res - 1)
    return (ijk[:, 0] * res + ijk[:, 1]) * res + ijk[:, 2]


def coarsen_grid(elements: list[PoNQElement], grid_res: int, levels: int,
                 bbox_min=None, bbox_max=None) -> list[list[PoNQElement]]:
    """Pool 2x2x2 grid blocks `levels` times; returns one element list per
    level, finest (the input binned at grid_res) first, coarsest last."""
    if levels < 1:
        raise InvalidInputError("levels must be >= 1")
    if grid_res % (1 << levels) != 0:
        raise InvalidInputError(
            f"grid_res {grid_res} not divisible by 2^{levels}")
    pos = np.array([e.p for e in elements])
    lo = pos.min(axis=0) if bbox_min is None else np.asarray(bbox_min, float)
    hi = pos.max(axis=0) if bbox_max is None else np.asarray(bbox_max, float)

    out = [elements]
    current = elements
    res = grid_res
    for _ in range(levels):
        res //= 2
        cells = grid_cells(current, lo, hi, res)
        current = pool_elements(current, cells)
        out.append(current)
    return out
