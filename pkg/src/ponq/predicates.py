"""Exact-sign orientation and circumsphere predicates.

Each predicate evaluates a determinant in floats first, against a forward
error bound; only when the magnitude falls inside the uncertainty band does
it recompute the determinant exactly over integers (finite doubles are
dyadic rationals, so rescaling by a common power of two makes every input an
integer and Python's big ints do the rest).

`insphere_perturbed` additionally breaks exact cospherical ties with a
symbolic perturbation of the paraboloid lift, keyed by global vertex index:
conceptually each point's lifted coordinate is lowered by eps**index, which
selects a unique triangulation for degenerate inputs.  The perturbation term
of each point reduces to an orientation determinant of the other four.
"""

from __future__ import annotations

_EPS = 2.0 ** -53
# forward error constants for the specific expression trees used below
_O3D_BOUND = (7.0 + 56.0 * _EPS) * _EPS
_ISP_BOUND = (16.0 + 224.0 * _EPS) * _EPS


def _sign(x) -> int:
    return (x > 0) - (x < 0)


def _scaled_ints(values):
    """Map finite doubles to integers under one common power-of-two scale."""
    ratios = [v.as_integer_ratio() for v in values]
    shift = max(d.bit_length() for _, d in ratios)
    return [n << (shift - d.bit_length()) for n, d in ratios]


def _orient3d_det_int(pa, pb, pc, pd) -> int:
    ax, ay, az, bx, by, bz, cx, cy, cz, dx, dy, dz = _scaled_ints(
        [*pa, *pb, *pc, *pd])
    m00, m01, m02 = bx - ax, by - ay, bz - az
    m10, m11, m12 = cx - ax, cy - ay, cz - az
    m20, m21, m22 = dx - ax, dy - ay, dz - az
    return (m00 * (m11 * m22 - m12 * m21)
            - m01 * (m10 * m22 - m12 * m20)
            + m02 * (m10 * m21 - m11 * m20))


def orient3d(pa, pb, pc, pd) -> int:
    """Sign of det[b-a; c-a; d-a]: +1 when d lies on the side of plane (a,b,c)
    toward which (a,b,c) winds counter-clockwise, -1 opposite, 0 coplanar."""
    ax, ay, az = pa
    bx, by, bz = pb
    cx, cy, cz = pc
    dx, dy, dz = pd
    m00, m01, m02 = bx - ax, by - ay, bz - az
    m10, m11, m12 = cx - ax, cy - ay, cz - az
    m20, m21, m22 = dx - ax, dy - ay, dz - az

    p0 = m11 * m22 - m12 * m21
    p1 = m10 * m22 - m12 * m20
    p2 = m10 * m21 - m11 * m20
    det = m00 * p0 - m01 * p1 + m02 * p2

    perm = (abs(m00) * (abs(m11 * m22) + abs(m12 * m21))
            + abs(m01) * (abs(m10 * m22) + abs(m12 * m20))
            + abs(m02) * (abs(m10 * m21) + abs(m11 * m20)))
    if det > _O3D_BOUND * perm:
        return 1
    if det < -_O3D_BOUND * perm:
        return -1
    return _sign(_orient3d_det_int(pa, pb, pc, pd))


def _insphere_det_int(pa, pb, pc, pd, pe) -> int:
    ints = _scaled_ints([*pa, *pb, *pc, *pd, *pe])
    ex, ey, ez = ints[12], ints[13], ints[14]
    rows = []
    for k in range(4):
        x = ints[3 * k] - ex
        y = ints[3 * k + 1] - ey
        z = ints[3 * k + 2] - ez
        rows.append((x, y, z, x * x + y * y + z * z))

    def det3(r0, r1, r2):
        return (r0[0] * (r1[1] * r2[2] - r1[2] * r2[1])
                - r0[1] * (r1[0] * r2[2] - r1[2] * r2[0])
                + r0[2] * (r1[0] * r2[1] - r1[1] * r2[0]))

    a, b, c, d = rows
    return (-a[3] * det3(b, c, d) + b[3] * det3(a, c, d)
            - c[3] * det3(a, b, d) + d[3] * det3(a, b, c))


def _insphere_det_filtered(pa, pb, pc, pd, pe):
    """(det, certified) where det is the lifted determinant; e strictly inside
    the circumsphere of a positively oriented (a,b,c,d) iff det < 0."""
    aex, aey, aez = pa[0] - pe[0], pa[1] - pe[1], pa[2] - pe[2]
    bex, bey, bez = pb[0] - pe[0], pb[1] - pe[1], pb[2] - pe[2]
    cex, cey, cez = pc[0] - pe[0], pc[1] - pe[1], pc[2] - pe[2]
    dex, dey, dez = pd[0] - pe[0], pd[1] - pe[1], pd[2] - pe[2]

    ab = aex * bey - bex * aey
    bc = bex * cey - cex * bey
    cd = cex * dey - dex * cey
    da = dex * aey - aex * dey
    ac = aex * cey - cex * aey
    bd = bex * dey - dex * bey

    abc = aez * bc - bez * ac + cez * ab
    bcd = bez * cd - cez * bd + dez * bc
    cda = cez * da + dez * ac + aez * cd
    dab = dez * ab + aez * bd + bez * da

    alift = aex * aex + aey * aey + aez * aez
    blift = bex * bex + bey * bey + bez * bez
    clift = cex * cex + cey * cey + cez * cez
    dlift = dex * dex + dey * dey + dez * dez

    det = (dlift * abc - clift * dab) + (blift * cda - alift * bcd)

    aezp, bezp, cezp, dezp = abs(aez), abs(bez), abs(cez), abs(dez)
    aexbey = abs(aex * bey); bexaey = abs(bex * aey)
    bexcey = abs(bex * cey); cexbey = abs(cex * bey)
    cexdey = abs(cex * dey); dexcey = abs(dex * cey)
    dexaey = abs(dex * aey); aexdey = abs(aex * dey)
    aexcey = abs(aex * cey); cexaey = abs(cex * aey)
    bexdey = abs(bex * dey); dexbey = abs(dex * bey)
    perm = (((cexdey + dexcey) * bezp + (dexbey + bexdey) * cezp
             + (bexcey + cexbey) * dezp) * alift
            + ((dexaey + aexdey) * cezp + (aexcey + cexaey) * dezp
               + (cexdey + dexcey) * aezp) * blift
            + ((aexbey + bexaey) * dezp + (bexdey + dexbey) * aezp
               + (dexaey + aexdey) * bezp) * clift
            + ((bexcey + cexbey) * aezp + (cexaey + aexcey) * bezp
               + (aexbey + bexaey) * cezp) * dlift)

    bound = _ISP_BOUND * perm
    return det, (det > bound or det < -bound)


def insphere(pa, pb, pc, pd, pe) -> int:
    """+1 when e lies strictly inside the circumsphere of the positively
    oriented tetrahedron (a,b,c,d), -1 strictly outside, 0 cospherical."""
    det, certified = _insphere_det_filtered(pa, pb, pc, pd, pe)
    if certified:
        return -_sign(det)
    return -_sign(_insphere_det_int(pa, pb, pc, pd, pe))


def insphere_perturbed(pa, pb, pc, pd, pe, ia, ib, ic, id_, ie) -> int:
    """`insphere` with cospherical ties broken by the indexed lift
    perturbation; never returns 0 for a non-flat (a,b,c,d)."""
    det, certified = _insphere_det_filtered(pa, pb, pc, pd, pe)
    if certified:
        return -_sign(det)
    s = -_sign(_insphere_det_int(pa, pb, pc, pd, pe))
    if s != 0:
        return s
    # exactly cospherical: the smallest-index point's term decides.  Each
    # lift cofactor is the orientation determinant of the other four points.
    candidates = sorted((
        (ia, 1, (pb, pc, pd, pe)),
        (ib, -1, (pa, pc, pd, pe)),
        (ic, 1, (pa, pb, pd, pe)),
        (id_, -1, (pa, pb, pc, pe)),
        (ie, 1, (pa, pb, pc, pd)),
    ))
    for _, coeff, quad in candidates:
        o = _sign(_orient3d_det_int(*quad))
        if o != 0:
            return coeff * o
    raise ValueError("all five points coplanar; insphere undefined")
