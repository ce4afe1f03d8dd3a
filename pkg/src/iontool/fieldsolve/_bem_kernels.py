"""Boundary-element influence integrals.

For a target point p and a flat triangle s with outward unit normal n,

    alpha = int_s G ds,          G = -1 / (4 pi |x' - p|)
    beta  = int_s n . grad' G ds = int_s n.(x' - p) / (4 pi |x' - p|^3) ds

and, for field evaluation, the gradients of both with respect to p.

Each integral uses the base triangle rule on a uniform ``n_sub``-fold
subdivision, with ``n_sub = ceil(near_ratio * diameter / distance)`` clipped
to ``[1, n_max]``.  When p is the element's own centroid the single-layer
integral is done by a polar split around p (closed-form radial integral,
Gauss-Legendre in angle) and beta is zero.

Two implementations share this contract: loop kernels compiled with numba and
a vectorised numpy path.  Both give identical subdivision choices.
"""
from __future__ import annotations

import numpy as np

from .._accel import njit
from .quadrature import composite_rule

FOUR_PI = 4.0 * np.pi
# ratios within this relative margin of an integer round down, so both
# backends pick the same subdivision despite last-bit distance differences
NSUB_SLACK = 1.0 - 1e-12


# ---------------------------------------------------------------- numba --
@njit
def _seg_dist2(p, a, b):
    abx, aby, abz = b[0] - a[0], b[1] - a[1], b[2] - a[2]
    apx, apy, apz = p[0] - a[0], p[1] - a[1], p[2] - a[2]
    L2 = abx * abx + aby * aby + abz * abz
    t = (apx * abx + apy * aby + apz * abz) / L2
    t = min(1.0, max(0.0, t))
    dx, dy, dz = apx - t * abx, apy - t * aby, apz - t * abz
    return dx * dx + dy * dy + dz * dz


@njit
def _point_triangle_distance(p, v0, v1, v2, n):
    # projection inside -> plane distance; otherwise nearest edge
    h = (p[0] - v0[0]) * n[0] + (p[1] - v0[1]) * n[1] + (p[2] - v0[2]) * n[2]
    q = np.empty(3)
    for k in range(3):
        q[k] = p[k] - h * n[k]
    inside = True
    for (a, b) in ((v0, v1), (v1, v2), (v2, v0)):
        ex, ey, ez = b[0] - a[0], b[1] - a[1], b[2] - a[2]
        qx, qy, qz = q[0] - a[0], q[1] - a[1], q[2] - a[2]
        cx = ey * qz - ez * qy
        cy = ez * qx - ex * qz
        cz = ex * qy - ey * qx
        if cx * n[0] + cy * n[1] + cz * n[2] < 0.0:
            inside = False
    if inside:
        return abs(h)
    d2 = min(_seg_dist2(p, v0, v1), min(_seg_dist2(p, v1, v2), _seg_dist2(p, v2, v0)))
    return np.sqrt(d2)


@njit
def _n_sub(dist, diam, near_ratio, n_max):
    if dist <= 0.0:
        return n_max
    n = int(np.ceil(NSUB_SLACK * near_ratio * diam / dist))
    if n < 1:
        n = 1
    if n > n_max:
        n = n_max
    return n


@njit
def _self_alpha_kernel(c, v0, v1, v2, gl_x, gl_w):
    # int 1/r over the triangle split into three sub-triangles at c
    total = 0.0
    for (P, Q) in ((v0, v1), (v1, v2), (v2, v0)):
        ux, uy, uz = Q[0] - P[0], Q[1] - P[1], Q[2] - P[2]
        L = np.sqrt(ux * ux + uy * uy + uz * uz)
        ux, uy, uz = ux / L, uy / L, uz / L
        t = (c[0] - P[0]) * ux + (c[1] - P[1]) * uy + (c[2] - P[2]) * uz
        fx, fy, fz = P[0] + t * ux - c[0], P[1] + t * uy - c[1], P[2] + t * uz - c[2]
        h = np.sqrt(fx * fx + fy * fy + fz * fz)
        th1 = np.arctan2(-t, h)
        th2 = np.arctan2(L - t, h)
        half = 0.5 * (th2 - th1)
        mid = 0.5 * (th2 + th1)
        acc = 0.0
        for k in range(gl_x.shape[0]):
            acc += gl_w[k] * h / np.cos(mid + half * gl_x[k])
        total += half * acc
    return -total / FOUR_PI


@njit
def _tri_integrals(p, v0, e1, e2, nrm, area, n_sub, rp, rw):
    h = 1.0 / n_sub
    wsub = area / (n_sub * n_sub)
    IG = 0.0
    IB = 0.0
    nk = rw.shape[0]
    for i in range(n_sub):
        for j in range(n_sub - i):
            for up in range(2):
                if up == 1 and j >= n_sub - i - 1:
                    continue
                if up == 0:
                    ax, ay, bx, by, cx, cy = i * h, j * h, (i + 1) * h, j * h, i * h, (j + 1) * h
                else:
                    ax, ay, bx, by, cx, cy = (i + 1) * h, j * h, (i + 1) * h, (j + 1) * h, i * h, (j + 1) * h
                for k in range(nk):
                    xi = ax + rp[k, 0] * (bx - ax) + rp[k, 1] * (cx - ax)
                    et = ay + rp[k, 0] * (by - ay) + rp[k, 1] * (cy - ay)
                    rx = v0[0] + xi * e1[0] + et * e2[0] - p[0]
                    ry = v0[1] + xi * e1[1] + et * e2[1] - p[1]
                    rz = v0[2] + xi * e1[2] + et * e2[2] - p[2]
                    r = np.sqrt(rx * rx + ry * ry + rz * rz)
                    w = rw[k] * wsub
                    IG -= w / r
                    IB += w * (nrm[0] * rx + nrm[1] * ry + nrm[2] * rz) / (r * r * r)
    return IG / FOUR_PI, IB / FOUR_PI


@njit
def _tri_gradients(p, v0, e1, e2, nrm, area, n_sub, rp, rw, gG, gB):
    h = 1.0 / n_sub
    wsub = area / (n_sub * n_sub)
    for q in range(3):
        gG[q] = 0.0
        gB[q] = 0.0
    nk = rw.shape[0]
    for i in range(n_sub):
        for j in range(n_sub - i):
            for up in range(2):
                if up == 1 and j >= n_sub - i - 1:
                    continue
                if up == 0:
                    ax, ay, bx, by, cx, cy = i * h, j * h, (i + 1) * h, j * h, i * h, (j + 1) * h
                else:
                    ax, ay, bx, by, cx, cy = (i + 1) * h, j * h, (i + 1) * h, (j + 1) * h, i * h, (j + 1) * h
                for k in range(nk):
                    xi = ax + rp[k, 0] * (bx - ax) + rp[k, 1] * (cx - ax)
                    et = ay + rp[k, 0] * (by - ay) + rp[k, 1] * (cy - ay)
                    rx = v0[0] + xi * e1[0] + et * e2[0] - p[0]
                    ry = v0[1] + xi * e1[1] + et * e2[1] - p[1]
                    rz = v0[2] + xi * e1[2] + et * e2[2] - p[2]
                    r2 = rx * rx + ry * ry + rz * rz
                    r = np.sqrt(r2)
                    r3 = r2 * r
                    w = rw[k] * wsub
                    nr = nrm[0] * rx + nrm[1] * ry + nrm[2] * rz
                    # grad_p G = -r_vec / (4 pi r^3)
                    gG[0] -= w * rx / r3
                    gG[1] -= w * ry / r3
                    gG[2] -= w * rz / r3
                    # grad_p (n.r / (4 pi r^3)) = (-n / r^3 + 3 (n.r) r_vec / r^5) / (4 pi)
                    f = 3.0 * nr / (r3 * r2)
                    gB[0] += w * (-nrm[0] / r3 + f * rx)
                    gB[1] += w * (-nrm[1] / r3 + f * ry)
                    gB[2] += w * (-nrm[2] / r3 + f * rz)
    for q in range(3):
        gG[q] /= FOUR_PI
        gB[q] /= FOUR_PI


@njit
def influence_matrices_numba(points, corners, normals, areas, diams, rp, rw, self_idx,
                             near_ratio, n_max, gl_x, gl_w):
    n_el = corners.shape[0]
    m = points.shape[0]
    alpha = np.empty((n_el, m))
    beta = np.empty((n_el, m))
    for j in range(m):
        p = points[j]
        for i in range(n_el):
            v0 = corners[i, 0]
            v1 = corners[i, 1]
            v2 = corners[i, 2]
            if self_idx[j] == i:
                alpha[i, j] = _self_alpha_kernel(p, v0, v1, v2, gl_x, gl_w)
                beta[i, j] = 0.0
                continue
            d = _point_triangle_distance(p, v0, v1, v2, normals[i])
            ns = _n_sub(d, diams[i], near_ratio, n_max)
            a, b = _tri_integrals(p, v0, v1 - v0, v2 - v0, normals[i], areas[i], ns, rp, rw)
            alpha[i, j] = a
            beta[i, j] = b
    return alpha, beta


@njit
def potential_numba(points, corners, normals, areas, diams, rp, rw, self_idx,
                    near_ratio, n_max, gl_x, gl_w, sigma, phi):
    n_el = corners.shape[0]
    m = points.shape[0]
    ns_ = sigma.shape[1]
    out = np.zeros((m, ns_))
    for j in range(m):
        p = points[j]
        for i in range(n_el):
            v0 = corners[i, 0]
            v1 = corners[i, 1]
            v2 = corners[i, 2]
            if self_idx[j] == i:
                a = _self_alpha_kernel(p, v0, v1, v2, gl_x, gl_w)
                b = 0.0
            else:
                d = _point_triangle_distance(p, v0, v1, v2, normals[i])
                ns = _n_sub(d, diams[i], near_ratio, n_max)
                a, b = _tri_integrals(p, v0, v1 - v0, v2 - v0, normals[i], areas[i], ns, rp, rw)
            for s in range(ns_):
                out[j, s] += a * sigma[i, s] - b * phi[i, s]
    return out


@njit
def field_numba(points, corners, normals, areas, diams, rp, rw, near_ratio, n_max, sigma, phi):
    n_el = corners.shape[0]
    m = points.shape[0]
    ns_ = sigma.shape[1]
    out = np.zeros((m, ns_, 3))
    gG = np.empty(3)
    gB = np.empty(3)
    for j in range(m):
        p = points[j]
        for i in range(n_el):
            v0 = corners[i, 0]
            v1 = corners[i, 1]
            v2 = corners[i, 2]
            d = _point_triangle_distance(p, v0, v1, v2, normals[i])
            ns = _n_sub(d, diams[i], near_ratio, n_max)
            _tri_gradients(p, v0, v1 - v0, v2 - v0, normals[i], areas[i], ns, rp, rw, gG, gB)
            for s in range(ns_):
                for q in range(3):
                    out[j, s, q] += gG[q] * sigma[i, s] - gB[q] * phi[i, s]
    return out


# ---------------------------------------------------------------- numpy --
def _seg_dist2_np(p, a, b):
    ab = b - a
    ap = p - a
    t = np.clip(np.einsum("...k,...k->...", ap, ab) / np.einsum("...k,...k->...", ab, ab), 0.0, 1.0)
    d = ap - t[..., None] * ab
    return np.einsum("...k,...k->...", d, d)


def point_triangle_distance_np(p, corners, normals):
    """Distances (B, N) between points (B, 3) and triangles (N, 3, 3)."""
    P = p[:, None, :]
    v0, v1, v2 = corners[None, :, 0], corners[None, :, 1], corners[None, :, 2]
    n = normals[None]
    h = np.einsum("bnk,bnk->bn", P - v0, np.broadcast_to(n, (P.shape[0],) + n.shape[1:]))
    q = P - h[..., None] * n
    inside = np.ones(h.shape, dtype=bool)
    for a, b in ((v0, v1), (v1, v2), (v2, v0)):
        c = np.cross(b - a, q - a)
        inside &= np.einsum("bnk,bnk->bn", c, np.broadcast_to(n, c.shape)) >= 0.0
    d2 = np.minimum(_seg_dist2_np(P, v0, v1), np.minimum(_seg_dist2_np(P, v1, v2), _seg_dist2_np(P, v2, v0)))
    return np.where(inside, np.abs(h), np.sqrt(d2))


def _n_sub_np(dist, diams, near_ratio, n_max):
    with np.errstate(divide="ignore"):
        n = np.ceil(NSUB_SLACK * near_ratio * diams[None, :] / dist)
    n = np.where(dist <= 0, n_max, n)
    return np.clip(n, 1, n_max).astype(np.int64)


def self_alpha_np(c, v, gl_x, gl_w):
    """Polar-split single-layer self integral for one triangle (vertices v) at point c."""
    total = 0.0
    for P, Q in ((v[0], v[1]), (v[1], v[2]), (v[2], v[0])):
        L = np.linalg.norm(Q - P)
        u = (Q - P) / L
        t = np.dot(c - P, u)
        h = np.linalg.norm(P + t * u - c)
        th1, th2 = np.arctan2(-t, h), np.arctan2(L - t, h)
        half, mid = 0.5 * (th2 - th1), 0.5 * (th2 + th1)
        total += half * np.sum(gl_w * h / np.cos(mid + half * gl_x))
    return -total / FOUR_PI


def _pair_integrals_np(p, corners, normals, areas, rule, grad=False):
    """Integrals for paired arrays: p (P, 3), corners (P, 3, 3) with one rule."""
    v0 = corners[:, 0]
    e1 = corners[:, 1] - v0
    e2 = corners[:, 2] - v0
    q = v0[:, None] + rule.points[None, :, :1] * e1[:, None] + rule.points[None, :, 1:] * e2[:, None]
    r = q - p[:, None, :]
    r2 = np.einsum("pkc,pkc->pk", r, r)
    rn = np.sqrt(r2)
    w = rule.weights[None, :] * areas[:, None] / FOUR_PI
    nr = np.einsum("pkc,pc->pk", r, normals)
    if not grad:
        a = -np.sum(w / rn, axis=1)
        b = np.sum(w * nr / (r2 * rn), axis=1)
        return a, b
    r3 = r2 * rn
    gG = -np.einsum("pk,pkc->pc", w / r3, r)
    gB = (-np.sum(w / r3, axis=1)[:, None] * normals
          + np.einsum("pk,pkc->pc", w * 3.0 * nr / (r3 * r2), r))
    return gG, gB


def _block_coeffs_np(points, corners, normals, areas, diams, rule_n, near_ratio, n_max, grad):
    dist = point_triangle_distance_np(points, corners, normals)
    nsub = _n_sub_np(dist, diams, near_ratio, n_max)
    B, N = nsub.shape
    shape = (B, N, 3) if grad else (B, N)
    A = np.empty(shape)
    Bm = np.empty(shape)
    for n in np.unique(nsub):
        jj, ii = np.nonzero(nsub == n)
        rule = composite_rule(rule_n, int(n))
        # chunk to bound memory
        step = max(1, 2_000_000 // rule.size)
        for s in range(0, jj.size, step):
            js, is_ = jj[s:s + step], ii[s:s + step]
            a, b = _pair_integrals_np(points[js], corners[is_], normals[is_], areas[is_], rule, grad)
            A[js, is_] = a
            Bm[js, is_] = b
    return A, Bm


def influence_matrices_np(points, corners, normals, areas, diams, rule_n, self_idx,
                          near_ratio, n_max, gl_x, gl_w, block=64):
    """Numpy counterpart of :func:`influence_matrices_numba` (returns (N_el, M) arrays)."""
    m = points.shape[0]
    alpha = np.empty((corners.shape[0], m))
    beta = np.empty((corners.shape[0], m))
    for s in range(0, m, block):
        pts = points[s:s + block]
        a, b = _block_coeffs_np(pts, corners, normals, areas, diams, rule_n, near_ratio, n_max, False)
        for jl in range(pts.shape[0]):
            i = self_idx[s + jl]
            if i >= 0:
                a[jl, i] = self_alpha_np(pts[jl], corners[i], gl_x, gl_w)
                b[jl, i] = 0.0
        alpha[:, s:s + block] = a.T
        beta[:, s:s + block] = b.T
    return alpha, beta


def potential_np(points, corners, normals, areas, diams, rule_n, self_idx, near_ratio, n_max,
                 gl_x, gl_w, sigma, phi, block=64):
    a, b = influence_matrices_np(points, corners, normals, areas, diams, rule_n, self_idx,
                                 near_ratio, n_max, gl_x, gl_w, block)
    return a.T @ sigma - b.T @ phi


def field_np(points, corners, normals, areas, diams, rule_n, near_ratio, n_max, sigma, phi, block=32):
    m = points.shape[0]
    out = np.empty((m, sigma.shape[1], 3))
    for s in range(0, m, block):
        gA, gB = _block_coeffs_np(points[s:s + block], corners, normals, areas, diams, rule_n,
                                  near_ratio, n_max, True)
        out[s:s + block] = np.einsum("bnc,ns->bsc", gA, sigma) - np.einsum("bnc,ns->bsc", gB, phi)
    return out
