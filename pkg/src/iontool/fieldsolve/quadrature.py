"""Quadrature rules on the reference triangle (0,0), (1,0), (0,1).

Weights are normalised to sum to one, so that
``integral_T f ds ~= area(T) * sum_k w_k f(p_k)`` for a physical triangle T.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi

from ..errors import InvalidArgumentError


@dataclass(frozen=True)
class TriangleRule:
    """Points in reference coordinates (xi, eta) with area-normalised weights."""

    points: np.ndarray
    weights: np.ndarray
    degree: int

    @property
    def size(self) -> int:
        return self.weights.size


def _radon7() -> TriangleRule:
    s15 = np.sqrt(15.0)
    a1 = (6.0 - s15) / 21.0
    a2 = (6.0 + s15) / 21.0
    w1 = (155.0 - s15) / 1200.0
    w2 = (155.0 + s15) / 1200.0
    pts = [(1 / 3, 1 / 3),
           (a1, a1), (1 - 2 * a1, a1), (a1, 1 - 2 * a1),
           (a2, a2), (1 - 2 * a2, a2), (a2, 1 - 2 * a2)]
    w = [9 / 40] + [w1] * 3 + [w2] * 3
    return TriangleRule(np.array(pts), np.array(w), 5)


def _collapsed_gauss(n: int) -> TriangleRule:
    # Duffy map: Gauss-Jacobi(1, 0) in xi absorbs the (1 - xi) Jacobian, Gauss-Legendre in eta
    gj, gjw = roots_jacobi(n, 1.0, 0.0)
    g, gw = np.polynomial.legendre.leggauss(n)
    xi1, w1 = 0.5 * (gj + 1.0), 0.25 * gjw
    eta1, w2 = 0.5 * (g + 1.0), 0.5 * gw
    xi, eta = np.meshgrid(xi1, eta1, indexing="ij")
    wx, wy = np.meshgrid(w1, w2, indexing="ij")
    px = xi.ravel()
    py = (eta * (1.0 - xi)).ravel()
    w = (wx * wy).ravel() * 2.0
    return TriangleRule(np.column_stack([px, py]), w, 2 * n - 1)


@lru_cache(maxsize=None)
def triangle_rule(n_points: int = 7) -> TriangleRule:
    """Return a triangle rule with the requested number of points.

    Supported sizes: 1 (centroid), 3 (edge-interior, degree 2), 7 (Radon,
    degree 5) and 4, 9, 16, 25 (collapsed Gauss-Legendre products).
    """
    if n_points == 1:
        return TriangleRule(np.array([[1 / 3, 1 / 3]]), np.array([1.0]), 1)
    if n_points == 3:
        pts = np.array([[1 / 6, 1 / 6], [2 / 3, 1 / 6], [1 / 6, 2 / 3]])
        return TriangleRule(pts, np.full(3, 1 / 3), 2)
    if n_points == 7:
        return _radon7()
    root = int(round(np.sqrt(n_points)))
    if root * root == n_points and 2 <= root <= 5:
        return _collapsed_gauss(root)
    raise InvalidArgumentError(f"no triangle rule with {n_points} points (use 1, 3, 4, 7, 9, 16 or 25)")


@lru_cache(maxsize=64)
def composite_rule(n_points: int, n_sub: int) -> TriangleRule:
    """Base rule applied on each of the ``n_sub**2`` congruent sub-triangles."""
    base = triangle_rule(n_points)
    sub = subdivide_reference(n_sub)
    v0, e1, e2 = sub[:, 0], sub[:, 1] - sub[:, 0], sub[:, 2] - sub[:, 0]
    p = (v0[:, None, :] + base.points[None, :, 0:1] * e1[:, None, :]
         + base.points[None, :, 1:2] * e2[:, None, :])
    w = np.broadcast_to(base.weights / n_sub ** 2, (sub.shape[0], base.size))
    return TriangleRule(p.reshape(-1, 2), w.reshape(-1).copy(), base.degree)


def subdivide_reference(n: int) -> np.ndarray:
    """Vertices (n^2, 3, 2) of the uniform n-fold subdivision of the reference triangle."""
    tris = []
    h = 1.0 / n
    for i in range(n):
        for j in range(n - i):
            a = (i * h, j * h)
            b = ((i + 1) * h, j * h)
            c = (i * h, (j + 1) * h)
            tris.append((a, b, c))
            if j < n - i - 1:
                d = ((i + 1) * h, (j + 1) * h)
                tris.append((b, d, c))
    return np.array(tris)


def map_to_triangle(rule: TriangleRule, v):
    """Physical points (k, 3) and area-weighted weights for triangle vertices ``v`` (3, 3)."""
    v = np.asarray(v, dtype=float)
    e1, e2 = v[1] - v[0], v[2] - v[0]
    area = 0.5 * np.linalg.norm(np.cross(e1, e2))
    pts = v[0] + rule.points[:, :1] * e1 + rule.points[:, 1:] * e2
    return pts, rule.weights * area


def exact_monomial(a: int, b: int) -> float:
    """Integral of xi^a eta^b over the reference triangle: a! b! / (a+b+2)!."""
    from math import factorial

    return factorial(a) * factorial(b) / factorial(a + b + 2)
