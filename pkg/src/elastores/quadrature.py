"""Triangle quadrature rules in barycentric form.

Rules are returned as ``(bary, weights)`` with ``bary`` of shape ``(n, 3)``
and weights summing to one; multiply by the panel area to integrate.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

__all__ = ["triangle_rule", "subdivided_rule", "duffy_rule", "map_rule"]

# Strang-Fix / Dunavant degree-5 rule
_A1, _B1, _W1 = 0.797426985353087, 0.101286507323456, 0.125939180544827
_A2, _B2, _W2 = 0.059715871789770, 0.470142064105115, 0.132394152788506


@lru_cache(maxsize=None)
def triangle_rule(order: int) -> tuple[np.ndarray, np.ndarray]:
    """3-point (degree 2) or 7-point (degree 5) symmetric rule."""
    if order == 1:
        return np.full((1, 3), 1 / 3), np.ones(1)
    if order == 3:
        bary = np.array([[2 / 3, 1 / 6, 1 / 6], [1 / 6, 2 / 3, 1 / 6], [1 / 6, 1 / 6, 2 / 3]])
        return bary, np.full(3, 1 / 3)
    if order == 7:
        bary = np.array(
            [
                [1 / 3, 1 / 3, 1 / 3],
                [_A1, _B1, _B1],
                [_B1, _A1, _B1],
                [_B1, _B1, _A1],
                [_A2, _B2, _B2],
                [_B2, _A2, _B2],
                [_B2, _B2, _A2],
            ]
        )
        w = np.array([0.225, _W1, _W1, _W1, _W2, _W2, _W2])
        return bary, w
    raise ValueError(f"unsupported triangle rule order {order} (use 1, 3 or 7)")


def _split4(tris: np.ndarray) -> np.ndarray:
    # tris: (m, 3, 3) barycentric vertex coordinates of sub-triangles
    a, b, c = tris[:, 0], tris[:, 1], tris[:, 2]
    ab, bc, ca = (a + b) / 2, (b + c) / 2, (c + a) / 2
    out = np.stack(
        [
            np.stack([a, ab, ca], 1),
            np.stack([ab, b, bc], 1),
            np.stack([ca, bc, c], 1),
            np.stack([ab, bc, ca], 1),
        ],
        1,
    )
    return out.reshape(-1, 3, 3)


@lru_cache(maxsize=None)
def subdivided_rule(order: int, levels: int) -> tuple[np.ndarray, np.ndarray]:
    """Base rule applied on ``4**levels`` congruent sub-triangles."""
    tris = np.eye(3)[None]
    for _ in range(levels):
        tris = _split4(tris)
    bary, w = triangle_rule(order)
    pts = np.einsum("qk,tkj->tqj", bary, tris).reshape(-1, 3)
    weights = np.tile(w, len(tris)) / len(tris)
    return pts, weights


@lru_cache(maxsize=None)
def duffy_rule(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Collapsed Gauss-Legendre rule on the triangle ``(P, V1, V2)`` singular at ``P``.

    Returns local coordinates ``(s, t)`` with ``y = P + s (V1 - P) + t (V2 - P)``
    and weights summing to one.  The Jacobian factor ``u`` cancels a ``1/r``
    singularity at ``P``.
    """
    g, w = np.polynomial.legendre.leggauss(n)
    g = (g + 1) / 2
    w = w / 2
    u, v = np.meshgrid(g, g, indexing="ij")
    wu, wv = np.meshgrid(w, w, indexing="ij")
    s = (u * (1 - v)).ravel()
    t = (u * v).ravel()
    weights = (2 * wu * wv * u).ravel()
    return np.column_stack([s, t]), weights


def map_rule(bary: np.ndarray, tri: np.ndarray) -> np.ndarray:
    """Physical points ``(n, 3)`` of a barycentric rule on a triangle ``(3, 3)``."""
    return bary @ tri
