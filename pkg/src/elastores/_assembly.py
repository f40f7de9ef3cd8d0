"""numba kernels for Galerkin panel-pair integration.

Each worker owns one block row, so the result does not depend on the
number of threads.  Symmetric operators are integrated on the upper block
triangle only and mirrored by the caller.
"""

import math

import numpy as np
from numba import njit, prange

from .kernels import green_into, traction_into

KIND_SINGLE_LAYER = 0
KIND_NEUMANN_POINCARE = 1


@njit(cache=True)
def _accumulate(kind, buf, acc, d0, d1, d2, n, k, lam, mu, method, w, subtract_static):
    if kind == KIND_SINGLE_LAYER:
        green_into(buf, d0, d1, d2, k, lam, mu, method)
    else:
        traction_into(buf, d0, d1, d2, n[0], n[1], n[2], k, lam, mu, method, subtract_static)
    for e in range(9):
        acc[e] += w * buf[e]


@njit(cache=True)
def _coincident(kind, tri, n, area, xs, xw, dst, dw, k, lam, mu, method, buf, acc):
    static_zero = kind == KIND_NEUMANN_POINCARE
    if static_zero and k == 0:
        # in-plane static traction kernel is odd in x - y: the Galerkin
        # integral over T x T vanishes identically
        return
    for q in range(xs.shape[0]):
        x0, x1, x2 = xs[q, 0], xs[q, 1], xs[q, 2]
        wq = xw[q] * area
        for s in range(3):
            a = tri[s]
            b = tri[(s + 1) % 3]
            e10, e11, e12 = a[0] - x0, a[1] - x1, a[2] - x2
            e20, e21, e22 = b[0] - x0, b[1] - x1, b[2] - x2
            c0 = e11 * e22 - e12 * e21
            c1 = e12 * e20 - e10 * e22
            c2 = e10 * e21 - e11 * e20
            sub_area = 0.5 * math.sqrt(c0 * c0 + c1 * c1 + c2 * c2)
            if sub_area == 0.0:
                continue
            for p in range(dst.shape[0]):
                u = dst[p, 0]
                v = dst[p, 1]
                # d = x - y with y = x + u e1 + v e2
                d0 = -(u * e10 + v * e20)
                d1 = -(u * e11 + v * e21)
                d2 = -(u * e12 + v * e22)
                _accumulate(kind, buf, acc, d0, d1, d2, n, k, lam, mu, method,
                            wq * sub_area * dw[p], static_zero)


@njit(cache=True)
def _near(kind, tri_j, xs, xw, area_i, n, ib, iw, depth, factor, k, lam, mu, method,
          buf, acc, stack):
    """Outer points ``xs`` against adaptively subdivided panel ``tri_j``.

    Returns the smallest distance/leaf-diameter ratio encountered.
    """
    worst = 1e300
    nb = ib.shape[0]
    for q in range(xs.shape[0]):
        x0, x1, x2 = xs[q, 0], xs[q, 1], xs[q, 2]
        wq = xw[q] * area_i
        top = 0
        stack[0] = tri_j
        levels = np.zeros(stack.shape[0], dtype=np.int64)
        levels[0] = 0
        top = 1
        while top > 0:
            top -= 1
            t = stack[top].copy()
            lev = levels[top]
            c0 = (t[0, 0] + t[1, 0] + t[2, 0]) / 3.0
            c1 = (t[0, 1] + t[1, 1] + t[2, 1]) / 3.0
            c2 = (t[0, 2] + t[1, 2] + t[2, 2]) / 3.0
            diam = 0.0
            for s in range(3):
                a = t[s]
                b = t[(s + 1) % 3]
                el = math.sqrt((a[0] - b[0]) ** 2 + (a[1] - b[1]) ** 2 + (a[2] - b[2]) ** 2)
                if el > diam:
                    diam = el
            dist = math.sqrt((x0 - c0) ** 2 + (x1 - c1) ** 2 + (x2 - c2) ** 2)
            if dist < factor * diam and lev < depth:
                m01 = 0.5 * (t[0] + t[1])
                m12 = 0.5 * (t[1] + t[2])
                m20 = 0.5 * (t[2] + t[0])
                stack[top, 0] = t[0]
                stack[top, 1] = m01
                stack[top, 2] = m20
                levels[top] = lev + 1
                stack[top + 1, 0] = m01
                stack[top + 1, 1] = t[1]
                stack[top + 1, 2] = m12
                levels[top + 1] = lev + 1
                stack[top + 2, 0] = m20
                stack[top + 2, 1] = m12
                stack[top + 2, 2] = t[2]
                levels[top + 2] = lev + 1
                stack[top + 3, 0] = m01
                stack[top + 3, 1] = m12
                stack[top + 3, 2] = m20
                levels[top + 3] = lev + 1
                top += 4
                continue
            if dist / diam < worst:
                worst = dist / diam
            e10, e11, e12 = t[1, 0] - t[0, 0], t[1, 1] - t[0, 1], t[1, 2] - t[0, 2]
            e20, e21, e22 = t[2, 0] - t[0, 0], t[2, 1] - t[0, 1], t[2, 2] - t[0, 2]
            cx = e11 * e22 - e12 * e21
            cy = e12 * e20 - e10 * e22
            cz = e10 * e21 - e11 * e20
            sub_area = 0.5 * math.sqrt(cx * cx + cy * cy + cz * cz)
            for p in range(nb):
                y0 = ib[p, 0] * t[0, 0] + ib[p, 1] * t[1, 0] + ib[p, 2] * t[2, 0]
                y1 = ib[p, 0] * t[0, 1] + ib[p, 1] * t[1, 1] + ib[p, 2] * t[2, 1]
                y2 = ib[p, 0] * t[0, 2] + ib[p, 1] * t[1, 2] + ib[p, 2] * t[2, 2]
                _accumulate(kind, buf, acc, x0 - y0, x1 - y1, x2 - y2, n, k, lam, mu, method,
                            wq * sub_area * iw[p], False)
    return worst


@njit(parallel=True, cache=True)
def assemble_blocks(kind, tris, normals, areas, centroids, diams,
                    reg_pts, reg_w, sub_pts, sub_w, inner_bary, inner_w,
                    duffy_st, duffy_w, depth, factor, k, lam, mu, method, upper_only):
    n_pan = tris.shape[0]
    mat = np.zeros((3 * n_pan, 3 * n_pan), dtype=np.complex128)
    worst_ratio = np.full(n_pan, 1e300)
    worst_pair = np.full(n_pan, -1, dtype=np.int64)
    nr = reg_pts.shape[1]
    for i in prange(n_pan):
        buf = np.empty(9, dtype=np.complex128)
        acc = np.empty(9, dtype=np.complex128)
        stack = np.empty((4 * depth + 8, 3, 3))
        n = normals[i]
        j0 = i if upper_only else 0
        for j in range(j0, n_pan):
            acc[:] = 0.0
            if i == j:
                _coincident(kind, tris[i], n, areas[i], sub_pts[i], sub_w, duffy_st, duffy_w,
                            k, lam, mu, method, buf, acc)
            else:
                dc = math.sqrt((centroids[i, 0] - centroids[j, 0]) ** 2
                               + (centroids[i, 1] - centroids[j, 1]) ** 2
                               + (centroids[i, 2] - centroids[j, 2]) ** 2)
                if dc < factor * max(diams[i], diams[j]):
                    r = _near(kind, tris[j], sub_pts[i], sub_w, areas[i], n, inner_bary, inner_w,
                              depth, factor, k, lam, mu, method, buf, acc, stack)
                    if r < worst_ratio[i]:
                        worst_ratio[i] = r
                        worst_pair[i] = j
                else:
                    for q in range(nr):
                        x = reg_pts[i, q]
                        wq = reg_w[q] * areas[i]
                        for p in range(nr):
                            y = reg_pts[j, p]
                            _accumulate(kind, buf, acc, x[0] - y[0], x[1] - y[1], x[2] - y[2],
                                        n, k, lam, mu, method, wq * reg_w[p] * areas[j], False)
            for a in range(3):
                for b in range(3):
                    mat[3 * i + a, 3 * j + b] = acc[3 * a + b]
    return mat, worst_ratio, worst_pair


@njit(parallel=True, cache=True)
def potential_at(points, tris, areas, bary, w, density, k, lam, mu, method):
    """``sum_j int_{T_j} Gamma^k(x - y) phi_j dsigma(y)`` at each point (regular quadrature)."""
    m = points.shape[0]
    out = np.zeros((m, 3), dtype=np.complex128)
    nb = bary.shape[0]
    for p in prange(m):
        buf = np.empty(9, dtype=np.complex128)
        x = points[p]
        for j in range(tris.shape[0]):
            t = tris[j]
            for q in range(nb):
                y0 = bary[q, 0] * t[0, 0] + bary[q, 1] * t[1, 0] + bary[q, 2] * t[2, 0]
                y1 = bary[q, 0] * t[0, 1] + bary[q, 1] * t[1, 1] + bary[q, 2] * t[2, 1]
                y2 = bary[q, 0] * t[0, 2] + bary[q, 1] * t[1, 2] + bary[q, 2] * t[2, 2]
                green_into(buf, x[0] - y0, x[1] - y1, x[2] - y2, k, lam, mu, method)
                wq = w[q] * areas[j]
                for a in range(3):
                    out[p, a] += wq * (buf[3 * a] * density[j, 0] + buf[3 * a + 1] * density[j, 1]
                                       + buf[3 * a + 2] * density[j, 2])
    return out
