"""Independent reference computations used for cross-checks.

These deliberately avoid the code paths they check: moments come from a
fan of signed tetrahedra instead of surface integrals, and the static
kernel check uses the explicit Kelvin formula.
"""

from __future__ import annotations

import numpy as np

from .geometry import SurfaceMesh

__all__ = ["tetra_fan_moments", "moment_discrepancy"]


def tetra_fan_moments(mesh: SurfaceMesh, apex=None) -> tuple[float, np.ndarray, np.ndarray]:
    """Volume, first moment and second moment ``int x x^T`` by tetrahedral fan.

    Each face ``(a, b, c)`` spans a signed tetrahedron with ``apex``; the
    closed-form tetrahedron moments are summed.
    """
    o = mesh.vertices.mean(axis=0) if apex is None else np.asarray(apex, float)
    tri = mesh.triangles
    a, b, c = tri[:, 0], tri[:, 1], tri[:, 2]
    vol = np.einsum("ij,ij->i", a - o, np.cross(b - o, c - o)) / 6.0
    verts = np.stack([np.broadcast_to(o, a.shape), a, b, c], axis=1)  # (F, 4, 3)
    s = verts.sum(axis=1)
    first = np.einsum("f,fj->j", vol, s) / 4.0
    outer = np.einsum("fvi,fvj->fij", verts, verts) + np.einsum("fi,fj->fij", s, s)
    second = np.einsum("f,fij->ij", vol, outer) / 20.0
    return float(vol.sum()), first, second


def moment_discrepancy(mesh: SurfaceMesh, moments) -> float:
    """Largest relative difference between ``moments`` and the fan oracle."""
    vol, first, second = tetra_fan_moments(mesh)
    m1, m2 = moments.first, moments.second
    scale = max(abs(vol), np.abs(second).max(), 1.0)
    return float(max(abs(moments.volume - vol), np.abs(m1 - first).max(), np.abs(m2 - second).max()) / scale)
