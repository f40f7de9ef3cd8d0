"""Closed triangle meshes, exact polyhedral moments and the rigid-motion basis."""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .quadrature import triangle_rule

logger = logging.getLogger(__name__)

__all__ = [
    "MeshError",
    "SurfaceMesh",
    "VolumeMoments",
    "RigidBasis",
    "load_mesh",
    "write_off",
    "volume_moments",
    "rigid_basis",
    "refine",
    "icosphere",
    "ellipsoid",
    "unit_cube",
    "ROTATION_GENERATORS",
]


class MeshError(ValueError):
    """Invalid or unreadable surface mesh."""


@dataclass(frozen=True)
class Projection:
    """Analytic surface that refined midpoints are pulled back onto."""

    center: tuple[float, float, float]
    axes: tuple[float, float, float]

    def apply(self, pts: np.ndarray) -> np.ndarray:
        c = np.asarray(self.center)
        a = np.asarray(self.axes)
        d = pts - c
        scale = np.linalg.norm(d / a, axis=1)
        return c + d / scale[:, None]

    def translated(self, t) -> "Projection":
        return Projection(tuple(np.asarray(self.center) + t), self.axes)


@dataclass(frozen=True, eq=False)
class SurfaceMesh:
    """Closed, consistently oriented triangle mesh with a per-panel cache.

    Attributes
    ----------
    vertices : (nv, 3) float array
    faces : (nf, 3) int array, counter-clockwise seen from outside
    projection : optional sphere/ellipsoid the mesh approximates
    """

    vertices: np.ndarray
    faces: np.ndarray
    projection: Projection | None = None
    name: str = field(default="mesh", compare=False)

    def __post_init__(self):
        v = np.ascontiguousarray(self.vertices, dtype=float)
        f = np.ascontiguousarray(self.faces, dtype=np.int64)
        v.setflags(write=False)
        f.setflags(write=False)
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "faces", f)

    @property
    def n_panels(self) -> int:
        return len(self.faces)

    @cached_property
    def triangles(self) -> np.ndarray:
        """Panel vertex coordinates, shape ``(nf, 3, 3)``."""
        return self.vertices[self.faces]

    @cached_property
    def _cross(self) -> np.ndarray:
        t = self.triangles
        return np.cross(t[:, 1] - t[:, 0], t[:, 2] - t[:, 0])

    @cached_property
    def areas(self) -> np.ndarray:
        return 0.5 * np.linalg.norm(self._cross, axis=1)

    @cached_property
    def normals(self) -> np.ndarray:
        return self._cross / (2 * self.areas[:, None])

    @cached_property
    def centroids(self) -> np.ndarray:
        return self.triangles.mean(axis=1)

    @cached_property
    def diameters(self) -> np.ndarray:
        t = self.triangles
        e = np.stack([t[:, 1] - t[:, 0], t[:, 2] - t[:, 1], t[:, 0] - t[:, 2]], 1)
        return np.linalg.norm(e, axis=2).max(axis=1)

    @property
    def surface_area(self) -> float:
        return float(self.areas.sum())

    @property
    def diameter(self) -> float:
        """Bounding-box diagonal, an upper bound for the body diameter."""
        return float(np.linalg.norm(np.ptp(self.vertices, axis=0)))

    @property
    def signed_volume(self) -> float:
        t = self.triangles
        return float(np.einsum("fi,fi->", t[:, 0], np.cross(t[:, 1], t[:, 2])) / 6.0)

    def translated(self, t) -> "SurfaceMesh":
        t = np.asarray(t, dtype=float)
        proj = None if self.projection is None else self.projection.translated(t)
        return SurfaceMesh(self.vertices + t, self.faces, proj, self.name)

    def transformed(self, rot: np.ndarray) -> "SurfaceMesh":
        """Rotate vertices by an orthogonal matrix (about the origin)."""
        rot = np.asarray(rot, dtype=float)
        if np.linalg.det(rot) < 0:
            raise ValueError("orientation-reversing transforms are not supported")
        proj = self.projection
        if proj is not None and len(set(proj.axes)) != 1:
            proj = None
        elif proj is not None:
            proj = Projection(tuple(rot @ np.asarray(proj.center)), proj.axes)
        return SurfaceMesh(self.vertices @ rot.T, self.faces, proj, self.name)

    def contains(self, points) -> np.ndarray:
        """Point-in-polyhedron test by the solid-angle winding number."""
        p = np.atleast_2d(np.asarray(points, dtype=float))
        out = np.empty(len(p), dtype=bool)
        for lo in range(0, len(p), 256):
            q = p[lo:lo + 256]
            a = self.triangles[None, :, 0] - q[:, None]
            b = self.triangles[None, :, 1] - q[:, None]
            c = self.triangles[None, :, 2] - q[:, None]
            la, lb, lc = (np.linalg.norm(x, axis=2) for x in (a, b, c))
            num = np.einsum("qfi,qfi->qf", a, np.cross(b, c))
            den = (
                la * lb * lc
                + np.einsum("qfi,qfi->qf", a, b) * lc
                + np.einsum("qfi,qfi->qf", b, c) * la
                + np.einsum("qfi,qfi->qf", c, a) * lb
            )
            wind = 2 * np.arctan2(num, den).sum(axis=1) / (4 * np.pi)
            out[lo:lo + 256] = wind > 0.5
        return out

    def validate(self) -> None:
        _validate(self.vertices, self.faces)


# ---------------------------------------------------------------------------
# validation / IO
# ---------------------------------------------------------------------------


def _validate(vertices: np.ndarray, faces: np.ndarray) -> None:
    nv = len(vertices)
    if faces.ndim != 2 or faces.shape[1] != 3:
        raise MeshError(f"faces must be index triples, got shape {faces.shape}")
    bad = np.nonzero((faces < 0) | (faces >= nv))
    if bad[0].size:
        f = int(bad[0][0])
        raise MeshError(f"face {f} references vertex index {int(faces[f, bad[1][0]])} out of range [0, {nv})")
    if not np.all(np.isfinite(vertices)):
        raise MeshError("non-finite vertex coordinates")
    tri = vertices[faces]
    area2 = np.linalg.norm(np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0]), axis=1)
    scale = max(np.ptp(vertices, axis=0).max(), 1e-300) ** 2
    zero = np.nonzero(area2 <= 1e-14 * scale)[0]
    if zero.size:
        raise MeshError(f"zero-area panel(s): faces {zero[:10].tolist()}")
    directed = np.concatenate([faces[:, [0, 1]], faces[:, [1, 2]], faces[:, [2, 0]]])
    owner = np.tile(np.arange(len(faces)), 3)
    undirected = np.sort(directed, axis=1)
    keys, inverse, counts = np.unique(undirected, axis=0, return_inverse=True, return_counts=True)
    inverse = inverse.ravel()
    if np.any(counts == 1):
        e = keys[np.nonzero(counts == 1)[0][0]]
        fs = owner[np.nonzero((undirected == e).all(axis=1))[0]].tolist()
        raise MeshError(f"surface is not closed: boundary edge {tuple(e.tolist())} of face(s) {fs}")
    if np.any(counts > 2):
        e = keys[np.nonzero(counts > 2)[0][0]]
        fs = owner[np.nonzero((undirected == e).all(axis=1))[0]].tolist()
        raise MeshError(f"non-manifold edge {tuple(e.tolist())} shared by faces {fs}")
    _, dcounts = np.unique(directed, axis=0, return_counts=True)
    if np.any(dcounts > 1):
        d_keys, d_counts = np.unique(directed, axis=0, return_counts=True)
        e = d_keys[np.nonzero(d_counts > 1)[0][0]]
        fs = owner[np.nonzero((directed == e).all(axis=1))[0]].tolist()
        raise MeshError(f"inconsistent face orientation along edge {tuple(e.tolist())} (faces {fs})")


def _build(vertices, faces, projection=None, name="mesh") -> SurfaceMesh:
    vertices = np.asarray(vertices, dtype=float)
    faces = np.asarray(faces, dtype=np.int64)
    _validate(vertices, faces)
    mesh = SurfaceMesh(vertices, faces, projection, name)
    if mesh.signed_volume < 0:
        logger.info("mesh %s is inward oriented; flipping all faces", name)
        mesh = SurfaceMesh(vertices, faces[:, ::-1], projection, name)
    return mesh


def load_mesh(path: str | os.PathLike) -> SurfaceMesh:
    """Read an ASCII OFF triangle mesh.

    Lines starting with ``#`` are comments.  A comment of the form
    ``# projection: <cx> <cy> <cz> <ax> <ay> <az>`` tags the mesh as an
    approximation of that ellipsoid so that :func:`refine` re-projects midpoints.
    """
    try:
        with open(path, encoding="utf-8") as fh:
            raw = fh.read().splitlines()
    except OSError as exc:
        raise MeshError(f"cannot read mesh {path}: {exc}") from exc
    projection = None
    lines = []
    for line in raw:
        s = line.strip()
        if s.startswith("#"):
            tag = s[1:].strip()
            if tag.startswith("projection:"):
                vals = [float(t) for t in tag.split(":", 1)[1].split()]
                if len(vals) != 6:
                    raise MeshError(f"{path}: malformed projection tag")
                projection = Projection(tuple(vals[:3]), tuple(vals[3:]))
            continue
        if s:
            lines.append(s)
    if not lines or lines[0] != "OFF":
        raise MeshError(f"{path}: missing OFF header")
    try:
        nv, nf = (int(t) for t in lines[1].split()[:2])
        verts = np.array([[float(t) for t in ln.split()[:3]] for ln in lines[2:2 + nv]])
        face_lines = [ln.split() for ln in lines[2 + nv:2 + nv + nf]]
    except (ValueError, IndexError) as exc:
        raise MeshError(f"{path}: parse failure: {exc}") from exc
    if verts.shape != (nv, 3) or len(face_lines) != nf:
        raise MeshError(f"{path}: expected {nv} vertices and {nf} faces")
    faces = []
    for i, parts in enumerate(face_lines):
        if len(parts) < 4 or parts[0] != "3":
            raise MeshError(f"{path}: face {i} is not a triangle")
        try:
            faces.append([int(t) for t in parts[1:4]])
        except ValueError as exc:
            raise MeshError(f"{path}: face {i}: {exc}") from exc
    return _build(verts, np.array(faces, dtype=np.int64).reshape(-1, 3), projection,
                  os.path.splitext(os.path.basename(str(path)))[0])


def write_off(mesh: SurfaceMesh, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("OFF\n")
        if mesh.projection is not None:
            vals = list(mesh.projection.center) + list(mesh.projection.axes)
            fh.write("# projection: " + " ".join(repr(float(v)) for v in vals) + "\n")
        fh.write(f"{len(mesh.vertices)} {mesh.n_panels} 0\n")
        for v in mesh.vertices:
            fh.write(" ".join(repr(float(c)) for c in v) + "\n")
        for f in mesh.faces:
            fh.write(f"3 {f[0]} {f[1]} {f[2]}\n")


# ---------------------------------------------------------------------------
# generators and refinement
# ---------------------------------------------------------------------------


def unit_cube(origin=(0.0, 0.0, 0.0)) -> SurfaceMesh:
    """The cube ``origin + [0, 1]^3`` as 12 outward-oriented triangles."""
    v = np.array([[i, j, k] for i in (0, 1) for j in (0, 1) for k in (0, 1)], dtype=float)
    quads = [(0, 1, 3, 2), (4, 6, 7, 5), (0, 4, 5, 1), (2, 3, 7, 6), (0, 2, 6, 4), (1, 5, 7, 3)]
    faces = []
    for a, b, c, d in quads:
        faces += [(a, b, c), (a, c, d)]
    return _build(v + np.asarray(origin, float), faces, name="cube")


def refine(mesh: SurfaceMesh) -> SurfaceMesh:
    """Split each panel into four at its edge midpoints."""
    f = mesh.faces
    edges = np.concatenate([f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 0]]])
    keys, inv = np.unique(np.sort(edges, axis=1), axis=0, return_inverse=True)
    inv = inv.ravel()
    mid = mesh.vertices[keys].mean(axis=1)
    if mesh.projection is not None:
        mid = mesh.projection.apply(mid)
    nv = len(mesh.vertices)
    m = inv.reshape(3, -1).T + nv  # midpoints of edges (01, 12, 20)
    a, b, c = f[:, 0], f[:, 1], f[:, 2]
    m01, m12, m20 = m[:, 0], m[:, 1], m[:, 2]
    new = np.concatenate(
        [
            np.stack([a, m01, m20], 1),
            np.stack([m01, b, m12], 1),
            np.stack([m20, m12, c], 1),
            np.stack([m01, m12, m20], 1),
        ]
    )
    return SurfaceMesh(np.vstack([mesh.vertices, mid]), new, mesh.projection, mesh.name)


def _icosahedron() -> tuple[np.ndarray, np.ndarray]:
    p = (1 + 5**0.5) / 2
    v = np.array(
        [[-1, p, 0], [1, p, 0], [-1, -p, 0], [1, -p, 0], [0, -1, p], [0, 1, p],
         [0, -1, -p], [0, 1, -p], [p, 0, -1], [p, 0, 1], [-p, 0, -1], [-p, 0, 1]],
        dtype=float,
    )
    f = np.array(
        [[0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11], [1, 5, 9], [5, 11, 4],
         [11, 10, 2], [10, 7, 6], [7, 1, 8], [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8],
         [3, 8, 9], [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1]]
    )
    return v / np.linalg.norm(v, axis=1, keepdims=True), f


def ellipsoid(axes=(1.0, 1.0, 1.0), level: int = 2, center=(0.0, 0.0, 0.0)) -> SurfaceMesh:
    """Geodesic triangulation of an ellipsoid with ``20 * 4**level`` panels."""
    v, f = _icosahedron()
    proj = Projection(tuple(float(c) for c in center), tuple(float(a) for a in axes))
    mesh = _build(proj.apply(v * np.asarray(axes) + np.asarray(center)), f, proj, "ellipsoid")
    for _ in range(level):
        mesh = refine(mesh)
    return mesh


def icosphere(level: int = 2, radius: float = 1.0, center=(0.0, 0.0, 0.0)) -> SurfaceMesh:
    """Inscribed geodesic sphere; level 2 has 320 panels, level 3 has 1280."""
    mesh = ellipsoid((radius, radius, radius), level, center)
    return SurfaceMesh(mesh.vertices, mesh.faces, mesh.projection, "icosphere")


# ---------------------------------------------------------------------------
# moments and the rigid basis
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class VolumeMoments:
    """Moments of degree <= 2 of the solid bounded by a mesh.

    ``central`` is ``int (x - c)(x - c)^T dx``, accumulated about a local
    origin so it does not suffer from cancellation after translation.
    """

    volume: float
    first: np.ndarray
    second: np.ndarray
    centroid: np.ndarray
    central: np.ndarray


def volume_moments(mesh: SurfaceMesh) -> VolumeMoments:
    """Exact moments via the divergence theorem.

    For a polynomial ``p`` homogeneous of degree ``m``,
    ``int_D p = 1/(3 + m) int_{dD} p (x . nu)``; ``x . nu`` is constant on a
    flat panel and the surface integrals are exact with a degree-5 rule.
    """
    o = mesh.vertices.mean(axis=0)
    tri = mesh.triangles - o
    bary, w = triangle_rule(7)
    pts = np.einsum("qk,fkj->fqj", bary, tri)
    xn = np.einsum("fj,fj->f", tri[:, 0], mesh.normals)
    wa = (w[None, :] * mesh.areas[:, None]) * xn[:, None]
    vol = wa.sum() / 3.0
    m1 = np.einsum("fq,fqi->i", wa, pts) / 4.0
    m2 = np.einsum("fq,fqi,fqj->ij", wa, pts, pts) / 5.0
    if not vol > 0:
        raise MeshError(f"non-positive enclosed volume {vol}")
    central = m2 - np.outer(m1, m1) / vol
    central = 0.5 * (central + central.T)
    try:
        np.linalg.cholesky(central)
    except np.linalg.LinAlgError as exc:
        raise MeshError("degenerate body: central second moment is not positive definite") from exc
    c_loc = m1 / vol
    first = m1 + vol * o
    second = m2 + np.outer(o, m1) + np.outer(m1, o) + vol * np.outer(o, o)
    return VolumeMoments(float(vol), first, second, c_loc + o, central)


# generators of the infinitesimal rotations x -> A (x - c)
ROTATION_GENERATORS = np.array(
    [
        [[0, 1, 0], [-1, 0, 0], [0, 0, 0]],
        [[0, 0, 1], [0, 0, 0], [-1, 0, 0]],
        [[0, 0, 0], [0, 0, 1], [0, -1, 0]],
    ],
    dtype=float,
)


@dataclass(frozen=True)
class RigidBasis:
    """Six ``L^2(D)``-orthonormal rigid motions ``xi_i(x) = a_i + B_i (x - c)``.

    ``d`` holds the normalisation constants ``(d_4, d_5, d_6)`` and ``shear``
    the Gram-Schmidt coefficients ``(L_1, L_2, L_3)``.
    """

    centroid: np.ndarray
    constant: np.ndarray  # (6, 3)
    linear: np.ndarray  # (6, 3, 3)
    volume: float
    d: np.ndarray
    shear: np.ndarray

    def __call__(self, x) -> np.ndarray:
        """Evaluate all six fields; returns shape ``x.shape[:-1] + (6, 3)``."""
        x = np.asarray(x, dtype=float)
        r = x - self.centroid
        return self.constant + np.einsum("kij,...j->...ki", self.linear, r)

    def gram(self, moments: VolumeMoments) -> np.ndarray:
        """``(xi_i, xi_j)_{L^2(D)}`` from exact moments about the basis centroid."""
        shift = moments.centroid - self.centroid
        vol = moments.volume
        m1 = vol * shift
        m2 = moments.central + vol * np.outer(shift, shift)
        a, b = self.constant, self.linear
        g = vol * a @ a.T
        cross = np.einsum("ki,lij,j->kl", a, b, m1)
        g += cross + cross.T
        g += np.einsum("kij,lim,jm->kl", b, b, m2)
        return g

    def translated(self, t) -> "RigidBasis":
        return RigidBasis(self.centroid + np.asarray(t, float), self.constant, self.linear,
                          self.volume, self.d, self.shear)


def rigid_basis(moments: VolumeMoments) -> RigidBasis:
    """Orthonormal translations and Gram-Schmidt-orthonormalised rotations."""
    vol = moments.volume
    m = moments.central
    if not vol > 0:
        raise MeshError(f"degenerate body: volume {vol}")
    eig = np.linalg.eigvalsh(0.5 * (m + m.T))
    if eig[0] <= 1e-12 * max(eig[-1], 0.0):
        raise MeshError("degenerate body: central second moment is singular")
    gen = ROTATION_GENERATORS
    g = np.einsum("kij,lim,jm->kl", gen, gen, m)
    if np.linalg.cond(g) > 1e12:
        raise MeshError("degenerate body: rotation Gram matrix is singular")
    l1 = g[1, 0] / g[0, 0]
    t5 = gen[1] - l1 * gen[0]
    l2 = g[2, 0] / g[0, 0]
    n5 = g[1, 1] - 2 * l1 * g[1, 0] + l1**2 * g[0, 0]
    l3 = (g[2, 1] - l1 * g[2, 0]) / n5
    t6 = gen[2] - l2 * gen[0] - l3 * t5
    raw = np.stack([gen[0], t5, t6])
    norms = np.einsum("kij,kim,jm->k", raw, raw, m)
    d = 1.0 / np.sqrt(norms)
    linear = np.zeros((6, 3, 3))
    linear[3:] = raw * d[:, None, None]
    constant = np.zeros((6, 3))
    constant[:3] = np.eye(3) / np.sqrt(vol)
    return RigidBasis(moments.centroid.copy(), constant, linear, vol, d, np.array([l1, l2, l3]))
