"""Galerkin boundary operators on panel-wise constant vector densities.

Unknowns are ordered panel-major: entry ``3*i + a`` is component ``a`` on
panel ``i``.  Traces of smooth fields are represented by their panel
centroid values, which is the exact ``L^2`` projection for affine fields.

The Dirichlet-to-Neumann map is realised as

    M^k[f] = (1/2 I + K^{k,*}) (S^k)^{-1} f,

where ``S`` is solved against the Galerkin load ``a_i f_i`` and the identity
is the panel mass matrix.
"""

from __future__ import annotations

import logging
import struct
import warnings
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.linalg

from . import _assembly
from .geometry import SurfaceMesh
from .kernels import METHOD_AUTO, ElasticMedium, gamma_const
from .quadrature import duffy_rule, subdivided_rule, triangle_rule

logger = logging.getLogger(__name__)

__all__ = [
    "QuadratureConfig",
    "QuadratureBudgetError",
    "SingularOperatorError",
    "WavenumberMismatchError",
    "BoundaryOperator",
    "DtNMap",
    "assemble_single_layer",
    "assemble_neumann_poincare",
    "weighted_operator_norm",
    "solve_single_layer",
    "dtn_apply",
    "dtn_first_order",
    "calderon_defect",
    "np_identity_residual",
    "weighted_norm",
    "trace",
    "write_operator",
    "read_operator",
]


class QuadratureBudgetError(RuntimeError):
    """Adaptive near-field subdivision could not separate a panel pair."""


class SingularOperatorError(np.linalg.LinAlgError):
    """The discrete single-layer matrix is numerically singular."""


class WavenumberMismatchError(ValueError):
    """Operators assembled at different wavenumbers were combined."""


@dataclass(frozen=True)
class QuadratureConfig:
    """Quadrature parameters for panel-pair integrals.

    regular_order : triangle rule (3 or 7 points) for well-separated pairs
    singular_subdiv : 4-way subdivision levels of the outer panel for
        coincident and near pairs
    near_depth : maximum adaptive subdivision depth of the inner panel
    near_factor : pairs closer than ``near_factor`` panel diameters are near
    duffy_order : Gauss-Legendre points per direction in the collapsed rule
    min_ratio : smallest admissible distance / leaf-diameter ratio
    """

    regular_order: int = 7
    singular_subdiv: int = 1
    near_depth: int = 3
    near_factor: float = 2.0
    duffy_order: int = 7
    min_ratio: float = 0.05

    def __post_init__(self):
        if self.regular_order not in (3, 7):
            raise ValueError("regular_order must be 3 or 7")
        if self.singular_subdiv < 1:
            raise ValueError("singular_subdiv must be >= 1")
        if self.near_depth < 0:
            raise ValueError("near_depth must be >= 0")


KINDS = {"single_layer": _assembly.KIND_SINGLE_LAYER, "neumann_poincare": _assembly.KIND_NEUMANN_POINCARE}


@dataclass(frozen=True, eq=False)
class BoundaryOperator:
    """Dense ``(3N, 3N)`` Galerkin matrix of a boundary integral operator."""

    matrix: np.ndarray
    mesh: SurfaceMesh
    k: complex
    kind: str
    medium: ElasticMedium
    quadrature: QuadratureConfig = field(default_factory=QuadratureConfig)

    @property
    def n_panels(self) -> int:
        return self.mesh.n_panels

    @property
    def areas(self) -> np.ndarray:
        return self.mesh.areas

    @cached_property
    def mass(self) -> np.ndarray:
        """Diagonal of the P0 mass matrix, length ``3N``."""
        return np.repeat(self.areas, 3)

    @cached_property
    def lu(self):
        if self.kind != "single_layer":
            raise TypeError("only the single-layer operator is factorized")
        with warnings.catch_warnings():
            # exact singularity is reported through the condition estimate below
            warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
            lu = scipy.linalg.lu_factor(self.matrix, check_finite=False)
        rcond = _rcond(lu, self.matrix)
        if rcond < 1e-14:
            raise SingularOperatorError(f"single-layer matrix is numerically singular (rcond ~ {rcond:.2e})")
        return lu

    def apply(self, density: np.ndarray) -> np.ndarray:
        """Galerkin moments ``int_{T_i} (A phi)`` for panel densities ``(N, 3)``."""
        return (self.matrix @ np.asarray(density).reshape(-1)).reshape(-1, 3)

    def symmetry_defect(self) -> float:
        a = self.matrix
        return float(np.linalg.norm(a - a.T) / np.linalg.norm(a))


def _rcond(lu, a) -> float:
    anorm = np.linalg.norm(a, 1)
    gecon = scipy.linalg.lapack.get_lapack_funcs("gecon", (lu[0],))
    rcond, _ = gecon(lu[0], anorm, norm="1")
    return float(rcond)


def _assemble(mesh: SurfaceMesh, k: complex, kind: str, medium: ElasticMedium,
              quad: QuadratureConfig) -> np.ndarray:
    k = complex(k)
    if abs(k) * mesh.diameter > 1.0:
        logger.warning("|k| diam(D) = %.3g exceeds the low-frequency regime", abs(k) * mesh.diameter)
    lam, mu = float(medium.lam), float(medium.mu)
    reg_bary, reg_w = triangle_rule(quad.regular_order)
    sub_bary, sub_w = subdivided_rule(7, quad.singular_subdiv)
    in_bary, in_w = triangle_rule(7)
    duffy_st, duffy_w = duffy_rule(quad.duffy_order)
    tris = np.ascontiguousarray(mesh.triangles)
    reg_pts = np.einsum("qk,fkj->fqj", reg_bary, tris)
    sub_pts = np.einsum("qk,fkj->fqj", sub_bary, tris)
    symmetric = kind == "single_layer"
    mat, ratio, pair = _assembly.assemble_blocks(
        KINDS[kind], tris, np.ascontiguousarray(mesh.normals), mesh.areas,
        np.ascontiguousarray(mesh.centroids), mesh.diameters,
        np.ascontiguousarray(reg_pts), reg_w, np.ascontiguousarray(sub_pts), sub_w,
        np.ascontiguousarray(in_bary), in_w, duffy_st, duffy_w,
        quad.near_depth, quad.near_factor, k, lam, mu, METHOD_AUTO, symmetric,
    )
    i = int(np.argmin(ratio))
    if ratio[i] < quad.min_ratio:
        raise QuadratureBudgetError(
            f"near-field subdivision exhausted for panel pair ({i}, {int(pair[i])}): "
            f"distance/leaf diameter = {ratio[i]:.3g} < {quad.min_ratio}"
        )
    if symmetric:
        mat = np.triu(mat) + np.triu(mat, 1).T
    return mat


def assemble_single_layer(mesh: SurfaceMesh, k: complex, medium: ElasticMedium,
                          quadrature: QuadratureConfig | None = None) -> BoundaryOperator:
    """Galerkin matrix of ``S^k``: blocks ``int_{T_i} int_{T_j} Gamma^k(x - y)``."""
    quad = quadrature or QuadratureConfig()
    mat = _assemble(mesh, k, "single_layer", medium, quad)
    return BoundaryOperator(mat, mesh, complex(k), "single_layer", medium, quad)


def assemble_neumann_poincare(mesh: SurfaceMesh, k: complex, medium: ElasticMedium,
                              quadrature: QuadratureConfig | None = None) -> BoundaryOperator:
    """Galerkin matrix of ``K^{k,*}`` with the traction kernel taken at ``x``."""
    quad = quadrature or QuadratureConfig()
    mat = _assemble(mesh, k, "neumann_poincare", medium, quad)
    return BoundaryOperator(mat, mesh, complex(k), "neumann_poincare", medium, quad)


# ---------------------------------------------------------------------------
# traces, norms, solves
# ---------------------------------------------------------------------------


def trace(mesh: SurfaceMesh, field_fn) -> np.ndarray:
    """Panel values ``(N, 3)`` of a vector field evaluated at the centroids."""
    return np.asarray(field_fn(mesh.centroids))


def weighted_norm(mesh: SurfaceMesh, values: np.ndarray) -> float:
    """Area-weighted ``l^2`` norm ``sqrt(sum_i a_i |v_i|^2)`` of panel values."""
    v = np.asarray(values).reshape(mesh.n_panels, -1)
    return float(np.sqrt(np.sum(mesh.areas[:, None] * np.abs(v) ** 2)))


def solve_single_layer(S: BoundaryOperator, f: np.ndarray) -> np.ndarray:
    """Density ``phi`` with ``S phi = f`` tested against every panel.

    ``f`` holds trace values (one row or a stack of columns per panel):
    shape ``(N, 3)`` or ``(N, 3, m)``.
    """
    f = np.asarray(f)
    n = S.n_panels
    rhs = (S.areas[:, None, None] * f.reshape(n, 3, -1)).reshape(3 * n, -1)
    phi = scipy.linalg.lu_solve(S.lu, rhs, check_finite=False)
    return phi.reshape(f.shape)


def _check_pair(S: BoundaryOperator, K: BoundaryOperator) -> None:
    if S.kind != "single_layer" or K.kind != "neumann_poincare":
        raise TypeError("expected (single_layer, neumann_poincare) operators")
    if S.k != K.k:
        raise WavenumberMismatchError(f"S assembled at k={S.k}, K* at k={K.k}")
    if S.mesh is not K.mesh and S.n_panels != K.n_panels:
        raise ValueError("operators live on different meshes")


def _neumann(K: BoundaryOperator, phi: np.ndarray, sign: float) -> np.ndarray:
    n = K.n_panels
    flat = phi.reshape(3 * n, -1)
    out = sign * 0.5 * flat + (K.matrix @ flat) / K.mass[:, None]
    return out.reshape(phi.shape)


def dtn_apply(S: BoundaryOperator, K: BoundaryOperator, f: np.ndarray) -> np.ndarray:
    """Panel values of ``M^k[f] = (1/2 I + K^{k,*}) (S^k)^{-1} f``."""
    _check_pair(S, K)
    phi = solve_single_layer(S, f)
    return _neumann(K, phi, +1.0)


@dataclass(eq=False)
class DtNMap:
    """Static or dynamic DtN map with cached responses to the constant traces."""

    S: BoundaryOperator
    K: BoundaryOperator
    medium: ElasticMedium

    def __post_init__(self):
        _check_pair(self.S, self.K)

    @classmethod
    def assemble(cls, mesh: SurfaceMesh, k: complex, medium: ElasticMedium,
                 quadrature: QuadratureConfig | None = None) -> "DtNMap":
        S = assemble_single_layer(mesh, k, medium, quadrature)
        K = assemble_neumann_poincare(mesh, k, medium, quadrature)
        return cls(S, K, medium)

    @property
    def mesh(self) -> SurfaceMesh:
        return self.S.mesh

    @property
    def k(self) -> complex:
        return self.S.k

    def __call__(self, f: np.ndarray) -> np.ndarray:
        return dtn_apply(self.S, self.K, f)

    def density(self, f: np.ndarray) -> np.ndarray:
        return solve_single_layer(self.S, f)

    @cached_property
    def constant_traces(self) -> np.ndarray:
        """``(N, 3, 3)``: column ``n`` is the trace of ``e_n``."""
        return np.broadcast_to(np.eye(3), (self.mesh.n_panels, 3, 3)).copy()

    @cached_property
    def constant_densities(self) -> np.ndarray:
        """``S^{-1}[e_n]`` as columns, shape ``(N, 3, 3)``."""
        return self.density(self.constant_traces)

    @cached_property
    def constant_responses(self) -> np.ndarray:
        """``M[e_n]`` as columns, shape ``(N, 3, 3)``."""
        return _neumann(self.K, self.constant_densities, +1.0)

    def first_order(self, f: np.ndarray, coefficient: str = "density") -> np.ndarray:
        if self.k != 0:
            raise WavenumberMismatchError("first-order correction needs the static operators")
        return _first_order(self.mesh.areas, self.constant_densities, self.constant_responses,
                            f, gamma_const(self.medium), coefficient)

    def matrix(self) -> np.ndarray:
        """Dense ``(3N, 3N)`` matrix mapping trace values to Neumann values."""
        n = self.mesh.n_panels
        return self(np.eye(3 * n).reshape(n, 3, 3 * n)).reshape(3 * n, 3 * n)

    def first_order_matrix(self, coefficient: str = "density") -> np.ndarray:
        """Dense matrix of :meth:`first_order` (rank at most three)."""
        n = self.mesh.n_panels
        return self.first_order(np.eye(3 * n).reshape(n, 3, 3 * n), coefficient).reshape(3 * n, 3 * n)


def weighted_operator_norm(mesh: SurfaceMesh, matrix: np.ndarray) -> float:
    """Spectral norm of a panel-value operator in the area-weighted ``l^2`` norm."""
    w = np.sqrt(np.repeat(mesh.areas, 3))
    return float(np.linalg.norm(w[:, None] * matrix / w[None, :], 2))


def _surface_dot(mesh: SurfaceMesh, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """``int a . b dsigma`` for panel fields; trailing column axes are paired up."""
    return np.einsum("i,ia...,ia->...", mesh.areas, a, b)


def _first_order(areas, densities, responses, f, gamma, coefficient):
    if coefficient == "density":
        basis = densities
    elif coefficient == "neumann":
        basis = responses
    else:
        raise ValueError(f"unknown coefficient form {coefficient!r}")
    f = np.asarray(f)
    if f.ndim == 2:
        c = np.einsum("i,ian,ia->n", areas, basis, f)
        return 1j * gamma * np.einsum("n,ian->ia", c, responses)
    c = np.einsum("i,ian,iam->nm", areas, basis, f)
    return 1j * gamma * np.einsum("nm,ian->iam", c, responses)


def dtn_first_order(S: BoundaryOperator, K: BoundaryOperator, f: np.ndarray,
                    medium: ElasticMedium, coefficient: str = "density") -> np.ndarray:
    """First-order term ``M_1[f] = i gamma sum_n c_n(f) M[e_n]`` of the DtN map.

    ``coefficient="neumann"`` uses ``c_n = int M[e_n] . f``;
    ``coefficient="density"`` uses ``c_n = int S^{-1}[e_n] . f``.  Both agree
    for the continuous operators, but only the latter is the exact
    derivative of the discrete map at ``k = 0``, so the remainder of the
    discrete expansion is quadratic in ``k``.
    """
    return DtNMap(S, K, medium).first_order(f, coefficient)


def calderon_defect(S: BoundaryOperator, K: BoundaryOperator) -> float:
    """Relative asymmetry of ``S diag(a)^{-1} K`` for Galerkin matrices ``S``, ``K``.

    The continuous operators satisfy ``K S = S K*``; with Galerkin matrices
    this becomes symmetry of ``S diag(a)^{-1} K``.
    """
    _check_pair(S, K)
    prod = S.matrix @ (K.matrix / S.mass[:, None])
    return float(np.linalg.norm(prod - prod.T) / np.linalg.norm(prod))


def np_identity_residual(S: BoundaryOperator, K: BoundaryOperator, f: np.ndarray) -> float:
    """Relative residual ``|(-1/2 I + K*) S^{-1} f| / |S^{-1} f|`` (area-weighted).

    Vanishes for traces of rigid motions in the continuum.
    """
    _check_pair(S, K)
    phi = solve_single_layer(S, f)
    res = _neumann(K, phi, -1.0)
    den = weighted_norm(S.mesh, phi)
    return weighted_norm(S.mesh, res) / den if den > 0 else 0.0


# ---------------------------------------------------------------------------
# binary dump
# ---------------------------------------------------------------------------

_MAGIC = b"ELOP"
_HEADER = struct.Struct("<4sIBQdd")
_KIND_CODES = {"single_layer": 0, "neumann_poincare": 1}


def write_operator(op: BoundaryOperator, path) -> None:
    """Little-endian dump: header then the row-major complex128 matrix."""
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(_MAGIC, 1, _KIND_CODES[op.kind], op.n_panels, op.k.real, op.k.imag))
        fh.write(np.ascontiguousarray(op.matrix, dtype="<c16").tobytes())


def read_operator(path) -> tuple[str, int, complex, np.ndarray]:
    """Return ``(kind, n_panels, k, matrix)`` from an operator dump."""
    with open(path, "rb") as fh:
        head = fh.read(_HEADER.size)
        magic, version, kind, n, kr, ki = _HEADER.unpack(head)
        if magic != _MAGIC or version != 1:
            raise ValueError(f"{path}: not an operator dump (magic={magic!r}, version={version})")
        data = np.frombuffer(fh.read(), dtype="<c16")
    if data.size != (3 * n) ** 2:
        raise ValueError(f"{path}: truncated matrix ({data.size} of {(3 * n) ** 2} entries)")
    names = {v: k for k, v in _KIND_CODES.items()}
    return names[kind], int(n), complex(kr, ki), data.reshape(3 * n, 3 * n).astype(complex)
