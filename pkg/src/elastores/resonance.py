"""Resonance matrices, their spectral data, and the subwavelength resonances.

Two routes to the resonant frequencies are provided.  The closed-form
asymptotics use the eigenpairs of the capacitance-like matrix ``Q`` and the
radiation matrix ``R``; the quadratic eigenvalue problem

    det(-rho tau^2 w^2 I + delta Q - i w delta sqrt(rho) gamma R) = 0

is solved independently by linearization and serves as the reference.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from scipy.optimize import linear_sum_assignment

from .boundary_ops import DtNMap, np_identity_residual
from .geometry import RigidBasis
from .kernels import ElasticMedium, gamma_const

logger = logging.getLogger(__name__)

__all__ = [
    "NotPositiveDefiniteError",
    "RootMatchingError",
    "ResonanceInputs",
    "SpectralData",
    "ResonanceSpectrum",
    "basis_traces",
    "assemble_Q",
    "assemble_C",
    "assemble_R",
    "spectral_decompose",
    "asymptotic_resonances",
    "qep_resonances",
    "match_roots",
    "compare_spectra",
    "ConvergenceReport",
    "qep_residual",
    "rigid_trace_residuals",
]

DAMPING_TOL = 1e-12


class NotPositiveDefiniteError(np.linalg.LinAlgError):
    pass


class RootMatchingError(RuntimeError):
    pass


def basis_traces(dtn: DtNMap, basis: RigidBasis) -> np.ndarray:
    """Centroid traces of the six rigid fields, shape ``(N, 3, 6)``."""
    return np.swapaxes(basis(dtn.mesh.centroids), 1, 2)


def assemble_Q(dtn: DtNMap, basis: RigidBasis) -> np.ndarray:
    """``Q_ij = -int M[xi_i] . xi_j`` (not symmetrized)."""
    xi = basis_traces(dtn, basis)
    m_xi = dtn(xi)
    return -np.einsum("p,pai,paj->ij", dtn.mesh.areas, m_xi, xi).real


def assemble_C(dtn: DtNMap, basis: RigidBasis) -> np.ndarray:
    """Couplings ``c_nk = -int M[e_n] . xi_k``, shape ``(3, 6)``."""
    xi = basis_traces(dtn, basis)
    return -np.einsum("p,pan,pak->nk", dtn.mesh.areas, dtn.constant_responses, xi).real


def assemble_R(C: np.ndarray) -> np.ndarray:
    """Radiation matrix ``R = C^T C``."""
    C = np.asarray(C, dtype=float)
    if C.ndim != 2 or C.shape[0] != 3:
        raise ValueError(f"C must be 3 x m, got {C.shape}")
    return C.T @ C


def symmetry_defect(a: np.ndarray) -> float:
    nrm = np.linalg.norm(a)
    return float(np.linalg.norm(a - a.T) / nrm) if nrm > 0 else 0.0


@dataclass(frozen=True)
class ResonanceInputs:
    """Assembled ``Q`` (as computed), ``C``, ``R`` and the medium."""

    Q: np.ndarray
    C: np.ndarray
    R: np.ndarray
    medium: ElasticMedium
    gamma: float = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        Q = np.asarray(self.Q, dtype=float)
        C = np.asarray(self.C, dtype=float)
        R = np.asarray(self.R, dtype=float)
        if Q.shape != (6, 6) or R.shape != (6, 6) or C.shape != (3, 6):
            raise ValueError(f"shape mismatch: Q {Q.shape}, C {C.shape}, R {R.shape}")
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "R", R)
        if self.gamma is None:
            object.__setattr__(self, "gamma", gamma_const(self.medium))

    @classmethod
    def from_dtn(cls, dtn: DtNMap, basis: RigidBasis) -> "ResonanceInputs":
        if dtn.k != 0:
            raise ValueError("resonance matrices are built from the static DtN map")
        Q = assemble_Q(dtn, basis)
        C = assemble_C(dtn, basis)
        inputs = cls(Q, C, assemble_R(C), dtn.medium)
        logger.info("Q symmetry defect %.3e", inputs.q_asymmetry)
        return inputs

    @property
    def q_asymmetry(self) -> float:
        return symmetry_defect(self.Q)

    @property
    def Q_sym(self) -> np.ndarray:
        return 0.5 * (self.Q + self.Q.T)

    def with_medium(self, medium: ElasticMedium) -> "ResonanceInputs":
        # only delta, tau and rho may change; Q, C, R are fixed by (lam, mu)
        return ResonanceInputs(self.Q, self.C, self.R, medium, self.gamma)


@dataclass(frozen=True)
class SpectralData:
    """Ascending eigenpairs of ``Q`` with eigenvalue clusters.

    Within each cluster the eigenvectors diagonalize ``R``, so ``vRv`` is the
    diagonal of ``V^T R V`` restricted to clusters.
    """

    eigenvalues: np.ndarray
    vectors: np.ndarray
    clusters: np.ndarray
    vRv: np.ndarray

    @property
    def multiplicities(self) -> np.ndarray:
        counts = np.bincount(self.clusters)
        return counts[self.clusters]

    @property
    def n_clusters(self) -> int:
        return int(self.clusters.max()) + 1


def spectral_decompose(Q: np.ndarray, R: np.ndarray | None = None, cluster_tol: float = 1e-6) -> SpectralData:
    """Eigen-decomposition of symmetric positive definite ``Q``.

    Eigenvalues closer than ``cluster_tol * ||Q||_2`` to their neighbour are
    grouped, and each cluster's eigenvector block is rotated to diagonalize
    ``R`` on that eigenspace.
    """
    Q = np.asarray(Q, dtype=float)
    n = Q.shape[0]
    if Q.shape != (n, n):
        raise ValueError("Q must be square")
    if symmetry_defect(Q) > 1e-12:
        raise NotPositiveDefiniteError("Q must be symmetrized before decomposition")
    R = np.zeros_like(Q) if R is None else np.asarray(R, dtype=float)
    lam, vec = np.linalg.eigh(Q)
    if lam[0] <= 0:
        raise NotPositiveDefiniteError(f"Q is not positive definite (min eigenvalue {lam[0]:.3e})")
    scale = lam[-1]
    clusters = np.zeros(n, dtype=int)
    for i in range(1, n):
        clusters[i] = clusters[i - 1] + (lam[i] - lam[i - 1] > cluster_tol * scale)
    for c in range(clusters[-1] + 1):
        idx = np.flatnonzero(clusters == c)
        if len(idx) < 2:
            continue
        P = vec[:, idx]
        _, W = np.linalg.eigh(P.T @ R @ P)
        vec[:, idx] = P @ W
    vrv = np.einsum("ji,jk,ki->i", vec, R, vec)
    return SpectralData(lam, vec, clusters, vrv)


@dataclass(frozen=True)
class ResonanceSpectrum:
    """Asymptotic resonance pairs and (optionally) the reference QEP roots."""

    spectral: SpectralData
    damping: np.ndarray
    omega_plus: np.ndarray
    omega_minus: np.ndarray
    damping_vanishes: np.ndarray
    medium: ElasticMedium
    qep_roots: np.ndarray | None = None

    @property
    def eigenvalues(self) -> np.ndarray:
        return self.spectral.eigenvalues

    @property
    def vectors(self) -> np.ndarray:
        return self.spectral.vectors

    @property
    def vRv(self) -> np.ndarray:
        return self.spectral.vRv

    @property
    def asymptotic_roots(self) -> np.ndarray:
        return np.concatenate([self.omega_plus, self.omega_minus])


def asymptotic_resonances(spectral: SpectralData, R: np.ndarray, medium: ElasticMedium,
                          gamma: float | None = None) -> ResonanceSpectrum:
    """Leading two-term resonances ``+-sqrt(lam_i delta / (rho tau^2)) - i d_i delta``.

    ``d_i = gamma v_i^T R v_i / (2 sqrt(rho) tau^2)``.
    """
    gamma = gamma_const(medium) if gamma is None else gamma
    R = np.asarray(R, dtype=float)
    rho, tau, delta = medium.rho, medium.tau, medium.delta
    vrv = np.einsum("ji,jk,ki->i", spectral.vectors, R, spectral.vectors)
    damping = gamma * vrv / (2 * np.sqrt(rho) * tau**2)
    real = np.sqrt(spectral.eigenvalues * delta / (rho * tau**2))
    plus = real - 1j * damping * delta
    minus = -np.conj(plus)
    flags = vrv <= DAMPING_TOL * np.linalg.norm(R, 2)
    if flags.any():
        logger.info("radiative damping vanishes for modes %s", np.flatnonzero(flags).tolist())
    return ResonanceSpectrum(spectral, damping, plus, minus, flags, medium)


def qep_resonances(Q: np.ndarray, R: np.ndarray, medium: ElasticMedium, delta: float | None = None,
                   gamma: float | None = None) -> np.ndarray:
    """All roots of the leading-order characteristic matrix.

    With ``s = -i w`` the problem ``rho tau^2 s^2 I + s delta sqrt(rho) gamma R
    + delta Q = 0`` has real coefficients; after rescaling ``s`` by
    ``sqrt(delta)`` it is linearized into a real ``2n x 2n`` generalized
    eigenproblem whose complex eigenvalues come in
    exact conjugate pairs, which maps onto the ``w -> -conj(w)`` symmetry.
    Roots are sorted by real part, then imaginary part.
    """
    Q = np.asarray(Q, dtype=float)
    R = np.asarray(R, dtype=float)
    n = Q.shape[0]
    if Q.shape != (n, n) or R.shape != (n, n):
        raise ValueError(f"Q and R must be square of equal size, got {Q.shape}, {R.shape}")
    delta = medium.delta if delta is None else delta
    if not delta > 0:
        raise ValueError(f"contrast delta must be positive, got {delta}")
    gamma = gamma_const(medium) if gamma is None else gamma
    mass = medium.rho * medium.tau**2
    eye, zero = np.eye(n), np.zeros((n, n))
    # s = sqrt(delta) t keeps the pencil O(1) for small contrast
    root = np.sqrt(delta)
    a = np.block([[zero, eye], [-Q, -root * np.sqrt(medium.rho) * gamma * R]])
    b = np.block([[eye, zero], [zero, mass * eye]])
    try:
        t = scipy.linalg.eigvals(a, b)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise RuntimeError(f"QEP eigensolver failed: {exc}") from exc
    if not np.all(np.isfinite(t)):
        raise RuntimeError("QEP eigensolver returned non-finite roots")
    omega = 1j * root * t
    order = np.lexsort((omega.imag, omega.real))
    return omega[order]


def match_roots(reference: np.ndarray, candidate: np.ndarray, same_tol: float = 1e-6,
                strict: bool = True):
    """Index array ``p`` pairing ``reference[i]`` with ``candidate[p[i]]``.

    One-to-one nearest assignment in the complex plane.  A pairing is
    ambiguous when its distance exceeds half the gap from ``reference[i]`` to
    the nearest distinct reference value.  Reference values within
    ``same_tol * max|reference|`` of each other count as one (clustered)
    value.  With ``strict`` an ambiguous pairing raises
    :class:`RootMatchingError`; otherwise ``(perm, ambiguous_mask)`` is
    returned.
    """
    reference = np.asarray(reference)
    candidate = np.asarray(candidate)
    if reference.shape != candidate.shape:
        raise ValueError(f"root sets differ in size: {reference.shape} vs {candidate.shape}")
    cost = np.abs(reference[:, None] - candidate[None, :])
    rows, cols = linear_sum_assignment(cost)
    perm = np.empty(len(reference), dtype=int)
    perm[rows] = cols
    scale = np.max(np.abs(reference))
    ambiguous = np.zeros(len(reference), dtype=bool)
    for i, j in zip(rows, cols):
        gaps = np.abs(reference - reference[i])
        gaps = gaps[gaps > same_tol * scale]
        if gaps.size and cost[i, j] >= 0.5 * gaps.min():
            if strict:
                raise RootMatchingError(
                    f"root {reference[i]:.6g} matched at distance {cost[i, j]:.3g}, "
                    f"gap to neighbour {gaps.min():.3g}"
                )
            ambiguous[i] = True
    return perm if strict else (perm, ambiguous)


@dataclass(frozen=True)
class ConvergenceReport:
    """Asymptotic-vs-QEP errors across a contrast sweep.

    ``errors[d, m]`` is ``|w_asym - w_qep| / |w_qep|`` for sweep point ``d`` and
    root ``m`` (ordered as ``[omega_plus, omega_minus]``);
    ``remainder[d, m]`` is the absolute error ``|w_asym - w_qep|`` and
    ``orders[m]`` its fitted log-log slope against ``delta``.
    """

    deltas: np.ndarray
    errors: np.ndarray
    remainder: np.ndarray
    orders: np.ndarray
    converged: np.ndarray
    monotone: np.ndarray
    ambiguous: np.ndarray

    @property
    def min_order(self) -> float:
        fitted = self.orders[~self.converged]
        return float(fitted.min()) if fitted.size else np.inf


def compare_spectra(inputs: ResonanceInputs, deltas, cluster_tol: float = 1e-6,
                    atol: float = 1e-12, strict: bool = True) -> ConvergenceReport:
    """Compare the asymptotic formula with QEP roots over ``deltas``.

    Modes whose absolute error stays below ``atol * |w|`` at every sweep point
    are reported as ``converged`` (the formula is exact to solver precision)
    and are excluded from the order fit.  With ``strict=False`` ambiguous
    root pairings are recorded in ``ambiguous`` instead of raising.
    """
    deltas = np.asarray(deltas, dtype=float)
    if deltas.ndim != 1 or len(deltas) < 2:
        raise ValueError("need at least two contrast values")
    spectral = spectral_decompose(inputs.Q_sym, inputs.R, cluster_tol)
    errs, absr, amb = [], [], []
    for delta in deltas:
        medium = inputs.medium.with_contrast(delta=delta, tau=inputs.medium.tau)
        asym = asymptotic_resonances(spectral, inputs.R, medium, inputs.gamma).asymptotic_roots
        qep = qep_resonances(inputs.Q_sym, inputs.R, medium, gamma=inputs.gamma)
        if strict:
            perm, flags = match_roots(asym, qep, cluster_tol), np.zeros(len(asym), dtype=bool)
        else:
            perm, flags = match_roots(asym, qep, cluster_tol, strict=False)
        amb.append(flags)
        diff = np.abs(asym - qep[perm])
        absr.append(diff)
        errs.append(diff / np.abs(qep[perm]))
    errs = np.array(errs)
    absr = np.array(absr)
    converged = np.all(errs <= atol, axis=0)
    orders = np.full(errs.shape[1], np.nan)
    logd = np.log(deltas)
    for m in np.flatnonzero(~converged):
        orders[m] = np.polyfit(logd, np.log(np.maximum(absr[:, m], 1e-300)), 1)[0]
    order_idx = np.argsort(-deltas)
    monotone = np.all(np.diff(errs[order_idx], axis=0) < 0, axis=0) | converged
    return ConvergenceReport(deltas, errs, absr, orders, converged, monotone, np.array(amb))


def qep_residual(omega: complex, inputs: ResonanceInputs, delta: float) -> float:
    """Smallest singular value of the characteristic matrix at ``omega`` (relative)."""
    m = inputs.medium
    mat = (-m.rho * m.tau**2 * omega**2 * np.eye(6) + delta * inputs.Q_sym
           - 1j * omega * delta * np.sqrt(m.rho) * inputs.gamma * inputs.R)
    sv = np.linalg.svd(mat, compute_uv=False)
    return float(sv[-1] / sv[0])


def rigid_trace_residuals(dtn: DtNMap, basis: RigidBasis) -> np.ndarray:
    """Rigid-trace identity residuals for the six basis fields."""
    xi = basis_traces(dtn, basis)
    return np.array([np_identity_residual(dtn.S, dtn.K, xi[..., i]) for i in range(6)])
