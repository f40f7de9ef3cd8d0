"""Plane-wave scattering near the subwavelength resonances.

Only leading-order quantities are evaluated: the modal amplitudes of the
interior field on the rigid-motion basis, the resulting interior field, and
the exterior field generated by the single-layer density that carries the
jump between the interior trace and the incident wave.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from . import _assembly
from .boundary_ops import BoundaryOperator, WavenumberMismatchError, solve_single_layer
from .geometry import RigidBasis, SurfaceMesh
from .kernels import METHOD_AUTO, ElasticMedium
from .quadrature import triangle_rule
from .resonance import ResonanceInputs, SpectralData, spectral_decompose

logger = logging.getLogger(__name__)

__all__ = [
    "RegimeWarning",
    "OutsideDomainError",
    "IncidentWave",
    "ModalAmplitudes",
    "EnhancementCurve",
    "EnhancementSweep",
    "FarFieldPattern",
    "amplitudes",
    "enhancement_curve",
    "peak_scaling",
    "interior_field",
    "boundary_density",
    "far_field",
    "exterior_field",
    "fibonacci_directions",
    "resonance_window",
]

REGIME_FACTOR = 10.0


class RegimeWarning(UserWarning):
    """A frequency lies outside the window where the leading-order formulas apply."""


class OutsideDomainError(ValueError):
    pass


@dataclass(frozen=True)
class IncidentWave:
    """Compressional ``d e^{i k_p x.d}`` or shear ``d_perp e^{i k_s x.d}`` plane wave."""

    kind: str
    direction: np.ndarray
    polarization: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in ("compressional", "shear"):
            raise ValueError(f"incident kind must be 'compressional' or 'shear', got {self.kind!r}")
        d = np.asarray(self.direction, dtype=float)
        nd = np.linalg.norm(d)
        if d.shape != (3,) or nd == 0:
            raise ValueError("direction must be a nonzero 3-vector")
        d = d / nd
        object.__setattr__(self, "direction", d)
        if self.kind == "shear":
            if self.polarization is None:
                raise ValueError("shear incidence needs a polarization vector")
            p = np.asarray(self.polarization, dtype=float)
            p = p / np.linalg.norm(p)
            if abs(p @ d) > 1e-8:
                raise ValueError(f"polarization not orthogonal to direction (d.p = {p @ d:.3g})")
            p = p - (p @ d) * d
            object.__setattr__(self, "polarization", p / np.linalg.norm(p))
        elif self.polarization is not None:
            object.__setattr__(self, "polarization", None)

    @property
    def amplitude(self) -> np.ndarray:
        """``u_in(0)``: ``d`` for compressional, ``d_perp`` for shear."""
        return self.direction if self.kind == "compressional" else self.polarization

    def wavenumber(self, omega: float, medium: ElasticMedium) -> complex:
        _, ks, kp = medium.wavenumbers(omega)
        return kp if self.kind == "compressional" else ks

    def __call__(self, x, omega: float, medium: ElasticMedium) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        phase = np.exp(1j * self.wavenumber(omega, medium) * (x @ self.direction))
        return phase[..., None] * self.amplitude


def resonance_window(inputs: ResonanceInputs, medium: ElasticMedium | None = None) -> float:
    """``sqrt(lam_max delta / (rho tau^2))``, the scale of the resonant frequencies."""
    m = medium or inputs.medium
    lam_max = np.linalg.eigvalsh(inputs.Q_sym)[-1]
    return float(np.sqrt(lam_max * m.delta / (m.rho * m.tau**2)))


def _check_regime(omega, inputs: ResonanceInputs) -> None:
    scale = resonance_window(inputs)
    if np.any(np.abs(omega) > REGIME_FACTOR * scale):
        warnings.warn(
            f"omega up to {np.max(np.abs(omega)):.3g} exceeds {REGIME_FACTOR:g} x the resonance "
            f"scale {scale:.3g}; leading-order amplitudes are unreliable",
            RegimeWarning,
            stacklevel=3,
        )


@dataclass(frozen=True)
class ModalAmplitudes:
    """Coefficients ``s_i`` of the interior field on the rigid basis.

    ``s`` has shape ``omega.shape + (6,)``; ``source`` is ``delta C^T p``.
    """

    s: np.ndarray
    source: np.ndarray
    omega: np.ndarray
    delta: float
    incident: np.ndarray


COUPLING_TOL = 1e-6


def _coupling(inputs: ResonanceInputs, spectral: SpectralData, p: np.ndarray):
    """Modal sources ``(V^T C^T p)_j`` and the mask of undamped modes.

    Because ``v^T R v = |C v|^2``, a mode without radiative damping also has
    a vanishing source when ``R = C^T C``; a source below
    ``COUPLING_TOL * |C| |p|`` on such a mode is discretization noise and is
    zeroed, otherwise it would produce an artificial unbounded spike.
    """
    proj = spectral.vectors.T @ (inputs.C.T @ p)
    undamped = spectral.vRv <= 1e-12 * np.linalg.norm(inputs.R, 2)
    noise = np.abs(proj) <= COUPLING_TOL * np.linalg.norm(inputs.C, 2) * np.linalg.norm(p)
    proj = np.where(undamped & noise, 0.0, proj)
    return proj, undamped & ~noise


def _modal(omega, inputs: ResonanceInputs, spectral: SpectralData, p: np.ndarray):
    m = inputs.medium
    V = spectral.vectors
    proj, _ = _coupling(inputs, spectral, p)
    w = np.asarray(omega)[..., None]
    denom = (-m.rho * m.tau**2 * w**2 + spectral.eigenvalues * m.delta
             - 1j * inputs.gamma * math.sqrt(m.rho) * spectral.vRv * w * m.delta)
    with np.errstate(divide="ignore", invalid="ignore"):
        # an unexcited mode contributes nothing, even at its own resonance
        coef = np.where(proj == 0, 0.0, m.delta * proj / denom)
        s = coef @ V.T
    return denom, s


def amplitudes(omega, inputs: ResonanceInputs, p, spectral: SpectralData | None = None) -> ModalAmplitudes:
    """Leading-order modal amplitudes at (real) frequencies ``omega``.

    ``s_i = sum_j delta V_ji (V^T C^T p)_j / (-rho tau^2 w^2 + lam_j delta
    - i gamma sqrt(rho) (v_j^T R v_j) w delta)``.
    """
    spectral = spectral or spectral_decompose(inputs.Q_sym, inputs.R)
    omega = np.asarray(omega)
    _check_regime(omega, inputs)
    p = np.asarray(p, dtype=float)
    denom, s = _modal(omega, inputs, spectral, p)
    if not np.all(np.isfinite(s)):
        raise ZeroDivisionError("characteristic denominator vanishes at an excited undamped resonance")
    delta = inputs.medium.delta
    return ModalAmplitudes(s, delta * (inputs.C.T @ p), omega, delta, p)


@dataclass(frozen=True)
class EnhancementCurve:
    """``max_i |s_i|`` over a frequency grid and the refined peak."""

    omega: np.ndarray
    max_abs_s: np.ndarray
    argmax_mode: np.ndarray
    peak_omega: float
    peak_value: float
    peak_mode: int
    delta: float
    damping_vanishes: bool


def enhancement_curve(omegas, inputs: ResonanceInputs, p, spectral: SpectralData | None = None,
                      refine: bool = True) -> EnhancementCurve:
    """Peak modal amplitude over ``omegas``.

    The Lorentzian peaks have relative width ``O(delta^{1/2})``, so every
    local maximum of the grid is refined by a bounded scalar search between
    its grid neighbours.  If an excited mode has no radiative damping the
    curve is unbounded at its resonance; then ``damping_vanishes`` is set and
    the peak value is ``inf``.
    """
    omegas = np.asarray(omegas, dtype=float)
    if omegas.size == 0:
        raise ValueError("empty frequency grid")
    omegas = np.sort(omegas)
    spectral = spectral or spectral_decompose(inputs.Q_sym, inputs.R)
    m = inputs.medium
    p = np.asarray(p, dtype=float)
    _check_regime(omegas, inputs)

    _, undamped = _coupling(inputs, spectral, p)
    res = np.sqrt(spectral.eigenvalues * m.delta / (m.rho * m.tau**2))
    in_range = (res >= omegas[0]) & (res <= omegas[-1])

    def peak(w):
        return np.abs(_modal(w, inputs, spectral, p)[1])

    vals = peak(omegas)
    vals = np.where(np.isfinite(vals), vals, np.inf)
    max_abs = vals.max(axis=1)
    arg = vals.argmax(axis=1)

    if np.any(undamped & in_range):
        j = int(np.flatnonzero(undamped & in_range)[0])
        logger.warning("excited mode %d is undamped: enhancement peak is unbounded", j)
        return EnhancementCurve(omegas, max_abs, arg, float(res[j]), np.inf, j, m.delta, True)

    best_w, best_v = float(omegas[np.argmax(max_abs)]), float(max_abs.max())
    if refine and omegas.size >= 3:
        n = omegas.size
        local = [i for i in range(n)
                 if (i == 0 or max_abs[i] >= max_abs[i - 1]) and (i == n - 1 or max_abs[i] >= max_abs[i + 1])]
        for i in local:
            lo, hi = omegas[max(i - 1, 0)], omegas[min(i + 1, n - 1)]
            if hi <= lo:
                continue
            opt = minimize_scalar(lambda w: -peak(w).max(), bounds=(lo, hi), method="bounded",
                                  options={"xatol": 1e-12 * hi})
            if -opt.fun > best_v:
                best_w, best_v = float(opt.x), float(-opt.fun)
    mode = int(np.argmax(peak(best_w)))
    return EnhancementCurve(omegas, max_abs, arg, best_w, best_v, mode, m.delta, False)


@dataclass(frozen=True)
class EnhancementSweep:
    deltas: np.ndarray
    peaks: np.ndarray
    peak_omegas: np.ndarray
    slope: float
    curves: tuple


def peak_scaling(inputs: ResonanceInputs, p, deltas, window=(0.2, 3.0), count: int = 200) -> EnhancementSweep:
    """Peak enhancement across a contrast sweep and its log-log slope in ``delta``.

    The grid spans ``window`` in units of the resonance scale at each ``delta``.
    """
    deltas = np.asarray(deltas, dtype=float)
    if deltas.size < 2:
        raise ValueError("need at least two contrast values for a slope")
    curves = []
    for delta in deltas:
        local = inputs.with_medium(inputs.medium.with_contrast(delta=delta))
        scale = resonance_window(local)
        grid = np.linspace(window[0] * scale, window[1] * scale, count)
        curves.append(enhancement_curve(grid, local, p))
    peaks = np.array([c.peak_value for c in curves])
    if np.all(np.isfinite(peaks)):
        slope = float(np.polyfit(np.log(deltas), np.log(peaks), 1)[0])
    else:
        slope = float("nan")
    return EnhancementSweep(deltas, peaks, np.array([c.peak_omega for c in curves]), slope, tuple(curves))


def interior_field(amps: ModalAmplitudes, basis: RigidBasis, x, mesh: SurfaceMesh | None = None) -> np.ndarray:
    """Leading-order interior displacement ``sum_i s_i xi_i(x)``.

    With ``mesh`` given, points outside the body are rejected.
    """
    x = np.asarray(x, dtype=float)
    if mesh is not None:
        inside = mesh.contains(x.reshape(-1, 3))
        if not np.all(inside):
            raise OutsideDomainError(f"{int((~inside).sum())} point(s) lie outside the body")
    xi = basis(x)  # (..., 6, 3)
    if amps.s.ndim != 1:
        raise ValueError("interior_field needs amplitudes at a single frequency")
    return np.einsum("i,...ia->...a", amps.s, xi)


def boundary_density(amps: ModalAmplitudes, basis: RigidBasis, incident: IncidentWave,
                     S: BoundaryOperator) -> np.ndarray:
    """Density ``phi = S^{-1}[(sum_i s_i xi_i)|_bd - u_in|_bd]`` on panels, shape ``(N, 3)``."""
    medium = S.medium
    omega = float(np.real(amps.omega))
    k = medium.wavenumber(omega)
    if not np.isclose(S.k, k, rtol=1e-12, atol=0):
        raise WavenumberMismatchError(f"S assembled at k={S.k}, amplitudes at k={k}")
    c = S.mesh.centroids
    trace = np.einsum("i,pia->pa", amps.s, basis(c)) - incident(c, omega, medium)
    return solve_single_layer(S, trace)


@dataclass(frozen=True)
class FarFieldPattern:
    """Transverse and longitudinal far-field patterns.

    The scattered field behaves like
    ``-e^{i k_s |x|}/|x| u_s(xhat) - e^{i k_p |x|}/|x| u_p(xhat)``.
    """

    directions: np.ndarray
    u_s: np.ndarray
    u_p: np.ndarray
    omega: float
    delta: float
    medium: ElasticMedium

    def reconstruct(self, radius: float) -> np.ndarray:
        """Scattered field at ``radius * directions`` from the patterns."""
        _, ks, kp = self.medium.wavenumbers(self.omega)
        return (-np.exp(1j * ks * radius) / radius * self.u_s
                - np.exp(1j * kp * radius) / radius * self.u_p)

    def transversality_defect(self) -> float:
        dots = np.abs(np.einsum("ma,ma->m", self.directions, self.u_s))
        return float(np.max(dots / np.maximum(np.linalg.norm(self.u_s, axis=1), 1e-300)))

    def longitudinality_defect(self) -> float:
        par = self.directions * np.einsum("ma,ma->m", self.directions, self.u_p)[:, None]
        return float(np.max(np.linalg.norm(self.u_p - par, axis=1)
                            / np.maximum(np.linalg.norm(self.u_p, axis=1), 1e-300)))


def far_field(density: np.ndarray, mesh: SurfaceMesh, directions, medium: ElasticMedium,
              omega: float, order: int = 7) -> FarFieldPattern:
    """Far-field patterns of the single-layer potential of a panel density."""
    xhat = np.atleast_2d(np.asarray(directions, dtype=float))
    if np.any(np.abs(np.linalg.norm(xhat, axis=1) - 1) > 1e-12):
        raise ValueError("far-field directions must be unit vectors")
    _, ks, kp = medium.wavenumbers(omega)
    bary, w = triangle_rule(order)
    pts = np.einsum("qk,fkj->fqj", bary, mesh.triangles)  # (N, q, 3)
    wts = mesh.areas[:, None] * w[None, :]
    proj = np.einsum("ma,fqa->mfq", xhat, pts)
    phi = np.asarray(density)

    def moment(kk):
        ph = np.exp(-1j * kk * proj) * wts
        return np.einsum("mfq,fa->ma", ph, phi)

    vs = moment(ks) / (4 * np.pi * medium.mu)
    vp = moment(kp) / (4 * np.pi * (medium.lam + 2 * medium.mu))
    u_s = vs - xhat * np.einsum("ma,ma->m", xhat, vs)[:, None]
    u_p = xhat * np.einsum("ma,ma->m", xhat, vp)[:, None]
    return FarFieldPattern(xhat, u_s, u_p, float(omega), medium.delta, medium)


def exterior_field(density: np.ndarray, mesh: SurfaceMesh, points, medium: ElasticMedium,
                   omega: float, order: int = 7) -> np.ndarray:
    """Scattered field ``S^k[phi](x)`` at points away from the surface.

    Points within one panel diameter of a panel centroid, or inside the
    body, are refused: regular quadrature is inaccurate there.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    h = mesh.diameters.max()
    dist = np.min(np.linalg.norm(pts[:, None, :] - mesh.centroids[None], axis=-1), axis=1)
    if np.any(dist <= h) or np.any(mesh.contains(pts)):
        raise OutsideDomainError("exterior evaluation point too close to the surface or inside the body")
    bary, w = triangle_rule(order)
    k = complex(medium.wavenumber(omega))
    out = _assembly.potential_at(pts, np.ascontiguousarray(mesh.triangles), mesh.areas, bary, w,
                                 np.ascontiguousarray(density, dtype=np.complex128), k,
                                 float(medium.lam), float(medium.mu), METHOD_AUTO)
    return out.reshape(np.shape(points))


def fibonacci_directions(count: int) -> np.ndarray:
    """Near-uniform unit vectors on the sphere (golden-angle spiral)."""
    if count < 1:
        raise ValueError("count must be positive")
    i = np.arange(count) + 0.5
    z = 1 - 2 * i / count
    r = np.sqrt(1 - z**2)
    phi = np.pi * (3 - np.sqrt(5)) * i
    d = np.column_stack([r * np.cos(phi), r * np.sin(phi), z])
    return d / np.linalg.norm(d, axis=1, keepdims=True)
