"""Elastostatic and elastodynamic fundamental solutions for an isotropic medium.

The displacement Green tensor of ``L_{lam,mu} + k^2`` is written in radial form

    Gamma(x) = A(r) I + B(r) rhat rhat^T,      r = |x|, rhat = x / r,

with shear and compressional wavenumbers ``k_s = k / sqrt(mu)`` and
``k_p = k / sqrt(lam + 2 mu)``.  ``k = 0`` gives the Kelvin matrix.  The
scalar profiles ``A, B`` and their radial derivatives are evaluated by numba
kernels that are shared with the boundary-element assembly, so the pointwise
API here and the assembled matrices use exactly the same arithmetic.

For ``max(|k_s|, |k_p|) r <= 1`` the power series in ``i k r`` is summed to
machine precision; above that the closed form is used.  The closed form
subtracts two nearly equal exponentials and loses ``~eps / (k r)^2`` relative
accuracy, which is negligible in that range.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np
from numba import njit

__all__ = [
    "ElasticMedium",
    "SingularEvaluationError",
    "kelvin",
    "kupradze",
    "kupradze_series",
    "traction_kernel",
    "gamma_const",
    "farfield_kernel",
]

METHOD_AUTO = 0
METHOD_CLOSED = 1
METHOD_SERIES = 2
_METHODS = {"auto": METHOD_AUTO, "closed": METHOD_CLOSED, "series": METHOD_SERIES}

# 1/24! ~ 1.6e-24: the series tail is below roundoff for |k r| <= 1.
SERIES_TERMS = 24
SERIES_SWITCH = 1.0


class SingularEvaluationError(ValueError):
    """Raised when a kernel is evaluated at coincident points."""


@dataclass(frozen=True)
class ElasticMedium:
    """Background Lamé pair, density and the inclusion contrast.

    The inclusion has Lamé parameters ``(lam, mu) / delta`` and density
    ``rho / epsilon`` with ``epsilon = delta / tau**2``.
    """

    lam: float
    mu: float
    rho: float = 1.0
    delta: float = 1e-4
    tau: float = 1.0

    def __post_init__(self):
        if not self.mu > 0:
            raise ValueError(f"shear modulus must be positive, got mu={self.mu}")
        if not 3 * self.lam + 2 * self.mu > 0:
            raise ValueError(
                f"strong convexity violated: 3*lam + 2*mu = {3 * self.lam + 2 * self.mu} <= 0"
            )
        if not self.rho > 0:
            raise ValueError(f"density must be positive, got rho={self.rho}")
        if not self.delta > 0:
            raise ValueError(f"contrast delta must be positive, got {self.delta}")
        if not self.tau > 0:
            raise ValueError(f"contrast tau must be positive, got {self.tau}")

    @property
    def epsilon(self) -> float:
        return self.delta / self.tau**2

    @property
    def c_s(self) -> float:
        return math.sqrt(self.mu / self.rho)

    @property
    def c_p(self) -> float:
        return math.sqrt((self.lam + 2 * self.mu) / self.rho)

    def wavenumber(self, omega: complex) -> complex:
        """Scaled wavenumber ``k = sqrt(rho) * omega`` used by all kernels."""
        return math.sqrt(self.rho) * omega

    def wavenumbers(self, omega: complex) -> tuple[complex, complex, complex]:
        """Return ``(k, k_s, k_p)`` at angular frequency ``omega``."""
        k = self.wavenumber(omega)
        return k, k / math.sqrt(self.mu), k / math.sqrt(self.lam + 2 * self.mu)

    def with_contrast(self, delta: float | None = None, tau: float | None = None) -> "ElasticMedium":
        return ElasticMedium(
            self.lam,
            self.mu,
            self.rho,
            self.delta if delta is None else delta,
            self.tau if tau is None else tau,
        )


# ---------------------------------------------------------------------------
# numba radial profiles
# ---------------------------------------------------------------------------


@njit(cache=True)
def _radial_static(r, lam, mu):
    cp = 1.0 / (lam + 2.0 * mu)
    a = -(1.0 / mu + cp) / (8.0 * math.pi * r)
    b = -(1.0 / mu - cp) / (8.0 * math.pi * r)
    # both profiles are homogeneous of degree -1
    return complex(a), complex(-a / r), complex(b), complex(-b / r)


@njit(cache=True)
def _radial_series(r, ks, kp, lam, mu):
    zs = 1j * ks * r
    zp = 1j * kp * r
    cs = 1.0 / mu
    cp = 1.0 / (lam + 2.0 * mu)
    ts = 1.0 + 0j
    tp = 1.0 + 0j
    a = 0j
    da = 0j
    b = 0j
    db = 0j
    for j in range(SERIES_TERMS + 1):
        if j > 0:
            ts = ts * zs / j
            tp = tp * zp / j
        c = 1.0 / (j + 2.0)
        ta = ((j + 1.0) * cs * ts + cp * tp) * c
        tb = (j - 1.0) * (cs * ts - cp * tp) * c
        a += ta
        b += tb
        da += (j - 1.0) * ta
        db += (j - 1.0) * tb
    f = 1.0 / (4.0 * math.pi * r)
    return -f * a, -f * da / r, f * b, f * db / r


@njit(cache=True)
def _g_derivs(a, r):
    # g(r) = exp(i a r) / r and its first three derivatives
    e = cmath.exp(1j * a * r)
    r2 = r * r
    r3 = r2 * r
    g = e / r
    g1 = e * (1j * a / r - 1.0 / r2)
    g2 = e * (-a * a / r - 2j * a / r2 + 2.0 / r3)
    g3 = e * (-1j * a * a * a / r + 3.0 * a * a / r2 + 6j * a / r3 - 6.0 / (r3 * r))
    return g, g1, g2, g3


@njit(cache=True)
def _radial_closed(r, k, ks, kp, mu):
    gs, gs1, gs2, gs3 = _g_derivs(ks, r)
    gp, gp1, gp2, gp3 = _g_derivs(kp, r)
    f1 = gp1 - gs1
    f2 = gp2 - gs2
    f3 = gp3 - gs3
    c = 1.0 / (4.0 * math.pi * k * k)
    a = -gs / (4.0 * math.pi * mu) + c * f1 / r
    da = -gs1 / (4.0 * math.pi * mu) + c * (f2 / r - f1 / (r * r))
    b = c * (f2 - f1 / r)
    db = c * (f3 - f2 / r + f1 / (r * r))
    return a, da, b, db


@njit(cache=True)
def radial_profiles(r, k, lam, mu, method):
    """``(A, A', B, B')`` at distance ``r`` for complex wavenumber ``k``."""
    if k == 0:
        return _radial_static(r, lam, mu)
    ks = k / math.sqrt(mu)
    kp = k / math.sqrt(lam + 2.0 * mu)
    if method == METHOD_SERIES:
        return _radial_series(r, ks, kp, lam, mu)
    if method == METHOD_CLOSED:
        return _radial_closed(r, k, ks, kp, mu)
    if max(abs(ks), abs(kp)) * r <= SERIES_SWITCH:
        return _radial_series(r, ks, kp, lam, mu)
    return _radial_closed(r, k, ks, kp, mu)


@njit(cache=True)
def green_into(out, d0, d1, d2, k, lam, mu, method):
    """Accumulate ``Gamma^k(d)`` (3x3, row-major into ``out[9]``)."""
    r = math.sqrt(d0 * d0 + d1 * d1 + d2 * d2)
    a, _, b, _ = radial_profiles(r, k, lam, mu, method)
    u = (d0 / r, d1 / r, d2 / r)
    for i in range(3):
        for j in range(3):
            v = b * u[i] * u[j]
            if i == j:
                v += a
            out[3 * i + j] = v


@njit(cache=True)
def traction_into(out, d0, d1, d2, n0, n1, n2, k, lam, mu, method, subtract_static):
    """Conormal derivative (w.r.t. x, normal ``n``) of the columns of ``Gamma^k(d)``.

    With ``subtract_static`` the k = 0 kernel is removed, leaving the bounded
    difference used on coincident panels.
    """
    r = math.sqrt(d0 * d0 + d1 * d1 + d2 * d2)
    a, da, b, db = radial_profiles(r, k, lam, mu, method)
    if subtract_static:
        _, da0, b0, db0 = _radial_static(r, lam, mu)
        da -= da0
        b -= b0
        db -= db0
    u = (d0 / r, d1 / r, d2 / r)
    n = (n0, n1, n2)
    q = u[0] * n0 + u[1] * n1 + u[2] * n2
    br = b / r
    c_div = lam * (da + db + 2.0 * br)
    c_id = mu * (da + br) * q
    c_rr = mu * (2.0 * db - 4.0 * br) * q
    c_nr = c_div + 2.0 * mu * br
    c_rn = mu * (da + br)
    for i in range(3):
        for j in range(3):
            v = c_rr * u[i] * u[j] + c_nr * n[i] * u[j] + c_rn * u[i] * n[j]
            if i == j:
                v += c_id
            out[3 * i + j] = v


@njit(cache=True)
def _green_many(d, k, lam, mu, method):
    m = d.shape[0]
    out = np.empty((m, 9), dtype=np.complex128)
    for p in range(m):
        green_into(out[p], d[p, 0], d[p, 1], d[p, 2], k, lam, mu, method)
    return out


@njit(cache=True)
def _traction_many(d, n, k, lam, mu, method):
    m = d.shape[0]
    out = np.empty((m, 9), dtype=np.complex128)
    for p in range(m):
        traction_into(out[p], d[p, 0], d[p, 1], d[p, 2], n[p, 0], n[p, 1], n[p, 2],
                      k, lam, mu, method, False)
    return out


# ---------------------------------------------------------------------------
# public pointwise API
# ---------------------------------------------------------------------------


def _points(x) -> tuple[np.ndarray, tuple[int, ...]]:
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != 3:
        raise ValueError(f"expected trailing dimension 3, got shape {x.shape}")
    flat = x.reshape(-1, 3)
    if np.any(np.einsum("ij,ij->i", flat, flat) == 0.0):
        raise SingularEvaluationError("kernel evaluated at x = 0")
    return np.ascontiguousarray(flat), x.shape[:-1]


def kelvin(x, medium: ElasticMedium) -> np.ndarray:
    """Kelvin matrix ``Gamma^0(x)``; real, shape ``x.shape[:-1] + (3, 3)``."""
    flat, lead = _points(x)
    r = np.linalg.norm(flat, axis=1)
    cp = 1.0 / (medium.lam + 2 * medium.mu)
    iso = -(1.0 / medium.mu + cp) / (8 * np.pi * r)
    dev = -(1.0 / medium.mu - cp) / (8 * np.pi * r**3)
    g = iso[:, None, None] * np.eye(3) + dev[:, None, None] * np.einsum("pi,pj->pij", flat, flat)
    return g.reshape(lead + (3, 3))


def kupradze(x, k: complex, medium: ElasticMedium, method: str = "auto") -> np.ndarray:
    """Kupradze matrix ``Gamma^k(x)`` for complex ``k``.

    ``method`` selects ``"closed"`` (analytic second derivatives),
    ``"series"`` (power series in ``i k r``) or ``"auto"``.
    """
    flat, lead = _points(x)
    vals = _green_many(flat, complex(k), float(medium.lam), float(medium.mu), _METHODS[method])
    return vals.reshape(lead + (3, 3))


def kupradze_series(x, k: complex, medium: ElasticMedium, order: int) -> np.ndarray:
    """Partial sum through ``j = order`` of the small-``k`` expansion of ``Gamma^k``.

    Written term by term from the textbook form (powers of ``mu`` and
    ``lam + 2 mu``), independently of the rearranged numba series.
    """
    if not 0 <= order <= 8:
        raise ValueError("series order must be in [0, 8]")
    flat, lead = _points(x)
    lam, mu = medium.lam, medium.mu
    r = np.linalg.norm(flat, axis=1)
    xx = np.einsum("pi,pj->pij", flat, flat)
    out = np.zeros((flat.shape[0], 3, 3), dtype=complex)
    for j in range(order + 1):
        pre = 1j**j / ((j + 2) * math.factorial(j)) * complex(k) ** j
        iso = (j + 1) / mu ** ((j + 2) / 2) + 1 / (lam + 2 * mu) ** ((j + 2) / 2)
        dev = (j - 1) * (1 / mu ** ((j + 2) / 2) - 1 / (lam + 2 * mu) ** ((j + 2) / 2))
        out += -pre * iso / (4 * np.pi) * (r ** (j - 1))[:, None, None] * np.eye(3)
        out += pre * dev / (4 * np.pi) * (r ** (j - 3))[:, None, None] * xx
    return out.reshape(lead + (3, 3))


def traction_kernel(x, y, nu_x, k: complex, medium: ElasticMedium, method: str = "auto") -> np.ndarray:
    """Conormal derivative at ``x`` (normal ``nu_x``) of the columns of ``Gamma^k(x - y)``.

    Column ``j`` of the result is the traction of the displacement field
    ``Gamma^k(. - y) e_j``.
    """
    x, y, nu_x = np.broadcast_arrays(
        np.asarray(x, float), np.asarray(y, float), np.asarray(nu_x, float)
    )
    flat, lead = _points(x - y)
    n = np.ascontiguousarray(nu_x.reshape(-1, 3))
    vals = _traction_many(flat, n, complex(k), float(medium.lam), float(medium.mu), _METHODS[method])
    return vals.reshape(lead + (3, 3))


def gamma_const(medium: ElasticMedium) -> float:
    """Radiation constant ``(2 mu^{-3/2} + (lam + 2 mu)^{-3/2}) / (12 pi)``."""
    return (2 * medium.mu**-1.5 + (medium.lam + 2 * medium.mu) ** -1.5) / (12 * math.pi)


def farfield_kernel(xhat, y, k: complex, medium: ElasticMedium) -> tuple[np.ndarray, np.ndarray]:
    """Transverse and longitudinal parts of the far-field factorization of ``Gamma^k(x - y)``.

    Returns ``(T, L)`` such that, as ``|x| -> inf`` along ``xhat``,
    ``Gamma^k(x - y) ~ e^{i k_s |x|}/|x| T + e^{i k_p |x|}/|x| L``.
    The leading minus signs are included in ``T`` and ``L``.
    """
    xhat = np.asarray(xhat, dtype=float)
    y = np.asarray(y, dtype=float)
    norm = np.linalg.norm(xhat, axis=-1)
    if np.any(np.abs(norm - 1.0) > 1e-12):
        raise ValueError("far-field direction must be a unit vector")
    ks = k / math.sqrt(medium.mu)
    kp = k / math.sqrt(medium.lam + 2 * medium.mu)
    xhat, y = np.broadcast_arrays(xhat, y)
    proj = np.einsum("...i,...j->...ij", xhat, xhat)
    phase = np.einsum("...i,...i->...", xhat, y)
    trans = -(np.eye(3) - proj) / (4 * np.pi * medium.mu) * np.exp(-1j * ks * phase)[..., None, None]
    longi = -proj / (4 * np.pi * (medium.lam + 2 * medium.mu)) * np.exp(-1j * kp * phase)[..., None, None]
    return trans, longi
