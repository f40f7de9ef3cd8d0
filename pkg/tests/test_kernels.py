import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from elastores.kernels import (
    ElasticMedium,
    SingularEvaluationError,
    farfield_kernel,
    gamma_const,
    kelvin,
    kupradze,
    kupradze_series,
    traction_kernel,
)

MED = ElasticMedium(1.0, 1.0)
vec = st.tuples(*[st.floats(-3, 3, allow_subnormal=False)] * 3).filter(lambda v: np.linalg.norm(v) > 0.05)


def _fd_gradient(f, x, h):
    """Central-difference gradient: out[..., b] = d f / d x_b."""
    cols = []
    for b in range(3):
        e = np.zeros(3)
        e[b] = h
        cols.append((f(x + e) - f(x - e)) / (2 * h))
    return np.stack(cols, axis=-1)


def _fd_traction(x, y, nu, k, med, h=1e-5):
    # grad[a, j, b] = d Gamma_aj / d x_b
    grad = _fd_gradient(lambda z: kupradze(z - y, k, med), x, h)
    div = np.einsum("bjb->j", grad)
    # sym[a, j, b] = d_b G_aj + d_a G_bj
    sym = grad + np.transpose(grad, (2, 1, 0))
    return med.lam * np.outer(nu, div) + med.mu * np.einsum("ajb,b->aj", sym, nu)


# ---------------------------------------------------------------- medium


def test_medium_derived_quantities():
    m = ElasticMedium(2.0, 1.5, rho=4.0, delta=1e-4, tau=2.0)
    assert m.epsilon == pytest.approx(2.5e-5)
    k, ks, kp = m.wavenumbers(0.3)
    assert k == pytest.approx(2 * 0.3)
    assert ks == pytest.approx(0.3 / m.c_s)
    assert kp == pytest.approx(0.3 / m.c_p)


@pytest.mark.parametrize("lam,mu", [(-1.0, 1.0), (1.0, 0.0), (1.0, -1.0)])
def test_medium_convexity(lam, mu):
    with pytest.raises(ValueError, match="convexity|shear"):
        ElasticMedium(lam, mu)


# ---------------------------------------------------------------- Kelvin


def test_kelvin_value_on_axis():
    expected = -np.eye(3) / (6 * math.pi) - np.diag([1.0, 0, 0]) / (12 * math.pi)
    assert np.allclose(kelvin([1.0, 0, 0], MED), expected, rtol=0, atol=1e-16)
    assert np.allclose(np.diag(expected), [-0.0795775, -0.0530516, -0.0530516], atol=1e-7)


def test_kelvin_at_origin():
    with pytest.raises(SingularEvaluationError):
        kelvin([0.0, 0.0, 0.0], MED)
    with pytest.raises(SingularEvaluationError):
        kupradze([0.0, 0.0, 0.0], 0.3, MED)


@settings(max_examples=100, deadline=None)
@given(x=vec)
def test_kelvin_even_and_homogeneous(x):
    x = np.array(x)
    g = kelvin(x, MED)
    assert np.allclose(g, kelvin(-x, MED), rtol=1e-14, atol=0)
    assert np.allclose(kelvin(2 * x, MED), g / 2, rtol=1e-13, atol=0)
    assert np.allclose(g, g.T, rtol=1e-14, atol=0)


# ---------------------------------------------------------------- Kupradze


@settings(max_examples=200, deadline=None)
@given(x=vec, kr=st.floats(-3, 3), ki=st.floats(0, 1))
def test_kupradze_even(x, kr, ki):
    x = np.array(x)
    k = complex(kr, ki)
    assert np.allclose(kupradze(x, k, MED), kupradze(-x, k, MED), rtol=1e-13, atol=1e-16)


def test_kupradze_tends_to_kelvin():
    x = np.array([0.3, -0.7, 0.2])
    diffs = [np.abs(kupradze(x, k, MED) - kelvin(x, MED)).max() for k in (1e-2, 1e-4, 1e-6)]
    assert diffs[0] > diffs[1] > diffs[2]
    assert diffs[2] < 1e-7


def test_closed_and_series_routes_agree():
    x = np.array([0.4, 0.5, -0.3])
    for k in (0.05, 0.5, 2.0, 0.3 - 0.1j):
        a = kupradze(x, k, MED, method="closed")
        b = kupradze(x, k, MED, method="series")
        assert np.allclose(a, b, rtol=1e-12, atol=1e-15)


def _pde_residual(x0, k, med, h):
    # mu Lap u + (lam + mu) grad div u + k^2 u, columnwise, by central differences
    g0 = kupradze(x0, k, med)
    lap = np.zeros((3, 3), complex)
    graddiv = np.zeros((3, 3), complex)
    for a in range(3):
        ea = np.zeros(3)
        ea[a] = h
        lap += (kupradze(x0 + ea, k, med) - 2 * g0 + kupradze(x0 - ea, k, med)) / h**2
        for b in range(3):
            eb = np.zeros(3)
            eb[b] = h
            mixed = (kupradze(x0 + ea + eb, k, med) - kupradze(x0 + ea - eb, k, med)
                     - kupradze(x0 - ea + eb, k, med) + kupradze(x0 - ea - eb, k, med)) / (4 * h * h)
            graddiv[a] += mixed[b]
    return med.mu * lap + (med.lam + med.mu) * graddiv + k**2 * g0, np.abs(med.mu * lap).max()


@pytest.mark.parametrize("med", [MED, ElasticMedium(3.0, 0.5, rho=2.0)])
@pytest.mark.parametrize("k", [0.4, 1.3, 0.8 + 0.2j])
def test_kupradze_solves_elastodynamic_equation(med, k):
    x0 = np.array([0.6, -0.4, 0.5])
    coarse, scale = _pde_residual(x0, k, med, 4e-3)
    fine, _ = _pde_residual(x0, k, med, 2e-3)
    # truncation error is O(h^2); Richardson extrapolation removes it
    assert np.abs(fine).max() / np.abs(coarse).max() == pytest.approx(0.25, abs=0.01)
    assert np.abs((4 * fine - coarse) / 3).max() <= 1e-7 * scale


# ---------------------------------------------------------------- series


def test_series_order_zero_is_kelvin():
    x = np.array([0.2, 0.9, -0.4])
    assert np.allclose(kupradze_series(x, 0.37, MED, 0), kelvin(x, MED), rtol=1e-15, atol=0)


def test_series_first_term_is_gamma():
    x = np.array([0.2, 0.9, -0.4])
    k = 0.37
    term = kupradze_series(x, k, MED, 1) - kupradze_series(x, k, MED, 0)
    assert np.allclose(term, -1j * gamma_const(MED) * k * np.eye(3), rtol=0, atol=1e-14)


@pytest.mark.parametrize("order", [0, 1, 2, 3])
def test_series_remainder_order(order):
    x = np.array([1.0, 0.0, 0.0])
    ks = np.array([1e-1, 5e-2, 2.5e-2, 1.25e-2])
    errs = [np.abs(kupradze(x, k, MED, "closed") - kupradze_series(x, k, MED, order)).max() for k in ks]
    slope = np.polyfit(np.log(ks), np.log(errs), 1)[0]
    assert slope >= order + 0.9


def test_series_remainder_scaled_bounded():
    x = np.array([1.0, 0.0, 0.0])
    ks = 1e-1 / 2.0 ** np.arange(7)
    ratios = np.array([np.abs(kupradze(x, k, MED) - kupradze_series(x, k, MED, 3)).max() / k**4 for k in ks])
    assert ratios.max() / ratios.min() < 1.2


def test_series_order_limit():
    with pytest.raises(ValueError):
        kupradze_series([1.0, 0, 0], 0.1, MED, 9)


# ---------------------------------------------------------------- traction


@pytest.mark.parametrize("k", [0.0, 0.01, 0.7, 0.5 + 0.3j])
def test_traction_matches_finite_differences(k, rng):
    for _ in range(5):
        x, y = rng.normal(size=3), rng.normal(size=3)
        nu = rng.normal(size=3)
        nu /= np.linalg.norm(nu)
        exact = traction_kernel(x, y, nu, k, MED)
        fd = _fd_traction(x, y, nu, k, MED)
        assert np.abs(exact - fd).max() <= 1e-6 * np.abs(exact).max()


def test_static_traction_homogeneity_and_realness():
    nu = np.array([0.0, 0.6, 0.8])
    y = np.zeros(3)
    t1 = traction_kernel(np.array([1.0, 0, 0]), y, nu, 0.0, MED)
    t2 = traction_kernel(np.array([2.0, 0, 0]), y, nu, 0.0, MED)
    assert np.allclose(t2, t1 / 4, rtol=1e-14, atol=0)
    assert np.all(np.imag(t1) == 0)


def test_traction_coincident_points():
    with pytest.raises(SingularEvaluationError):
        traction_kernel(np.ones(3), np.ones(3), np.array([0, 0, 1.0]), 0.1, MED)


# ---------------------------------------------------------------- gamma


def test_gamma_value():
    mpmath.mp.dps = 30
    expected = (2 + mpmath.mpf(3) ** mpmath.mpf(-1.5)) / (12 * mpmath.pi)
    assert gamma_const(MED) == pytest.approx(float(expected), rel=1e-15)
    assert gamma_const(MED) == pytest.approx(5.8156e-2, abs=1e-6)


def test_gamma_homogeneity():
    m4 = ElasticMedium(4.0, 4.0)
    assert gamma_const(m4) == pytest.approx(gamma_const(MED) / 8, rel=1e-15)


@settings(max_examples=50, deadline=None)
@given(mu=st.floats(0.01, 100), ratio=st.floats(-0.66, 50))
def test_gamma_positive(mu, ratio):
    assert gamma_const(ElasticMedium(ratio * mu, mu)) > 0


# ---------------------------------------------------------------- far field


@settings(max_examples=50, deadline=None)
@given(d=vec, y=st.tuples(*[st.floats(-2, 2)] * 3), k=st.floats(0, 5))
def test_farfield_parts_structure(d, y, k):
    xhat = np.array(d) / np.linalg.norm(d)
    trans, longi = farfield_kernel(xhat, np.array(y), k, MED)
    assert np.abs(trans @ xhat).max() <= 1e-15
    assert np.abs(xhat @ trans).max() <= 1e-15
    proj = np.outer(xhat, xhat)
    scalar = np.trace(longi)
    assert np.allclose(longi, scalar * proj, rtol=0, atol=1e-15)


def test_farfield_dynamic_matches_kupradze():
    med = ElasticMedium(2.0, 0.7)
    xhat = np.array([0.0, 0.6, 0.8])
    y = np.array([0.3, 0.1, -0.2])
    k, r = 1.0, 1e4
    _, ks, kp = med.wavenumbers(k)
    trans, longi = farfield_kernel(xhat, y, k, med)
    approx = np.exp(1j * ks * r) / r * trans + np.exp(1j * kp * r) / r * longi
    exact = kupradze(r * xhat - y, k, med)
    assert np.abs(approx - exact).max() <= 1e-3 * np.abs(exact).max()


def test_farfield_requires_unit_direction():
    with pytest.raises(ValueError):
        farfield_kernel(np.array([1.0, 1.0, 0.0]), np.zeros(3), 0.1, MED)
