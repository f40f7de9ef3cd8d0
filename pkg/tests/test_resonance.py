import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from elastores import resonance as rs
from elastores.kernels import ElasticMedium

DELTAS = (1e-2, 1e-3, 1e-4, 1e-5)
finite = st.floats(-10, 10, allow_nan=False, allow_subnormal=False)


def _medium(**kw):
    base = dict(lam=1.0, mu=1.0, rho=1.0, delta=1e-2, tau=1.0)
    base.update(kw)
    return ElasticMedium(**base)


def _random_spd(rng, n=6, shift=0.5):
    a = rng.normal(size=(n, n))
    return a @ a.T + shift * np.eye(n)


def _is_mirror_closed(roots, tol):
    mirrored = -np.conj(roots)
    cost = np.abs(roots[:, None] - mirrored[None, :])
    from scipy.optimize import linear_sum_assignment

    r, c = linear_sum_assignment(cost)
    return cost[r, c].max() <= tol * np.abs(roots).max()


# ---------------------------------------------------------------- Q, C, R assembly


@pytest.mark.parametrize("name", ["cube", "sphere320", "ellipsoid"])
def test_Q_positive_definite_and_R_rank(bench, name):
    inp = bench.inputs(name)
    assert np.linalg.eigvalsh(inp.Q_sym).min() > 0
    assert inp.q_asymmetry <= 1e-2
    eig = np.linalg.eigvalsh(inp.R)
    assert eig.min() >= -1e-12 * eig.max()
    assert np.sum(eig > 1e-12 * eig.max()) <= 3


def test_Q_and_C_translation_invariant(bench):
    a, b = bench.inputs("ellipsoid"), bench.inputs("ellipsoid_shifted")
    assert np.abs(a.Q - b.Q).max() <= 1e-8 * np.abs(a.Q).max()
    assert np.abs(a.C - b.C).max() <= 1e-8 * np.abs(a.C).max()


def test_Q_self_converges_under_refinement(bench):
    qs = [bench.inputs(n).Q_sym for n in ("sphere80", "sphere320", "sphere1280")]
    d1, d2 = np.abs(qs[1] - qs[0]).max(), np.abs(qs[2] - qs[1]).max()
    assert d1 / d2 >= 1.5


def test_Q_asymmetry_decreases_under_refinement(bench):
    assert bench.inputs("sphere1280").q_asymmetry < bench.inputs("sphere320").q_asymmetry


def test_C_translation_columns_match_Q(bench):
    for name in ("cube", "ellipsoid"):
        inp = bench.inputs(name)
        vol = bench.basis(name).volume
        assert np.allclose(inp.C[:, :3], np.sqrt(vol) * inp.Q[:3, :3], rtol=1e-10, atol=1e-12)


def test_ball_rotation_columns_decay(bench):
    norms = [np.abs(bench.inputs(n).C[:, 3:]).max() / np.abs(bench.inputs(n).C).max()
             for n in ("sphere80", "sphere320", "sphere1280")]
    assert norms[0] > norms[1] > norms[2]
    assert norms[2] <= 1e-6


def test_R_zero_for_zero_C():
    assert np.all(rs.assemble_R(np.zeros((3, 6))) == 0)


@settings(max_examples=50, deadline=None)
@given(C=arrays(float, (3, 6), elements=finite), a=arrays(float, 6, elements=finite))
def test_R_quadratic_form(C, a):
    R = rs.assemble_R(C)
    ca = C @ a
    assert a @ R @ a == pytest.approx(ca @ ca, rel=1e-12, abs=1e-12 * (1 + np.abs(C).max() ** 2 * (a @ a)))
    eig = np.linalg.eigvalsh(R)
    assert np.sum(eig > 1e-12 * max(np.abs(eig).max(), 1e-300)) <= 3


def test_inputs_shape_validation(medium):
    with pytest.raises(ValueError, match="shape"):
        rs.ResonanceInputs(np.eye(5), np.zeros((3, 6)), np.zeros((6, 6)), medium)


# ---------------------------------------------------------------- spectral decomposition


def test_two_clusters_diagonalize_R():
    Q = np.diag([1.0, 1, 1, 2, 2, 2])
    rng = np.random.default_rng(1)
    rot = np.linalg.qr(rng.normal(size=(3, 3)))[0]
    block = rot @ np.diag([3.0, 2.0, 1.0]) @ rot.T
    R = np.zeros((6, 6))
    R[:3, :3] = block
    R[3:, 3:] = block + np.eye(3)
    sd = rs.spectral_decompose(Q, R)
    assert sd.clusters.tolist() == [0, 0, 0, 1, 1, 1]
    assert sd.multiplicities.tolist() == [3] * 6
    vrv = sd.vectors.T @ R @ sd.vectors
    assert np.abs(vrv - np.diag(np.diag(vrv))).max() <= 1e-12
    assert np.allclose(sorted(sd.vRv[:3]), [1, 2, 3]) and np.allclose(sorted(sd.vRv[3:]), [2, 3, 4])


def test_identity_is_one_cluster(rng):
    R = _random_spd(rng)
    sd = rs.spectral_decompose(np.eye(6), R)
    assert sd.n_clusters == 1
    assert np.allclose(sd.vRv, np.linalg.eigvalsh(R), rtol=1e-12)


def test_generic_spd_singletons(rng):
    Q = _random_spd(rng)
    sd = rs.spectral_decompose(Q)
    assert sd.n_clusters == 6
    assert np.abs(sd.vectors.T @ sd.vectors - np.eye(6)).max() <= 1e-12
    assert np.allclose(sd.eigenvalues, np.linalg.eigvalsh(Q), rtol=1e-12)
    assert np.abs(Q @ sd.vectors - sd.vectors * sd.eigenvalues).max() <= 1e-12 * sd.eigenvalues.max()


def test_non_spd_rejected():
    with pytest.raises(rs.NotPositiveDefiniteError):
        rs.spectral_decompose(np.diag([1.0, 1, 1, 1, 1, -1]))
    with pytest.raises(rs.NotPositiveDefiniteError):
        rs.spectral_decompose(np.triu(np.ones((6, 6))))


# ---------------------------------------------------------------- asymptotic formula


def test_asymptotic_plug_in():
    sd = rs.SpectralData(np.array([2.0]), np.eye(1), np.zeros(1, int), np.ones(1))
    spectrum = rs.asymptotic_resonances(sd, np.eye(1), _medium(delta=1e-4), gamma=0.05)
    assert spectrum.omega_plus[0].real == pytest.approx(1.41421e-2, rel=1e-5)
    assert spectrum.omega_plus[0].imag == pytest.approx(-2.5e-6, rel=1e-12)
    assert spectrum.omega_minus[0] == -np.conj(spectrum.omega_plus[0])


def test_asymptotic_zero_damping(rng):
    Q = _random_spd(rng)
    sd = rs.spectral_decompose(Q)
    med = _medium(delta=1e-3, tau=2.0, rho=3.0)
    spectrum = rs.asymptotic_resonances(sd, np.zeros((6, 6)), med)
    assert np.all(spectrum.omega_plus.imag == 0)
    assert np.allclose(spectrum.omega_plus.real, np.sqrt(sd.eigenvalues * 1e-3 / (3.0 * 4.0)), rtol=1e-15)
    assert spectrum.damping_vanishes.all()


def test_asymptotic_mirror_and_damping_sign(bench):
    inp = bench.inputs("sphere320")
    spectrum = rs.asymptotic_resonances(rs.spectral_decompose(inp.Q_sym, inp.R), inp.R, inp.medium)
    assert np.array_equal(spectrum.omega_minus, -np.conj(spectrum.omega_plus))
    assert np.all(spectrum.omega_plus.imag <= 0)


def test_asymptotic_scale_covariance(rng):
    Q, R = _random_spd(rng), rs.assemble_R(rng.normal(size=(3, 6)))
    sd = rs.spectral_decompose(Q, R)
    a = rs.asymptotic_resonances(sd, R, _medium(delta=1e-4)).omega_plus
    b = rs.asymptotic_resonances(sd, R, _medium(delta=4e-4)).omega_plus
    assert np.allclose(b.real, 2 * a.real, rtol=1e-15)
    assert np.allclose(b.imag, 4 * a.imag, rtol=1e-15)


def test_damping_flag_follows_R():
    Q = np.diag([1.0, 2, 3, 4, 5, 6])
    C = np.zeros((3, 6))
    C[0, 0], C[1, 2], C[2, 4] = 1.0, 2.0, 0.5
    R = rs.assemble_R(C)
    spectrum = rs.asymptotic_resonances(rs.spectral_decompose(Q, R), R, _medium())
    assert spectrum.damping_vanishes.tolist() == [False, True, False, True, False, True]


# ---------------------------------------------------------------- QEP


def test_qep_identity():
    roots = rs.qep_resonances(np.eye(6), np.zeros((6, 6)), _medium(delta=0.01))
    assert np.allclose(roots[:6], -0.1, atol=1e-14)
    assert np.allclose(roots[6:], 0.1, atol=1e-14)


def test_qep_decoupled_diagonal():
    Q = np.diag([1.0, 4.0, 1.0, 1.0, 1.0, 1.0])
    roots = rs.qep_resonances(Q, np.zeros((6, 6)), _medium(delta=0.01))
    assert np.allclose(roots[[0, -1]], [-0.2, 0.2], atol=1e-14)
    assert np.allclose(roots[1:6], -0.1, atol=1e-14)
    assert np.allclose(roots[6:11], 0.1, atol=1e-14)


def test_qep_generic_structure(rng):
    for _ in range(10):
        Q, R = _random_spd(rng), rs.assemble_R(rng.normal(size=(3, 6)))
        med = _medium(delta=10 ** rng.uniform(-4, -1), tau=rng.uniform(0.5, 2), rho=rng.uniform(0.5, 2))
        inp = rs.ResonanceInputs(Q, np.zeros((3, 6)), R, med)
        roots = rs.qep_resonances(Q, R, med)
        assert len(roots) == 12
        assert _is_mirror_closed(roots, 1e-10)
        assert roots.imag.max() <= 1e-12 * np.abs(roots).max()
        for w in roots:
            assert rs.qep_residual(w, inp, med.delta) <= 1e-10
        keys = list(zip(roots.real, roots.imag))
        assert keys == sorted(keys)


def test_qep_size_mismatch():
    with pytest.raises(ValueError):
        rs.qep_resonances(np.eye(6), np.eye(5), _medium())


def test_qep_on_assembled_matrices(bench):
    inp = bench.inputs("ellipsoid")
    roots = rs.qep_resonances(inp.Q_sym, inp.R, inp.medium)
    assert _is_mirror_closed(roots, 1e-10)
    assert roots.imag.max() <= 1e-12 * np.abs(roots).max()


# ---------------------------------------------------------------- matching and convergence


def test_match_roots_size_mismatch():
    with pytest.raises(ValueError, match="size"):
        rs.match_roots(np.zeros(3), np.zeros(4))


def test_match_roots_permutation(rng):
    ref = np.array([1.0, 2.0, 3.0 - 1j, -1.0])
    perm = rng.permutation(4)
    cand = np.empty_like(ref)
    cand[perm] = ref + 1e-3
    assert rs.match_roots(ref, cand).tolist() == perm.tolist()


def test_match_roots_ambiguous():
    ref = np.array([1.0, 1.1])
    cand = np.array([1.05, 1.2])
    with pytest.raises(rs.RootMatchingError):
        rs.match_roots(ref, cand)
    perm, amb = rs.match_roots(ref, cand, strict=False)
    assert amb.any()


def test_compare_spectra_exact_without_damping(rng):
    Q = _random_spd(rng)
    inp = rs.ResonanceInputs(Q, np.zeros((3, 6)), np.zeros((6, 6)), _medium())
    rep = rs.compare_spectra(inp, DELTAS)
    assert rep.converged.all()
    assert rep.errors.max() <= 1e-12


def test_compare_spectra_on_sphere(bench):
    rep = rs.compare_spectra(bench.inputs("sphere320"), DELTAS)
    assert rep.monotone.all()
    assert rep.min_order >= 1.35
    assert not rep.ambiguous.any()


def test_compare_spectra_needs_two_deltas(bench):
    with pytest.raises(ValueError):
        rs.compare_spectra(bench.inputs("cube"), [1e-3])
