import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qbmsim import gradients as gm
from qbmsim import model as qbm
from qbmsim.pauli import PauliHamiltonian, dense_matrix, parse_hamiltonian
from qbmsim.validate import random_hamiltonian
from qbmsim.wavefunction import VisibleDistribution, assemble, from_amplitudes, spins

PLUS = from_amplitudes(np.array([1.0, 1.0]))


def random_params(rng, n=2, m=2, scale=1.0):
    return qbm.QbmParameters(rng.uniform(-scale, scale, n), rng.uniform(-scale, scale, m),
                             rng.uniform(-scale, scale, (n, m)), rng.uniform(-scale, scale, n),
                             rng.uniform(0.3, 1.0))


def unnormalized_amplitude(params, v, reg=None):
    """s(v) * sqrt(sum_h exp(E(v, h))) without the partition function."""
    e = qbm.joint_log_weights(params, reg)[v]
    s = np.tanh(spins(params.n_visible)[v] @ params.c + params.d)
    return s * np.sqrt(np.exp(e).sum())


def test_local_energy_x_on_plus():
    assert gm.local_energy(0, PLUS, parse_hamiltonian("1 X")) == pytest.approx(1)


def test_local_energy_matches_dense():
    H = parse_hamiltonian("2.0 XIZ\n-3.0 IYY")
    rng = np.random.default_rng(0)
    psi = from_amplitudes(rng.normal(size=8))
    e_loc, valid = gm.local_energies(psi, H)
    assert valid.all()
    np.testing.assert_allclose(e_loc, (dense_matrix(H) @ psi.amplitudes) / psi.amplitudes, atol=1e-12)


def test_local_energy_at_node_zero():
    psi = from_amplitudes(np.array([1.0, 0.0]))
    with pytest.raises(gm.DegenerateWavefunctionError):
        gm.local_energy(1, psi, parse_hamiltonian("1 Z"))


@pytest.mark.parametrize("text, want", [("1 I", 1.0), ("1 Z", 0.0), ("-1 X", -1.0)])
def test_expectation_examples(text, want):
    assert gm.expectation(PLUS, parse_hamiltonian(text)) == pytest.approx(want, abs=1e-15)


def test_sampled_expectation_reweights_by_node():
    # counts follow p(v); the s^2 reweighting recovers |a|^2
    dist = VisibleDistribution([600, 400], 1, "sampled")
    psi = assemble(dist, [0.4], 0.2)
    exact = gm.expectation(psi, parse_hamiltonian("1 Z"))
    assert gm.expectation(psi, parse_hamiltonian("1 Z"), dist) == pytest.approx(exact, abs=1e-12)


def test_log_derivatives_match_finite_differences():
    rng = np.random.default_rng(1)
    eps = 1e-6
    for _ in range(10):
        p = random_params(rng)
        reg = qbm.Regulator(1.7)
        base = p.to_vector()
        mat, _ = gm.log_derivative_matrix(p, reg)
        for v in range(4):
            a0 = unnormalized_amplitude(p, v, reg)
            for i in range(base.size):
                step = np.zeros_like(base)
                step[i] = eps
                up = unnormalized_amplitude(p.from_vector(base + step), v, reg)
                down = unnormalized_amplitude(p.from_vector(base - step), v, reg)
                assert mat[v, i] == pytest.approx((up - down) / (2 * eps * a0), abs=1e-6)


def test_log_derivatives_single_configuration():
    p = random_params(np.random.default_rng(2))
    mat, _ = gm.log_derivative_matrix(p)
    np.testing.assert_array_equal(gm.log_derivatives([1, 0], p).to_vector(), mat[1])
    np.testing.assert_array_equal(gm.log_derivatives(1, p).to_vector(), mat[1])


def test_sign_clamp_flags():
    p = qbm.QbmParameters([0.1], [0.2], [[0.3]], [0.0], 0.0)
    _, flagged = gm.log_derivative_matrix(p)
    assert flagged.all()


def test_identity_gives_zero_gradient():
    p = random_params(np.random.default_rng(3))
    _, g = gm.model_gradient(parse_hamiltonian("1 II"), p)
    assert g.norm() < 1e-12


def test_zero_hamiltonian_fd_is_zero():
    p = random_params(np.random.default_rng(4))
    H = PauliHamiltonian.from_terms([(0.0, "ZZ")], 2)
    assert gm.finite_difference_gradient(H, p).norm() == 0.0


def test_exact_ground_state_has_vanishing_gradient():
    # zero RBM parameters give a uniform p(v); a saturated node makes psi = |+>
    p = qbm.QbmParameters([0.0], [0.0], [[0.0]], [0.0], 12.0)
    energy, g = gm.model_gradient(parse_hamiltonian("-1 X"), p)
    assert energy == pytest.approx(-1, abs=1e-12)
    assert g.norm() < 1e-6


def test_gradient_matches_fd_on_random_instances():
    rng = np.random.default_rng(5)
    for _ in range(10):
        p = random_params(rng)
        H = random_hamiltonian(rng, 2)
        _, g = gm.model_gradient(H, p, qbm.Regulator(2.0))
        fd = gm.finite_difference_gradient(H, p, qbm.Regulator(2.0)).to_vector()
        err = np.abs(g.to_vector() - fd)
        assert np.all(err <= np.maximum(1e-5 * np.abs(fd), 1e-7))


def test_richardson_convergence():
    p = random_params(np.random.default_rng(6), scale=1.5)
    H = parse_hamiltonian("0.7 ZX\n-1.1 XI\n0.4 YY")
    _, g = gm.model_gradient(H, p)
    errors = [np.abs(gm.finite_difference_gradient(H, p, eps=e).to_vector() - g.to_vector()).max()
              for e in (2e-2, 1e-2)]
    assert 3.0 < errors[0] / errors[1] < 5.0


def test_gradient_is_a_descent_direction():
    rng = np.random.default_rng(7)
    for _ in range(10):
        p = random_params(rng)
        H = random_hamiltonian(rng, 2)
        e0, g = gm.model_gradient(H, p)
        if g.norm() < 1e-8:
            continue
        stepped = p.from_vector(p.to_vector() - 1e-4 * g.to_vector())
        assert gm.model_energy(H, stepped) < e0


def test_sampled_gradient_approaches_exact():
    rng = np.random.default_rng(8)
    p = random_params(rng)
    H = parse_hamiltonian("1 ZX\n-0.5 XX")
    _, exact = gm.model_gradient(H, p)
    run = qbm.sample_visible(qbm.QbmShape(2, 2, "reused"), p, seed=1, accepted_target=200_000)
    psi = assemble(run.distribution, p.c, p.d)
    sampled = gm.gradient(psi, H, p, samples=run.distribution)
    assert np.abs(sampled.to_vector() - exact.to_vector()).max() < 0.02


def test_phase_node_gradient_uses_fd():
    p = qbm.QbmParameters([0.1], [0.2], [[0.3]], [0.4], 0.5, [0.2], 0.1)
    H = parse_hamiltonian("1 X")
    energy, g = gm.model_gradient(H, p)
    assert g.dgamma is not None and g.to_vector().size == p.to_vector().size
    with pytest.raises(ValueError):
        gm.log_derivative_matrix(p)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(-50, 50))
def test_covariance_shift_invariance(seed, shift):
    rng = np.random.default_rng(seed)
    weights = rng.uniform(0, 1, 8)
    e_loc = rng.normal(size=8) + 1j * rng.normal(size=8)
    dlog = rng.normal(size=(8, 5))
    base = gm.covariance_gradient(weights, e_loc, dlog)
    shifted = gm.covariance_gradient(weights, e_loc, dlog + shift * rng.normal(size=5))
    np.testing.assert_allclose(shifted, base, atol=1e-12 * max(1.0, abs(shift)))


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_gradient_is_finite(seed):
    rng = np.random.default_rng(seed)
    p = random_params(rng, scale=3.0)
    _, g = gm.model_gradient(random_hamiltonian(rng, 2), p)
    assert np.all(np.isfinite(g.to_vector()))
    assert g.to_vector().shape == p.to_vector().shape
