import numpy as np
import pytest

from qbmsim import gradients as gm
from qbmsim import model as qbm
from qbmsim import optimizer as opt
from qbmsim.pauli import parse_hamiltonian

SHAPE = qbm.QbmShape(1, 1)


def test_init_scale_zero_rejected():
    with pytest.raises(ValueError):
        opt.initialize(SHAPE, opt.TrainConfig(init_scale=0.0))


def test_initialize_is_deterministic():
    cfg = opt.TrainConfig(seed=42)
    a = opt.initialize(qbm.QbmShape(2, 3), cfg).to_vector()
    np.testing.assert_array_equal(a, opt.initialize(qbm.QbmShape(2, 3), cfg).to_vector())


def test_initialize_bounds_over_seeds():
    for seed in range(200):
        p = opt.initialize(qbm.QbmShape(2, 2), opt.TrainConfig(seed=seed))
        assert np.all(np.abs(p.to_vector()) <= 0.1)
        assert abs(p.d) >= 0.05


def test_initialize_phase_node():
    p = opt.initialize(SHAPE, opt.TrainConfig(node="phase"))
    assert p.phase


@pytest.mark.parametrize("kwargs", [
    dict(learning_rate=-1), dict(max_iters=-1), dict(mode="quantum"), dict(node="abs"),
    dict(mode="sampled", shots=0), dict(mode="sampled", node="phase"), dict(grad_norm_tol=-1),
])
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        opt.TrainConfig(**kwargs)


def test_step_identity_keeps_parameters():
    cfg = opt.TrainConfig()
    p = opt.initialize(SHAPE, cfg)
    new, _, g = opt.step(p, parse_hamiltonian("1 I"), SHAPE, cfg)
    np.testing.assert_allclose(new.to_vector(), p.to_vector(), atol=1e-14)
    assert g.norm() < 1e-12


def test_step_zero_learning_rate():
    cfg = opt.TrainConfig(learning_rate=0.0)
    p = opt.initialize(SHAPE, cfg)
    H = parse_hamiltonian("1 Z")
    new, energy, _ = opt.step(p, H, SHAPE, cfg)
    np.testing.assert_array_equal(new.to_vector(), p.to_vector())
    assert energy == pytest.approx(gm.model_energy(H, p))


@pytest.mark.parametrize("eta", [0.01, 0.05, 0.1])
def test_step_decreases_energy(eta):
    cfg = opt.TrainConfig(learning_rate=eta)
    H = parse_hamiltonian("1 Z")
    p = qbm.QbmParameters([0.0], [0.0], [[0.0]], [0.05], 0.08)
    new, before, _ = opt.step(p, H, SHAPE, cfg)
    assert gm.model_energy(H, new) <= before


def test_train_z():
    result = opt.train(parse_hamiltonian("1 Z"), SHAPE, opt.TrainConfig())
    assert result.energy <= -0.999
    assert [r.iter for r in result.trace] == list(range(len(result.trace)))


def test_train_minus_x():
    result = opt.train(parse_hamiltonian("-1 X"), SHAPE, opt.TrainConfig())
    assert result.energy <= -0.99


def test_train_zero_iterations():
    cfg = opt.TrainConfig(max_iters=0)
    p = opt.initialize(SHAPE, cfg)
    H = parse_hamiltonian("1 Z")
    result = opt.train(H, SHAPE, cfg)
    assert result.trace == []
    assert result.energy == pytest.approx(gm.model_energy(H, p))
    np.testing.assert_array_equal(result.params.to_vector(), p.to_vector())


def test_train_shape_mismatch():
    with pytest.raises(ValueError):
        opt.train(parse_hamiltonian("1 ZZ"), SHAPE, opt.TrainConfig())


@pytest.mark.parametrize("mode", ["exact", "sampled"])
def test_train_is_deterministic(mode):
    H = parse_hamiltonian("0.5 ZX\n-1 XI")
    cfg = opt.TrainConfig(mode=mode, max_iters=15, shots=500, seed=3)
    shape = qbm.QbmShape(2, 2, "reused")
    a = [opt.trace_record(r) for r in opt.train(H, shape, cfg).trace]
    b = [opt.trace_record(r) for r in opt.train(H, shape, cfg).trace]
    assert a == b
    assert "elapsed_ms" not in a[0]


def test_sampled_trace_reports_acceptance():
    cfg = opt.TrainConfig(mode="sampled", max_iters=3, shots=300)
    result = opt.train(parse_hamiltonian("1 Z"), SHAPE, cfg)
    assert all(0 < r.acceptance_rate <= 1 for r in result.trace)


def test_exact_energy_mostly_non_increasing():
    H = parse_hamiltonian("1 ZZ\n-0.8 XI\n-0.8 IX")
    result = opt.train(H, qbm.QbmShape(2, 2), opt.TrainConfig(max_iters=300, seed=1))
    energies = [r.energy for r in result.trace]
    steps = np.diff(energies)
    assert np.mean(steps <= 1e-12) >= 0.95


def test_phase_node_trains_in_exact_mode():
    cfg = opt.TrainConfig(node="phase", max_iters=40)
    result = opt.train(parse_hamiltonian("1 Z"), SHAPE, cfg)
    assert result.params.phase
    assert result.energy < result.trace[0].energy


def test_callback_sees_every_row():
    rows = []
    result = opt.train(parse_hamiltonian("1 Z"), SHAPE, opt.TrainConfig(max_iters=5), on_iteration=rows.append)
    assert rows == result.trace
