"""Plain gradient descent with a constant learning rate over QBM parameters."""

from __future__ import annotations

import logging
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import gradients as grad_mod
from . import model as qbm
from .pauli import PauliHamiltonian
from .wavefunction import TrialWaveFunction, assemble

log = logging.getLogger(__name__)

PATIENCE = 25


@dataclass
class TrainConfig:
    learning_rate: float = 0.05
    max_iters: int = 2000
    grad_norm_tol: float = 1e-6
    energy_change_tol: float = 1e-10
    seed: int = 0
    init_scale: float = 0.1
    mode: str = "exact"
    shots: int = 1000
    regulator: str | float = "off"
    node: str = "sign"

    def __post_init__(self):
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be non-negative")
        if self.max_iters < 0:
            raise ValueError("max_iters must be non-negative")
        if self.grad_norm_tol < 0 or self.energy_change_tol < 0:
            raise ValueError("tolerances must be non-negative")
        if self.mode not in ("exact", "sampled"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.node not in ("sign", "phase"):
            raise ValueError(f"unknown node {self.node!r}")
        if self.mode == "sampled" and self.shots < 1:
            raise ValueError("sampled mode needs shots >= 1")
        if self.mode == "sampled" and self.node == "phase":
            raise ValueError("the phase node is only supported in exact mode")


@dataclass
class TraceRow:
    iter: int
    energy: float
    grad_norm: float
    acceptance_rate: float | None
    flagged_samples: int
    elapsed_ms: float


@dataclass
class TrainResult:
    params: qbm.QbmParameters
    trace: list[TraceRow]
    energy: float
    wavefunction: TrialWaveFunction
    stop_reason: str = ""
    final_acceptance: float | None = None
    extra: dict = field(default_factory=dict)


def initialize(shape: qbm.QbmShape, config: TrainConfig) -> qbm.QbmParameters:
    """Uniform draws in [-s, s]; d is drawn from +-[s/2, s] so the node starts nonzero."""
    s = config.init_scale
    if not s > 0:
        raise ValueError("init_scale must be positive (d would be pinned at 0)")
    n, m = shape.n_visible, shape.n_hidden
    rng = np.random.default_rng(config.seed)
    a = rng.uniform(-s, s, n)
    b = rng.uniform(-s, s, m)
    w = rng.uniform(-s, s, (n, m))
    c = rng.uniform(-s, s, n)
    d = rng.choice([-1.0, 1.0]) * rng.uniform(s / 2, s)
    if config.node == "phase":
        return qbm.QbmParameters(a, b, w, c, d, rng.uniform(-s, s, n), rng.uniform(-s, s))
    return qbm.QbmParameters(a, b, w, c, d)


@dataclass
class Evaluation:
    energy: float
    grad: grad_mod.GradientVector
    wavefunction: TrialWaveFunction
    acceptance_rate: float | None = None


def evaluate(params: qbm.QbmParameters, H: PauliHamiltonian, shape: qbm.QbmShape,
             config: TrainConfig, reg: qbm.Regulator, iteration: int = 0) -> Evaluation:
    """Energy, gradient and wave function at ``params``.

    Sampled mode draws a fresh sample from the stream (seed, iteration).
    """
    if config.mode == "exact":
        psi = assemble(qbm.exact_distribution(params, reg), params.c, params.d,
                       params.gamma, params.delta)
        energy = grad_mod.expectation(psi, H)
        if params.phase:
            g = grad_mod.finite_difference_gradient(H, params, reg)
        else:
            g = grad_mod.gradient(psi, H, params, reg)
        return Evaluation(energy, g, psi)
    run = qbm.sample_visible(shape, params, reg, shots=config.shots, seed=[config.seed, iteration])
    psi = assemble(run.distribution, params.c, params.d)
    energy = grad_mod.expectation(psi, H, run.distribution)
    g = grad_mod.gradient(psi, H, params, reg, run.distribution)
    return Evaluation(energy, g, psi, run.acceptance_rate)


def step(params: qbm.QbmParameters, H: PauliHamiltonian, shape: qbm.QbmShape, config: TrainConfig,
         reg: qbm.Regulator | None = None, iteration: int = 0):
    """One update p <- p - eta * dE/dp. Returns (new params, energy at old params, gradient)."""
    reg = reg or qbm.regulator_for(params, config.regulator)
    ev = evaluate(params, H, shape, config, reg, iteration)
    new = params.from_vector(params.to_vector() - config.learning_rate * ev.grad.to_vector())
    return new, ev.energy, ev.grad


def train(H: PauliHamiltonian, shape: qbm.QbmShape, config: TrainConfig,
          params: qbm.QbmParameters | None = None, on_iteration=None) -> TrainResult:
    """Iterate :func:`step` until the gradient is small, the energy stalls for
    ``PATIENCE`` iterations, or ``max_iters`` updates have been made."""
    if H.n_qubits != shape.n_visible:
        raise ValueError(f"Hamiltonian acts on {H.n_qubits} qubits, QBM has {shape.n_visible} visible")
    params = params if params is not None else initialize(shape, config)
    trace: list[TraceRow] = []
    t0 = time.perf_counter()
    prev = None
    calm = 0
    reason = "max_iters"
    for it in range(config.max_iters):
        reg = qbm.regulator_for(params, config.regulator)
        ev = evaluate(params, H, shape, config, reg, it)
        gnorm = ev.grad.norm()
        row = TraceRow(it, ev.energy, gnorm, ev.acceptance_rate, ev.grad.flagged,
                       (time.perf_counter() - t0) * 1e3)
        trace.append(row)
        if on_iteration is not None:
            on_iteration(row)
        if gnorm <= config.grad_norm_tol:
            reason = "grad_norm"
            break
        calm = calm + 1 if prev is not None and abs(ev.energy - prev) <= config.energy_change_tol else 0
        prev = ev.energy
        if calm >= PATIENCE:
            reason = "energy_change"
            break
        params = params.from_vector(params.to_vector() - config.learning_rate * ev.grad.to_vector())
    reg = qbm.regulator_for(params, config.regulator)
    final = evaluate(params, H, shape, config, reg, config.max_iters)
    log.info("training stopped (%s) after %d iterations, energy %.12g", reason, len(trace), final.energy)
    return TrainResult(params, trace, final.energy, final.wavefunction, reason, final.acceptance_rate)


def trace_record(row: TraceRow) -> dict:
    """Deterministic part of a trace row (wall time excluded)."""
    out = asdict(row)
    out.pop("elapsed_ms")
    return out
