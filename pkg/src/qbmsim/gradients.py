"""Energy and its parameter gradient from local energies and log-amplitude derivatives.

For real amplitudes the gradient of the Rayleigh quotient takes the
covariance form

    dE/dp = 2 <E_loc D_p> - 2 <E_loc> <D_p>

with expectations under |a(v)|^2. In sampled mode the shots follow
p(v) = phi(v)^2, so each shot is reweighted by s(v)^2 to recover |a(v)|^2.
The regulator k is held fixed: derivatives are with respect to the raw
parameters of the scaled model that is actually prepared.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from . import model as qbm
from .pauli import PauliHamiltonian, apply_hamiltonian
from .wavefunction import (DegenerateWavefunctionError, TrialWaveFunction, VisibleDistribution,
                           assemble, spins)

log = logging.getLogger(__name__)

SIGN_FLOOR = 1e-8
FLAG_WARN_FRACTION = 0.01
DEFAULT_EPS = 1e-5


@dataclass
class GradientVector:
    """Same layout as :class:`~qbmsim.model.QbmParameters`."""

    da: np.ndarray
    db: np.ndarray
    dw: np.ndarray
    dc: np.ndarray
    dd: float
    dgamma: np.ndarray | None = None
    ddelta: float | None = None
    flagged: int = 0

    @classmethod
    def from_vector(cls, like: qbm.QbmParameters, vec, flagged: int = 0) -> "GradientVector":
        p = like.from_vector(vec)
        return cls(p.a, p.b, p.w, p.c, p.d, p.gamma, p.delta, flagged)

    def to_vector(self) -> np.ndarray:
        parts = [self.da, self.db, np.ravel(self.dw), self.dc, [self.dd]]
        if self.dgamma is not None:
            parts += [self.dgamma, [self.ddelta]]
        return np.concatenate(parts).astype(np.float64)

    def norm(self) -> float:
        return float(np.linalg.norm(self.to_vector()))


def _model_wavefunction(params, reg, samples):
    dist = samples if samples is not None else qbm.exact_distribution(params, reg)
    return assemble(dist, params.c, params.d, params.gamma, params.delta)


def local_energies(psi: TrialWaveFunction, H: PauliHamiltonian) -> tuple[np.ndarray, np.ndarray]:
    """(E_loc(v) for all v, mask of configurations where a(v) != 0)."""
    if psi.n != H.n_qubits:
        raise ValueError(f"wave function has {psi.n} qubits, Hamiltonian {H.n_qubits}")
    amps = np.asarray(psi.amplitudes)
    h_psi = apply_hamiltonian(H, amps)
    valid = amps != 0
    e_loc = np.zeros(amps.shape[0], dtype=np.complex128)
    e_loc[valid] = h_psi[valid] / amps[valid]
    return e_loc, valid


def local_energy(v: int, psi: TrialWaveFunction, H: PauliHamiltonian) -> complex:
    """<v|H|psi> / a(v) for one configuration, computed matrix-free."""
    e_loc, valid = local_energies(psi, H)
    if not valid[v]:
        raise DegenerateWavefunctionError(f"a(v) = 0 at configuration {v}")
    return complex(e_loc[v])


def _sample_weights(psi: TrialWaveFunction, samples: VisibleDistribution | None):
    """Weights proportional to |a(v)|^2 and the clamped-node flag mask."""
    node = psi.node if psi.node is not None else np.ones(1 << psi.n)
    flagged = np.abs(node) < SIGN_FLOOR
    if samples is None:
        weights = np.abs(psi.amplitudes) ** 2
    else:
        weights = samples.weights * np.abs(node) ** 2
    weights = np.where(flagged, 0.0, weights)
    return weights, flagged


def expectation(psi: TrialWaveFunction, H: PauliHamiltonian,
                samples: VisibleDistribution | None = None) -> float:
    """<H>. Exact: <psi|H|psi>/<psi|psi>. Sampled: s^2-reweighted mean of E_loc over shots."""
    amps = np.asarray(psi.amplitudes, dtype=np.complex128)
    if samples is None:
        norm2 = float(np.vdot(amps, amps).real)
        if norm2 == 0.0:
            raise DegenerateWavefunctionError("zero wave function")
        return float(np.vdot(amps, apply_hamiltonian(H, amps)).real / norm2)
    e_loc, valid = local_energies(psi, H)
    weights, _ = _sample_weights(psi, samples)
    weights = np.where(valid, weights, 0.0)
    total = weights.sum()
    if total == 0.0:
        raise DegenerateWavefunctionError("no usable samples")
    return float((weights @ e_loc).real / total)


def log_derivative_matrix(params: qbm.QbmParameters, reg: qbm.Regulator | None = None
                          ) -> tuple[np.ndarray, np.ndarray]:
    """D_p(v) for every configuration (rows) and parameter (columns), plus the flag mask.

    Sign-node model only. The node's 1/s(v) is evaluated with |s| clamped
    to ``SIGN_FLOOR``; clamped rows are reported in the mask.
    """
    if params.phase:
        raise ValueError("analytic log-derivatives exist only for the real sign node")
    k = (reg or qbm.Regulator()).k
    eff = (reg or qbm.Regulator()).scale(params)
    sv = spins(params.n_visible).astype(np.float64)
    g = eff.b[None, :] + sv @ eff.w  # effective hidden field per configuration
    th = np.tanh(g)
    s = np.tanh(sv @ params.c + params.d)
    flagged = np.abs(s) < SIGN_FLOOR
    s_c = np.where(flagged, np.where(s < 0, -SIGN_FLOOR, SIGN_FLOOR), s)
    node = 1.0 / s_c - s_c
    cols = [
        sv / (2 * k),
        th / (2 * k),
        (sv[:, :, None] * th[:, None, :]).reshape(sv.shape[0], -1) / (2 * k),
        sv * node[:, None],
        node[:, None],
    ]
    return np.hstack(cols), flagged


def log_derivatives(v, params: qbm.QbmParameters, reg: qbm.Regulator | None = None) -> GradientVector:
    """D_p for a single configuration ``v`` (integer index or bit sequence)."""
    if not isinstance(v, (int, np.integer)):
        v = int(sum(int(b) << i for i, b in enumerate(v)))
    mat, flagged = log_derivative_matrix(params, reg)
    return GradientVector.from_vector(params, mat[v], int(flagged[v]))


def covariance_gradient(weights, e_loc, dlog) -> np.ndarray:
    """2 Re[<E_loc D_p> - <E_loc><D_p>] under normalized ``weights``."""
    weights = np.asarray(weights, dtype=np.float64)
    prob = weights / weights.sum()
    e_mean = prob @ e_loc
    ed = (prob * e_loc) @ dlog
    d_mean = prob @ dlog
    return 2.0 * np.real(ed - e_mean * d_mean)


def gradient(psi: TrialWaveFunction, H: PauliHamiltonian, params: qbm.QbmParameters,
             reg: qbm.Regulator | None = None, samples: VisibleDistribution | None = None
             ) -> GradientVector:
    """Analytic gradient for the sign-node model (exact or sampled)."""
    if params.phase:
        raise ValueError("phase-node gradients are only available by finite differences")
    e_loc, valid = local_energies(psi, H)
    dlog, flagged = log_derivative_matrix(params, reg)
    weights, _ = _sample_weights(psi, samples)
    weights = np.where(valid & ~flagged, weights, 0.0)
    if weights.sum() == 0.0:
        raise DegenerateWavefunctionError("no usable configurations for the gradient")
    if samples is None:
        n_flagged, denom = int(flagged.sum()), flagged.size
    else:
        n_flagged, denom = int(samples.weights[flagged].sum()), samples.weights.sum()
    if n_flagged and n_flagged / denom > FLAG_WARN_FRACTION:
        log.warning("%d of %d samples hit the sign-node clamp", n_flagged, int(denom))
    keep = weights > 0
    grad = covariance_gradient(weights[keep], e_loc[keep], dlog[keep])
    return GradientVector.from_vector(params, grad, n_flagged)


def model_energy(H: PauliHamiltonian, params: qbm.QbmParameters,
                 reg: qbm.Regulator | None = None) -> float:
    """Exact-mode <H> of the QBM wave function."""
    return expectation(_model_wavefunction(params, reg, None), H)


def model_gradient(H: PauliHamiltonian, params: qbm.QbmParameters,
                   reg: qbm.Regulator | None = None) -> tuple[float, GradientVector]:
    """Exact-mode energy and gradient; phase-node models fall back to finite differences."""
    psi = _model_wavefunction(params, reg, None)
    energy = expectation(psi, H)
    if params.phase:
        return energy, finite_difference_gradient(H, params, reg)
    return energy, gradient(psi, H, params, reg)


def finite_difference_gradient(H: PauliHamiltonian, params: qbm.QbmParameters,
                               reg: qbm.Regulator | None = None, eps: float = DEFAULT_EPS
                               ) -> GradientVector:
    """Central differences of the exact-mode energy, one parameter at a time."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    base = params.to_vector()
    grad = np.empty_like(base)
    for i in range(base.size):
        step = np.zeros_like(base)
        step[i] = eps
        up = model_energy(H, params.from_vector(base + step), reg)
        down = model_energy(H, params.from_vector(base - step), reg)
        grad[i] = (up - down) / (2 * eps)
    return GradientVector.from_vector(params, grad)
