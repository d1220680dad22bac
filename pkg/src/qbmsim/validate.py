"""Oracle suites run by ``qbmsim validate``.

Each suite draws random instances, compares an implementation path against
an independent reference and reports the worst deviation.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from . import decomposition as dec
from . import gradients as grad_mod
from . import model as qbm
from .pauli import PauliHamiltonian

log = logging.getLogger(__name__)


@dataclass
class SuiteResult:
    name: str
    passed: bool
    trials: int
    worst: float
    tolerance: float

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.name}: {self.trials} trials, worst {self.worst:.3e} (tol {self.tolerance:.0e})"


def random_params(rng, n, m, scale=1.0, d_offset=0.0) -> qbm.QbmParameters:
    return qbm.QbmParameters(rng.uniform(-scale, scale, n), rng.uniform(-scale, scale, m),
                             rng.uniform(-scale, scale, (n, m)), rng.uniform(-scale, scale, n),
                             rng.uniform(-scale, scale) + d_offset)


def random_hamiltonian(rng, n, max_terms=4) -> PauliHamiltonian:
    terms = [(rng.uniform(-1, 1), "".join(rng.choice(list("IXYZ"), n)))
             for _ in range(rng.integers(1, max_terms + 1))]
    return PauliHamiltonian.from_terms(terms, n)


def circuit_vs_oracle(seed=0, trials=20, shapes=((1, 1), (2, 2)), tol=1e-10) -> SuiteResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        for n, m in shapes:
            params = random_params(rng, n, m)
            oracle = qbm.exact_distribution(params).weights
            for layout in qbm.Layout:
                got = qbm.circuit_distribution(qbm.QbmShape(n, m, layout), params).weights
                worst = max(worst, float(np.abs(got - oracle).max()))
    return SuiteResult("circuit-vs-distribution", worst <= tol, trials, worst, tol)


def gradient_vs_fd(seed=0, trials=20, rtol=1e-5, atol=1e-7, eps=1e-5) -> SuiteResult:
    """Worst deviation in units of the allowed error max(rtol*|fd|, atol)."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        params = random_params(rng, 2, 2, d_offset=0.3)
        H = random_hamiltonian(rng, 2)
        _, analytic = grad_mod.model_gradient(H, params)
        fd = grad_mod.finite_difference_gradient(H, params, eps=eps).to_vector()
        err = np.abs(analytic.to_vector() - fd) / np.maximum(rtol * np.abs(fd), atol)
        worst = max(worst, float(err.max()))
    return SuiteResult("gradient-vs-finite-difference", worst <= 1.0, trials, worst, 1.0)


def decomposition_equivalence(seed=0, trials=20, tol=1e-12) -> SuiteResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    ok = dec.count_gates(dec.decompose_ccry(0.1), 3)
    counts_ok = (ok.two_qubit, ok.one_qubit_rotations) == (8, 6)
    for theta in rng.uniform(-2 * np.pi, 2 * np.pi, trials):
        for cs in ((0, 0), (0, 1), (1, 0), (1, 1)):
            got = dec.sequence_unitary(dec.decompose_ccry(theta, cs), 3)
            want = dec.controlled_unitary(dec._rotation("y", theta), (0, 1), cs, 2, 3)
            k = np.unravel_index(np.argmax(np.abs(want)), want.shape)
            phase = want[k] / got[k]
            worst = max(worst, float(np.abs(got * phase - want).max()))
    return SuiteResult("decomposition-equivalence", counts_ok and worst <= tol, trials, worst, tol)


SUITES = (circuit_vs_oracle, gradient_vs_fd, decomposition_equivalence)


def run_all(seed=0, trials=20) -> list[SuiteResult]:
    if trials == 0:
        log.warning("validate called with 0 trials; suites pass vacuously")
    return [suite(seed=seed, trials=trials) for suite in SUITES]
