"""Trial wave functions built from a visible-layer distribution and a sign node.

A visible configuration is an integer ``v`` whose bit ``i`` is visible qubit
``i``; bit 0 corresponds to spin +1 and bit 1 to spin -1.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

NORM_TOL = 1e-10
POLE_TOL = 1e-14


class DegenerateWavefunctionError(RuntimeError):
    """Every amplitude vanished, or a node sits on a pole."""


def spins(n: int) -> np.ndarray:
    """(2**n, n) array of +-1 spins; row v, column i is the spin of bit i of v."""
    idx = np.arange(1 << n)[:, None]
    return 1 - 2 * ((idx >> np.arange(n)[None, :]) & 1)


def bitstring(v: int, n: int) -> str:
    return "".join(str((v >> i) & 1) for i in range(n))


def parse_bitstring(text: str) -> int:
    if not text or set(text) - {"0", "1"}:
        raise ValueError(f"not a bitstring: {text!r}")
    return sum(int(ch) << i for i, ch in enumerate(text))


def _as_spins(v) -> np.ndarray:
    """Accept bits (0/1 sequence) and return the +-1 spin vector."""
    bits = np.asarray(v, dtype=np.int64)
    if np.any((bits != 0) & (bits != 1)):
        raise ValueError("configuration must consist of bits 0/1")
    return 1 - 2 * bits


@dataclass
class VisibleDistribution:
    """Probabilities (``kind="exact"``) or shot counts (``kind="sampled"``) over 2**n states."""

    weights: np.ndarray
    n: int
    kind: str = "exact"
    total_accepted: int = 0

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if self.weights.shape != (1 << self.n,):
            raise ValueError(f"expected {1 << self.n} weights, got {self.weights.shape}")
        if self.kind not in ("exact", "sampled"):
            raise ValueError(f"unknown distribution kind {self.kind!r}")
        if np.any(self.weights < 0) or not np.all(np.isfinite(self.weights)):
            raise ValueError("weights must be finite and non-negative")
        if self.kind == "sampled" and not self.total_accepted:
            self.total_accepted = int(round(self.weights.sum()))

    def probabilities(self) -> np.ndarray:
        total = self.weights.sum()
        if total <= 0:
            raise DegenerateWavefunctionError("empty distribution")
        return self.weights / total

    def as_dict(self) -> dict[str, float]:
        return {bitstring(v, self.n): float(w) for v, w in enumerate(self.weights) if w > 0}

    def total_variation(self, other: "VisibleDistribution") -> float:
        return 0.5 * float(np.abs(self.probabilities() - other.probabilities()).sum())


@dataclass
class TrialWaveFunction:
    """Amplitudes a(v) = s(v) * phi(v) over all 2**n visible states.

    ``node`` holds s(v) and ``phi`` the magnitudes sqrt(p(v)) used to build
    the amplitudes, both before normalization.
    """

    amplitudes: np.ndarray
    n: int
    normalized: bool = False
    node: np.ndarray | None = None
    phi: np.ndarray | None = None

    @property
    def is_real(self) -> bool:
        return not np.iscomplexobj(self.amplitudes)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def to_text(self) -> str:
        amps = np.asarray(self.amplitudes, dtype=np.complex128)
        return "".join(f"{bitstring(v, self.n)} {float(a.real)!r} {float(a.imag)!r}\n"
                       for v, a in enumerate(amps))


def sign_node(v, c, d) -> float:
    """tanh(sum_i c_i v_i + d) with v_i the spin of bit i."""
    return float(np.tanh(np.dot(np.asarray(c, dtype=float), _as_spins(v)) + d))


def sign_values(n: int, c, d) -> np.ndarray:
    """Sign node for every visible configuration."""
    return np.tanh(spins(n) @ np.asarray(c, dtype=float) + d)


def _complex_tanh(z):
    z = np.asarray(z, dtype=np.complex128)
    if np.any(np.abs(np.cosh(z)) < POLE_TOL):
        raise DegenerateWavefunctionError("phase node argument at a pole of tanh")
    return np.tanh(z)


def phase_node(v, c, gamma, d, delta) -> complex:
    """tanh(sum_k (c_k + i gamma_k) v_k + d + i delta)."""
    coeff = np.asarray(c, dtype=float) + 1j * np.asarray(gamma, dtype=float)
    return complex(_complex_tanh(np.dot(coeff, _as_spins(v)) + d + 1j * delta))


def phase_values(n: int, c, gamma, d, delta) -> np.ndarray:
    coeff = np.asarray(c, dtype=float) + 1j * np.asarray(gamma, dtype=float)
    return _complex_tanh(spins(n) @ coeff + d + 1j * delta)


def node_values(n: int, c, d, gamma=None, delta=None) -> np.ndarray:
    if gamma is None:
        return sign_values(n, c, d)
    return phase_values(n, c, gamma, d, delta)


def assemble(dist: VisibleDistribution, c, d, gamma=None, delta=None) -> TrialWaveFunction:
    """a(v) = s(v) sqrt(p(v)), then L2-normalized.

    Sampled counts are turned into frequencies; unseen states get amplitude 0.
    Passing ``gamma``/``delta`` switches to the complex phase node.
    """
    if not np.any(dist.weights > 0):
        raise DegenerateWavefunctionError("distribution has no support")
    phi = np.sqrt(dist.probabilities())
    node = node_values(dist.n, c, d, gamma, delta)
    amps = node * phi
    # rescale first so tiny node values do not underflow in the norm
    top = np.abs(amps).max()
    if top == 0.0 or not np.isfinite(top):
        raise DegenerateWavefunctionError("all amplitudes vanish (sign node is zero on the support)")
    amps = amps / top
    return TrialWaveFunction(amps / np.linalg.norm(amps), dist.n, True, node, phi)


def from_amplitudes(amps, n: int | None = None) -> TrialWaveFunction:
    amps = np.asarray(amps)
    n = n if n is not None else amps.shape[0].bit_length() - 1
    norm = np.linalg.norm(amps)
    if norm == 0.0:
        raise DegenerateWavefunctionError("zero vector")
    return TrialWaveFunction(amps / norm, n, True)


def parse_wavefunction(text: str) -> TrialWaveFunction:
    """Inverse of :meth:`TrialWaveFunction.to_text`."""
    rows = [line.split() for line in text.splitlines() if line.strip()]
    n = len(rows[0][0])
    amps = np.zeros(1 << n, dtype=np.complex128)
    for bits, re, im in rows:
        amps[parse_bitstring(bits)] = complex(float(re), float(im))
    if not np.any(amps.imag):
        amps = amps.real.copy()
    return TrialWaveFunction(amps, n, abs(np.linalg.norm(amps) - 1) < NORM_TOL)


# expressivity of the sign node

def _matches(signs, pattern):
    pattern = np.asarray(pattern)
    return np.all(signs == pattern, axis=-1) | np.all(signs == -pattern, axis=-1)


def search_sign_realization(pattern, points: int = 41, bound: float = 2.0):
    """Grid search for (c, d) whose sign node has the given sign pattern.

    ``pattern[v]`` is the wanted sign of s(v); a global flip is accepted since
    it does not change the state. Each of the n+1 parameters ranges over
    ``points`` values in [-bound, bound]. Returns ``(c, d)`` or ``None``.
    """
    pattern = np.sign(np.asarray(pattern, dtype=float))
    n = len(pattern).bit_length() - 1
    if len(pattern) != 1 << n or np.any(pattern == 0):
        raise ValueError("pattern needs 2**n nonzero signs")
    grid = np.linspace(-bound, bound, points)
    s = spins(n)
    for c in itertools.product(grid, repeat=n):
        args = s @ np.asarray(c) + grid[:, None]  # rows: d values
        hits = np.flatnonzero(_matches(np.sign(np.tanh(args)), pattern))
        if hits.size:
            return np.asarray(c), float(grid[hits[0]])
    return None


def free_sign_realization(pattern) -> np.ndarray:
    """Oracle with one free sign per basis state: always realizes the pattern."""
    signs = np.sign(np.asarray(pattern, dtype=float))
    if np.any(signs == 0):
        raise ValueError("pattern needs nonzero signs")
    return signs.copy()
