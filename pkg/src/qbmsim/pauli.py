"""Pauli-decomposed Hamiltonians: parsing, matrix-free action, dense reference.

Symbol ``i`` of a Pauli string acts on qubit ``i``, which is bit ``i`` of a
basis-state index. Bitstrings are written in the same order, so the string
``"100"`` is index 1.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from . import kernels

log = logging.getLogger(__name__)

PAULI_SYMBOLS = "IXYZ"
DENSE_CAP = 12
ZERO_COEFF = 1e-15


class HamiltonianError(ValueError):
    """Malformed Hamiltonian text or inconsistent terms."""


class QubitCapError(ValueError):
    """Requested a dense object beyond the configured qubit cap."""


@dataclass(frozen=True)
class PauliString:
    ops: str

    def __post_init__(self):
        if not self.ops:
            raise HamiltonianError("empty Pauli string")
        bad = set(self.ops) - set(PAULI_SYMBOLS)
        if bad:
            raise HamiltonianError(f"illegal Pauli symbol(s) {sorted(bad)} in {self.ops!r}")

    def __len__(self):
        return len(self.ops)

    def __str__(self):
        return self.ops

    @property
    def flip_mask(self) -> int:
        return sum(1 << i for i, p in enumerate(self.ops) if p in "XY")

    @property
    def z_mask(self) -> int:
        """Bits whose value contributes a (-1) factor (Z and Y positions)."""
        return sum(1 << i for i, p in enumerate(self.ops) if p in "YZ")

    @property
    def n_y(self) -> int:
        return self.ops.count("Y")

    def phase(self) -> complex:
        # Y|b> = i(-1)^b |1-b>, so each Y contributes a factor i
        return (1j) ** (self.n_y % 4)


@dataclass(frozen=True)
class PauliHamiltonian:
    terms: tuple[tuple[float, PauliString], ...]
    n_qubits: int

    def __post_init__(self):
        if self.n_qubits < 1:
            raise HamiltonianError("n_qubits must be positive")
        seen = set()
        for coeff, string in self.terms:
            if not math.isfinite(coeff):
                raise HamiltonianError(f"non-finite coefficient {coeff!r}")
            if len(string) != self.n_qubits:
                raise HamiltonianError(
                    f"Pauli string {string} has length {len(string)}, expected {self.n_qubits}")
            if string in seen:
                raise HamiltonianError(f"duplicate Pauli string {string}")
            seen.add(string)

    @classmethod
    def from_terms(cls, terms: Iterable[tuple[float, str | PauliString]],
                   n_qubits: int | None = None) -> "PauliHamiltonian":
        """Merge duplicates (summing coefficients) and drop zero terms."""
        merged: dict[PauliString, float] = {}
        for coeff, string in terms:
            if not isinstance(string, PauliString):
                string = PauliString(string)
            if n_qubits is None:
                n_qubits = len(string)
            if len(string) != n_qubits:
                raise HamiltonianError(
                    f"inconsistent string lengths: {string} vs {n_qubits} qubits")
            merged[string] = merged.get(string, 0.0) + float(coeff)
        if n_qubits is None:
            raise HamiltonianError("empty Hamiltonian")
        kept = tuple((c, s) for s, c in merged.items() if abs(c) >= ZERO_COEFF)
        return cls(kept, n_qubits)

    @property
    def dim(self) -> int:
        return 1 << self.n_qubits

    @property
    def norm_bound(self) -> float:
        """Upper bound on the spectral radius: sum of |coefficients|."""
        return float(sum(abs(c) for c, _ in self.terms))

    def to_text(self) -> str:
        return "".join(f"{c!r} {s}\n" for c, s in self.terms)

    def _compiled(self):
        flips = np.array([s.flip_mask for _, s in self.terms], dtype=np.int64)
        zmasks = np.array([s.z_mask for _, s in self.terms], dtype=np.int64)
        coeffs = np.array([c * s.phase() for c, s in self.terms], dtype=np.complex128)
        return flips, zmasks, coeffs


def parse_hamiltonian(text: str | Iterable[str]) -> PauliHamiltonian:
    """Parse ``<coefficient> <pauli string>`` lines; ``#`` comments and blanks skipped."""
    lines = text.splitlines() if isinstance(text, str) else list(text)
    raw = []
    for lineno, line in enumerate(lines, 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise HamiltonianError(f"line {lineno}: expected '<coefficient> <pauli string>'")
        try:
            coeff = float(parts[0])
        except ValueError:
            raise HamiltonianError(f"line {lineno}: malformed coefficient {parts[0]!r}") from None
        if not math.isfinite(coeff):
            raise HamiltonianError(f"line {lineno}: non-finite coefficient")
        try:
            raw.append((coeff, PauliString(parts[1].upper())))
        except HamiltonianError as exc:
            raise HamiltonianError(f"line {lineno}: {exc}") from None
    if not raw:
        raise HamiltonianError("empty Hamiltonian")
    return PauliHamiltonian.from_terms(raw)


def load_hamiltonian(path) -> PauliHamiltonian:
    with open(path, encoding="utf-8") as fh:
        return parse_hamiltonian(fh.read())


def _as_vector(psi, dim):
    vec = np.asarray(getattr(psi, "amplitudes", psi))
    if vec.shape != (dim,):
        raise ValueError(f"state has shape {vec.shape}, expected ({dim},)")
    return vec


def apply_term(coeff: float, string: PauliString | str, psi) -> np.ndarray:
    """Return coeff * P|psi> for a single Pauli string."""
    if not isinstance(string, PauliString):
        string = PauliString(string)
    vec = _as_vector(psi, 1 << len(string))
    return kernels.apply_pauli_sum(
        vec.astype(np.complex128),
        np.array([string.flip_mask], dtype=np.int64),
        np.array([string.z_mask], dtype=np.int64),
        np.array([coeff * string.phase()], dtype=np.complex128),
    )


def apply_hamiltonian(H: PauliHamiltonian, psi) -> np.ndarray:
    """Matrix-free H|psi>, accumulated in term order."""
    vec = _as_vector(psi, H.dim).astype(np.complex128)
    if not H.terms:
        return np.zeros(H.dim, dtype=np.complex128)
    return kernels.apply_pauli_sum(vec, *H._compiled())


_PAULI_MATRICES = {
    "I": np.eye(2, dtype=np.complex128),
    "X": np.array([[0, 1], [1, 0]], dtype=np.complex128),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
    "Z": np.array([[1, 0], [0, -1]], dtype=np.complex128),
}


def dense_matrix(H: PauliHamiltonian, cap: int = DENSE_CAP) -> np.ndarray:
    """Kronecker-product expansion; symbol 0 is the least significant factor."""
    if H.n_qubits > cap:
        raise QubitCapError(f"{H.n_qubits} qubits exceeds dense cap {cap}")
    out = np.zeros((H.dim, H.dim), dtype=np.complex128)
    for coeff, string in H.terms:
        mat = np.ones((1, 1), dtype=np.complex128)
        for symbol in string.ops:
            mat = np.kron(_PAULI_MATRICES[symbol], mat)
        out += coeff * mat
    return out


@dataclass
class GroundState:
    energy: float
    state: np.ndarray
    iterations: int
    converged: bool

    @property
    def degenerate(self) -> bool:
        """Set when power iteration stalled, which signals a (near-)degenerate gap."""
        return not self.converged


def ground_state_exact(H: PauliHamiltonian, cap: int = DENSE_CAP, tol: float = 1e-12,
                       max_iter: int = 200_000, seed: int = 0) -> GroundState:
    """Lowest eigenpair by power iteration on (L*I - H), L = sum |c_k|."""
    if H.n_qubits > cap:
        raise QubitCapError(f"{H.n_qubits} qubits exceeds cap {cap}")
    shift = H.norm_bound
    rng = np.random.default_rng(seed)
    x = rng.normal(size=H.dim) + 1j * rng.normal(size=H.dim)
    x /= np.linalg.norm(x)
    energy = float(np.vdot(x, apply_hamiltonian(H, x)).real)
    if shift == 0.0:
        return GroundState(0.0, x, 0, True)
    for it in range(1, max_iter + 1):
        hx = apply_hamiltonian(H, x)
        y = shift * x - hx
        x = y / np.linalg.norm(y)
        new_energy = float(np.vdot(x, apply_hamiltonian(H, x)).real)
        if abs(new_energy - energy) < tol:
            return GroundState(new_energy, _fix_phase(x), it, True)
        energy = new_energy
    log.warning("power iteration did not converge in %d steps; spectrum likely degenerate", max_iter)
    return GroundState(energy, _fix_phase(x), max_iter, False)


def _fix_phase(x):
    k = int(np.argmax(np.abs(x)))
    return x * (abs(x[k]) / x[k])
