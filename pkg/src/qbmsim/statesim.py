"""State-vector simulator for the gate set the QBM circuits use.

Qubit ``k`` is bit ``k`` of the amplitude index. Supported kinds: Ry, Rz,
Rx, X, CNOT, CZ, ControlledRy, DoublyControlledRy (each control with its own
polarity), Measure (optionally post-selected) and Reset.

Two execution modes share one compiled program:

* :func:`run_exact` keeps the full state and turns every post-selected
  measurement into a projection, multiplying branch probabilities.
* :func:`run_sampled` collapses the state per shot, so post-selection and
  reset interleave the way they would on hardware.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Sequence

import numpy as np

from . import kernels

IMPOSSIBLE_PROB = 1e-14
SHOT_CHUNK = 4096


class PostSelectionError(RuntimeError):
    """A required measurement outcome has (numerically) zero probability."""


class EmptySampleError(RuntimeError):
    """No shot survived post-selection."""

    def __init__(self, shots, rejected):
        super().__init__(f"all {shots} shots rejected by post-selection ({rejected} rejected)")
        self.shots = shots
        self.rejected = rejected


class GateKind(str, Enum):
    RY = "Ry"
    RZ = "Rz"
    RX = "Rx"
    X = "X"
    CNOT = "CNOT"
    CZ = "CZ"
    CRY = "ControlledRy"
    CCRY = "DoublyControlledRy"
    MEASURE = "Measure"
    RESET = "Reset"


_ARITY = {
    GateKind.RY: 1, GateKind.RZ: 1, GateKind.RX: 1, GateKind.X: 1,
    GateKind.CNOT: 2, GateKind.CZ: 2, GateKind.CRY: 2, GateKind.CCRY: 3,
    GateKind.MEASURE: 1, GateKind.RESET: 1,
}


@dataclass(frozen=True)
class Gate:
    """One operation. For controlled kinds ``qubits`` is ``(*controls, target)``.

    ``outcome`` on a Measure requests post-selection on that bit.
    """

    kind: GateKind
    qubits: tuple[int, ...]
    angle: float = 0.0
    control_states: tuple[int, ...] = ()
    outcome: int | None = None

    def __post_init__(self):
        kind = GateKind(self.kind)
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        if len(self.qubits) != _ARITY[kind]:
            raise ValueError(f"{kind.value} acts on {_ARITY[kind]} qubit(s), got {self.qubits}")
        if len(set(self.qubits)) != len(self.qubits):
            raise ValueError(f"repeated qubit index in {self.qubits}")
        if min(self.qubits) < 0:
            raise ValueError("negative qubit index")
        if not math.isfinite(self.angle):
            raise ValueError("non-finite rotation angle")
        n_ctrl = len(self.qubits) - 1 if kind in (GateKind.CNOT, GateKind.CZ, GateKind.CRY, GateKind.CCRY) else 0
        states = self.control_states or (1,) * n_ctrl
        if len(states) != n_ctrl or any(b not in (0, 1) for b in states):
            raise ValueError(f"control_states {self.control_states} invalid for {kind.value}")
        object.__setattr__(self, "control_states", tuple(states))
        if self.outcome is not None and (kind is not GateKind.MEASURE or self.outcome not in (0, 1)):
            raise ValueError("outcome only valid as 0/1 on Measure")

    @property
    def controls(self) -> tuple[int, ...]:
        return self.qubits[:-1] if self.control_states else ()

    @property
    def target(self) -> int:
        return self.qubits[-1]

    def matrix(self) -> np.ndarray:
        """2x2 matrix applied to the target (for unitary kinds)."""
        t = self.angle / 2
        if self.kind in (GateKind.RY, GateKind.CRY, GateKind.CCRY):
            return np.array([[math.cos(t), -math.sin(t)], [math.sin(t), math.cos(t)]], dtype=np.complex128)
        if self.kind is GateKind.RZ:
            return np.array([[np.exp(-1j * t), 0], [0, np.exp(1j * t)]], dtype=np.complex128)
        if self.kind is GateKind.RX:
            return np.array([[math.cos(t), -1j * math.sin(t)], [-1j * math.sin(t), math.cos(t)]],
                            dtype=np.complex128)
        if self.kind in (GateKind.X, GateKind.CNOT):
            return np.array([[0, 1], [1, 0]], dtype=np.complex128)
        if self.kind is GateKind.CZ:
            return np.array([[1, 0], [0, -1]], dtype=np.complex128)
        raise ValueError(f"{self.kind.value} is not unitary")

    @property
    def is_unitary(self) -> bool:
        return self.kind not in (GateKind.MEASURE, GateKind.RESET)


# constructors used throughout
def ry(q, theta):
    return Gate(GateKind.RY, (q,), theta)


def rz(q, theta):
    return Gate(GateKind.RZ, (q,), theta)


def rx(q, theta):
    return Gate(GateKind.RX, (q,), theta)


def x(q):
    return Gate(GateKind.X, (q,))


def cnot(control, target):
    return Gate(GateKind.CNOT, (control, target))


def cz(control, target):
    return Gate(GateKind.CZ, (control, target))


def cry(control, target, theta, control_state=1):
    return Gate(GateKind.CRY, (control, target), theta, (control_state,))


def ccry(c1, c2, target, theta, control_states=(1, 1)):
    return Gate(GateKind.CCRY, (c1, c2, target), theta, tuple(control_states))


def measure(q, outcome=None):
    return Gate(GateKind.MEASURE, (q,), outcome=outcome)


def reset(q):
    return Gate(GateKind.RESET, (q,))


@dataclass
class Circuit:
    n_qubits: int
    ops: list[Gate] = field(default_factory=list)

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ValueError("circuit needs at least one qubit")
        for g in self.ops:
            self._check(g)

    def _check(self, gate):
        if max(gate.qubits) >= self.n_qubits:
            raise IndexError(f"{gate.kind.value} on {gate.qubits} outside {self.n_qubits} qubits")

    def append(self, gate: Gate) -> "Circuit":
        self._check(gate)
        self.ops.append(gate)
        return self

    def extend(self, gates) -> "Circuit":
        for g in gates:
            self.append(g)
        return self

    def count(self, kind: GateKind) -> int:
        return sum(1 for g in self.ops if g.kind is GateKind(kind))


@dataclass
class StateVector:
    amplitudes: np.ndarray

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=np.complex128)
        n = self.amplitudes.shape[0]
        if self.amplitudes.ndim != 1 or n < 2 or n & (n - 1):
            raise ValueError("amplitude length must be a power of two >= 2")

    @classmethod
    def zero(cls, n_qubits: int) -> "StateVector":
        amps = np.zeros(1 << n_qubits, dtype=np.complex128)
        amps[0] = 1.0
        return cls(amps)

    @property
    def n_qubits(self) -> int:
        return self.amplitudes.shape[0].bit_length() - 1

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def marginal(self, qubits: Sequence[int]) -> np.ndarray:
        """Probabilities over ``qubits``; output bit r is qubit ``qubits[r]``."""
        probs = self.probabilities()
        idx = np.arange(probs.shape[0])
        key = np.zeros_like(idx)
        for r, q in enumerate(qubits):
            key |= ((idx >> q) & 1) << r
        return np.bincount(key, weights=probs, minlength=1 << len(qubits))

    def copy(self) -> "StateVector":
        return StateVector(self.amplitudes.copy())


def _control_bits(gate):
    mask = val = 0
    for q, b in zip(gate.controls, gate.control_states):
        mask |= 1 << q
        val |= b << q
    return mask, val


def apply_gate(state: StateVector, gate: Gate) -> StateVector:
    """Return a new state with a unitary ``gate`` applied."""
    if not gate.is_unitary:
        raise ValueError("use project_and_renormalize / measure_and_reset for non-unitary ops")
    if max(gate.qubits) >= state.n_qubits:
        raise IndexError(f"gate on {gate.qubits} outside {state.n_qubits} qubits")
    out = state.amplitudes.copy()[None, :]
    mask, val = _control_bits(gate)
    m = gate.matrix()
    kernels.apply_controlled_1q(out, gate.target, mask, val, m[0, 0], m[0, 1], m[1, 0], m[1, 1])
    return StateVector(out[0])


def project_and_renormalize(state: StateVector, qubit: int, outcome: int) -> tuple[StateVector, float]:
    """Project ``qubit`` on ``outcome``; returns the new state and the outcome probability."""
    if not 0 <= qubit < state.n_qubits:
        raise IndexError(f"qubit {qubit} outside {state.n_qubits} qubits")
    if outcome not in (0, 1):
        raise ValueError("outcome must be 0 or 1")
    out = state.amplitudes.copy()[None, :]
    p1 = float(kernels.prob_one(out, qubit)[0])
    prob = p1 if outcome == 1 else 1.0 - p1
    if prob < IMPOSSIBLE_PROB:
        raise PostSelectionError(f"outcome {outcome} on qubit {qubit} has probability {prob:.3g}")
    kernels.project(out, qubit, np.array([outcome]), np.array([prob]))
    return StateVector(out[0]), prob


def measure_and_reset(state: StateVector, qubit: int, outcome: int) -> tuple[StateVector, float]:
    """Post-select ``outcome`` on ``qubit`` and return it to |0>."""
    out, prob = project_and_renormalize(state, qubit, outcome)
    if outcome == 1:
        out = apply_gate(out, x(qubit))
    return out, prob


def _effective_outcomes(circuit, post_select):
    req = {k: g.outcome for k, g in enumerate(circuit.ops) if g.kind is GateKind.MEASURE}
    for k, bit in (post_select or {}).items():
        if circuit.ops[k].kind is not GateKind.MEASURE:
            raise ValueError(f"post_select key {k} is not a Measure op")
        req[k] = bit
    return req


def run_exact(circuit: Circuit, post_select: Mapping[int, int] | None = None) -> tuple[StateVector, float]:
    """Apply the circuit; post-selected measurements project, readouts are deferred.

    A measurement without a required outcome is treated as a terminal readout
    and leaves the state untouched, so no later op may act on that qubit.
    Reset is only defined on a qubit in a definite computational state.
    """
    req = _effective_outcomes(circuit, post_select)
    state = StateVector.zero(circuit.n_qubits)
    success = 1.0
    read_out: set[int] = set()
    for k, gate in enumerate(circuit.ops):
        if read_out.intersection(gate.qubits) and gate.kind is not GateKind.MEASURE:
            raise ValueError(f"op {k} acts on qubit(s) already read out without post-selection")
        if gate.kind is GateKind.MEASURE:
            bit = req.get(k)
            if bit is None:
                read_out.add(gate.target)
                continue
            state, prob = project_and_renormalize(state, gate.target, bit)
            success *= prob
        elif gate.kind is GateKind.RESET:
            p1 = float(kernels.prob_one(state.amplitudes[None, :], gate.target)[0])
            if min(p1, 1.0 - p1) > 1e-12:
                raise ValueError(f"exact-mode Reset on qubit {gate.target} in superposition")
            if p1 > 0.5:
                state = apply_gate(state, x(gate.target))
        else:
            state = apply_gate(state, gate)
    return state, success


@dataclass(frozen=True)
class Program:
    """Array form of a circuit consumed by the kernels."""

    n_qubits: int
    kinds: np.ndarray
    targets: np.ndarray
    cmasks: np.ndarray
    cvals: np.ndarray
    mats: np.ndarray
    required: np.ndarray
    draws: np.ndarray
    slots: np.ndarray
    readout_qubits: tuple[int, ...]
    n_draws: int


def compile_circuit(circuit: Circuit, post_select: Mapping[int, int] | None = None) -> Program:
    req = _effective_outcomes(circuit, post_select)
    n = len(circuit.ops)
    kinds = np.zeros(n, dtype=np.int64)
    targets = np.zeros(n, dtype=np.int64)
    cmasks = np.zeros(n, dtype=np.int64)
    cvals = np.zeros(n, dtype=np.int64)
    mats = np.zeros((n, 4), dtype=np.complex128)
    required = np.full(n, -1, dtype=np.int64)
    draws = np.full(n, -1, dtype=np.int64)
    slots = np.full(n, -1, dtype=np.int64)
    readout = []
    n_draws = 0
    for k, gate in enumerate(circuit.ops):
        targets[k] = gate.target
        if gate.is_unitary:
            kinds[k] = kernels.OP_UNITARY
            cmasks[k], cvals[k] = _control_bits(gate)
            mats[k] = gate.matrix().ravel()
            continue
        kinds[k] = kernels.OP_MEASURE if gate.kind is GateKind.MEASURE else kernels.OP_RESET
        draws[k] = n_draws
        n_draws += 1
        if gate.kind is GateKind.MEASURE:
            if req.get(k) is None:
                slots[k] = len(readout)
                readout.append(gate.target)
            else:
                required[k] = req[k]
    if len(readout) > 62:
        raise ValueError("too many recorded measurements to pack into one integer")
    return Program(circuit.n_qubits, kinds, targets, cmasks, cvals, mats, required, draws,
                   slots, tuple(readout), n_draws)


def shot_uniforms(seed, start: int, count: int, n_draws: int) -> np.ndarray:
    """Uniforms for shots ``start .. start+count-1``; row s depends only on (seed, s).

    Draws come from a Philox counter-based stream; each shot owns a fixed,
    block-aligned window of the stream, reached with ``advance``.
    """
    width = max(4, 4 * math.ceil(n_draws / 4))
    bitgen = np.random.Philox(np.random.SeedSequence(seed))
    bitgen.advance(start * width // 4)
    return np.random.Generator(bitgen).random((count, width))[:, :n_draws]


@dataclass
class SampleResult:
    """Counts over the recorded readouts; bit r of a key is ``readout_qubits[r]``."""

    counts: np.ndarray
    readout_qubits: tuple[int, ...]
    accepted_shots: int
    rejected_shots: int

    @property
    def shots(self) -> int:
        return self.accepted_shots + self.rejected_shots

    @property
    def acceptance_rate(self) -> float:
        return self.accepted_shots / self.shots if self.shots else 0.0


def _run_chunk(program, seed, start, count):
    u = shot_uniforms(seed, start, count, program.n_draws)
    return kernels.run_program(
        program.n_qubits, program.kinds, program.targets, program.cmasks, program.cvals,
        program.mats, program.required, program.draws, program.slots, u)


def run_sampled(circuit: Circuit, shots: int, seed, post_select: Mapping[int, int] | None = None,
                *, accepted_target: int | None = None, max_shots: int | None = None,
                allow_empty: bool = False) -> SampleResult:
    """Shot-by-shot simulation with post-selection.

    With ``accepted_target`` set, shots are drawn in index order until exactly
    that many are accepted (bounded by ``max_shots``) and ``shots`` is unused. Raises :class:`EmptySampleError` if nothing is accepted,
    unless ``allow_empty``.
    """
    if shots < 1:
        raise ValueError("shots must be >= 1")
    program = compile_circuit(circuit, post_select)
    n_keys = 1 << len(program.readout_qubits)
    counts = np.zeros(n_keys, dtype=np.int64)
    accepted = rejected = 0
    start = 0
    limit = shots if accepted_target is None else (max_shots or 1000 * accepted_target)
    chunk = max(16, min(SHOT_CHUNK, (1 << 21) >> program.n_qubits))
    while start < limit:
        count = min(chunk, limit - start)
        records, ok = _run_chunk(program, seed, start, count)
        if accepted_target is not None:
            need = accepted_target - accepted
            hits = np.flatnonzero(ok)
            if hits.size >= need:
                stop = hits[need - 1] + 1
                records, ok = records[:stop], ok[:stop]
        counts += np.bincount(records[ok], minlength=n_keys)
        n_ok = int(ok.sum())
        accepted += n_ok
        rejected += ok.shape[0] - n_ok
        start += ok.shape[0]
        if accepted_target is not None and accepted >= accepted_target:
            break
    if accepted == 0 and not allow_empty:
        raise EmptySampleError(start, rejected)
    return SampleResult(counts, program.readout_qubits, accepted, rejected)
