"""Lowering of (doubly-)controlled rotations to one-qubit rotations, CNOT/CZ and X.

Also the gate-count, depth, width and shot reports for a QBM shape. Unitary
checks here compose full matrices with Kronecker products, independently of
the simulator kernels.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from . import statesim as sim
from .model import Layout, QbmShape, entangling_layer
from .statesim import Gate, GateKind

SHOT_FACTOR = 10

_AXES = {"y": sim.ry, "z": sim.rz, "x": sim.rx}
TWO_QUBIT = {GateKind.CNOT, GateKind.CZ}
ONE_QUBIT_ROTATIONS = {GateKind.RY, GateKind.RZ, GateKind.RX}


def decompose_cry(theta: float, control: int = 0, target: int = 1, axis: str = "y") -> list[Gate]:
    """R(theta/2) - CNOT - R(-theta/2) - CNOT on the target; CZ instead of CNOT for Rx."""
    rot = _AXES[axis]
    two = sim.cz if axis == "x" else sim.cnot
    return [rot(target, theta / 2), two(control, target), rot(target, -theta / 2), two(control, target)]


def decompose_ccry(theta: float, control_states=(1, 1), qubits=(0, 1, 2), axis: str = "y") -> list[Gate]:
    """Doubly-controlled rotation as three controlled rotations and two CNOTs.

    Controls that fire on |0> are conjugated with X gates.
    """
    c1, c2, t = qubits
    flips = [sim.x(q) for q, bit in zip((c1, c2), control_states) if bit == 0]
    core = (decompose_cry(theta / 2, c2, t, axis)
            + [sim.cnot(c1, c2)]
            + decompose_cry(-theta / 2, c2, t, axis)
            + [sim.cnot(c1, c2)]
            + decompose_cry(theta / 2, c1, t, axis))
    return flips + core + flips


def lower_gate(gate: Gate) -> list[Gate]:
    """Physical gates for one gate; already-physical gates pass through."""
    if gate.kind is GateKind.CCRY:
        return decompose_ccry(gate.angle, gate.control_states, gate.qubits)
    if gate.kind is GateKind.CRY:
        (state,) = gate.control_states
        flips = [sim.x(gate.qubits[0])] if state == 0 else []
        return flips + decompose_cry(gate.angle, *gate.qubits) + flips
    return [gate]


def lower_circuit(circuit: sim.Circuit) -> sim.Circuit:
    """Same circuit with every controlled rotation lowered; indices of post-selected
    measurements are not preserved, so outcomes must be carried on the gates."""
    out = sim.Circuit(circuit.n_qubits)
    for gate in circuit.ops:
        out.extend(lower_gate(gate))
    return out


# matrix composition oracle

_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
_Z = np.diag([1.0, -1.0]).astype(np.complex128)


def _rotation(axis, theta):
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    if axis == "y":
        return np.array([[c, -s], [s, c]], dtype=np.complex128)
    if axis == "z":
        return np.diag([np.exp(-0.5j * theta), np.exp(0.5j * theta)])
    return np.array([[c, -1j * s], [-1j * s, c]], dtype=np.complex128)


def _embed(op2, qubit, n):
    """Full matrix of a one-qubit operator; qubit 0 is the least significant factor."""
    out = np.ones((1, 1), dtype=np.complex128)
    for q in range(n):
        out = np.kron(op2 if q == qubit else np.eye(2), out)
    return out


def _projector(qubit, bit, n):
    return _embed(np.diag([1.0 - bit, float(bit)]).astype(np.complex128), qubit, n)


def controlled_unitary(op2, controls, control_states, target, n) -> np.ndarray:
    """I + P_controls (U - I) on the target."""
    proj = np.eye(1 << n, dtype=np.complex128)
    for q, bit in zip(controls, control_states):
        proj = proj @ _projector(q, bit, n)
    return np.eye(1 << n) + proj @ (_embed(op2, target, n) - np.eye(1 << n))


_ROTATION_AXIS = {GateKind.RY: "y", GateKind.RZ: "z", GateKind.RX: "x"}


def gate_unitary(gate: Gate, n: int) -> np.ndarray:
    kind = gate.kind
    if kind in _ROTATION_AXIS:
        return _embed(_rotation(_ROTATION_AXIS[kind], gate.angle), gate.target, n)
    if kind is GateKind.X:
        return _embed(_X, gate.target, n)
    if kind is GateKind.CNOT:
        return controlled_unitary(_X, gate.controls, gate.control_states, gate.target, n)
    if kind is GateKind.CZ:
        return controlled_unitary(_Z, gate.controls, gate.control_states, gate.target, n)
    if kind in (GateKind.CRY, GateKind.CCRY):
        return controlled_unitary(_rotation("y", gate.angle), gate.controls, gate.control_states,
                                  gate.target, n)
    raise ValueError(f"{kind.value} has no unitary")


def sequence_unitary(gates, n: int) -> np.ndarray:
    u = np.eye(1 << n, dtype=np.complex128)
    for g in gates:
        u = gate_unitary(g, n) @ u
    return u


def equal_up_to_phase(u: np.ndarray, v: np.ndarray, tol: float = 1e-12) -> bool:
    k = np.unravel_index(np.argmax(np.abs(v)), v.shape)
    if abs(u[k]) < 1e-300:
        return False
    phase = v[k] / u[k]
    return bool(abs(abs(phase) - 1) <= tol and np.max(np.abs(u * phase - v)) <= tol)


# counting

@dataclass
class PhysicalGateCounts:
    two_qubit: int = 0
    one_qubit_rotations: int = 0
    x_gates: int = 0
    depth: int = 0
    width: int = 0
    measurements: int = 0
    resets: int = 0

    @property
    def total(self) -> int:
        return self.two_qubit + self.one_qubit_rotations + self.x_gates


def circuit_depth(gates, n_qubits: int) -> int:
    """Longest chain when gates on disjoint qubits may run in parallel."""
    level = [0] * n_qubits
    for g in gates:
        top = max(level[q] for q in g.qubits) + 1
        for q in g.qubits:
            level[q] = top
    return max(level, default=0)


def count_gates(gates, n_qubits: int) -> PhysicalGateCounts:
    gates = list(gates)
    out = PhysicalGateCounts(width=n_qubits, depth=circuit_depth(gates, n_qubits))
    for g in gates:
        if g.kind in TWO_QUBIT:
            out.two_qubit += 1
        elif g.kind in ONE_QUBIT_ROTATIONS:
            out.one_qubit_rotations += 1
        elif g.kind is GateKind.X:
            out.x_gates += 1
        elif g.kind is GateKind.MEASURE:
            out.measurements += 1
        elif g.kind is GateKind.RESET:
            out.resets += 1
        else:
            raise ValueError(f"{g.kind.value} is not a physical gate")
    return out


def entangling_stage(shape: QbmShape, w: float = 0.3) -> list[Gate]:
    """Lowered entangling layers of every (visible, hidden) pair, with mid-circuit
    measure/reset for the reused-ancilla layout. Counts do not depend on ``w``."""
    n, m = shape.n_visible, shape.n_hidden
    out = []
    for i in range(n):
        for j in range(m):
            anc = shape.ancilla(i, j)
            for gate in entangling_layer(i, n + j, anc, w):
                out.extend(lower_gate(gate))
            if shape.layout is Layout.SINGLE_REUSED:
                out += [sim.measure(anc, 1), sim.reset(anc)]
    return out


def count_entangling_stage(shape: QbmShape) -> PhysicalGateCounts:
    """Two-qubit and rotation totals as if every control fired on |1> (4 * nm doubly
    controlled gates at 8 CNOT + 6 rotations each); X gates for the |0> controls,
    depth and width come from the actual lowered stage."""
    actual = count_gates(entangling_stage(shape), shape.n_qubits)
    ideal = count_gates(decompose_ccry(0.3), 3)
    layers = 4 * shape.n_pairs
    actual.two_qubit = layers * ideal.two_qubit
    actual.one_qubit_rotations = layers * ideal.one_qubit_rotations
    return actual


def width(shape: QbmShape) -> int:
    return shape.n_qubits


def parameter_count(n: int, m: int, node: str = "sign") -> int:
    count = n + m + n * m + n + 1
    return count + (n + 1 if node == "phase" else 0)


@dataclass
class ResourceReport:
    n_visible: int
    n_hidden: int
    layout: str
    node: str
    width: int
    entangling: PhysicalGateCounts
    linear_rotations: int
    parameter_count: int
    dof_count: int
    recommended_shots: int
    shot_factor: int = SHOT_FACTOR
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_text(self) -> str:
        e = self.entangling
        lines = [
            f"shape: ({self.n_visible},{self.n_hidden})-QBM, layout {self.layout}, {self.node} node",
            f"width: {self.width} qubits",
            f"entangling stage two-qubit gates: {e.two_qubit}",
            f"entangling stage one-qubit rotations: {e.one_qubit_rotations}",
            f"entangling stage X gates (|0>-controls): {e.x_gates}",
            f"entangling stage depth: {e.depth}",
            f"mid-circuit measurements: {e.measurements}, resets: {e.resets}",
            f"linear-term rotations: {self.linear_rotations}",
            f"parameter count: {self.parameter_count} vs dof {self.dof_count}",
            f"recommended shots: {self.recommended_shots} ({self.shot_factor} x 2^{self.n_visible})",
        ]
        lines += [f"note: {note}" for note in self.notes]
        return "\n".join(lines) + "\n"


def resource_report(shape: QbmShape, node: str = "sign", shot_factor: int = SHOT_FACTOR) -> ResourceReport:
    if node not in ("sign", "phase"):
        raise ValueError(f"unknown node mode {node!r}")
    n, m = shape.n_visible, shape.n_hidden
    notes = ["SWAP gates for limited qubit connectivity are not included"]
    if shape.layout is Layout.SINGLE_REUSED:
        notes.append("requires mid-circuit measurement and fast ancilla reset")
    return ResourceReport(
        n_visible=n, n_hidden=m, layout=shape.layout.value, node=node, width=width(shape),
        entangling=count_entangling_stage(shape), linear_rotations=n + m,
        parameter_count=parameter_count(n, m, node), dof_count=(1 << n) - 1,
        recommended_shots=shot_factor * (1 << n), shot_factor=shot_factor, notes=notes)
