"""Numba-compiled kernels with the same signatures as the numpy backend."""

import numpy as np
from numba import njit

from ._numpy import OP_MEASURE, OP_RESET, OP_UNITARY


@njit(cache=True)
def _apply_one(state, target, ctrl_mask, ctrl_val, u00, u01, u10, u11):
    tbit = 1 << target
    for i in range(state.shape[0]):
        if i & tbit or (i & ctrl_mask) != ctrl_val:
            continue
        j = i | tbit
        a0 = state[i]
        a1 = state[j]
        state[i] = u00 * a0 + u01 * a1
        state[j] = u10 * a0 + u11 * a1


@njit(cache=True)
def _prob_one(state, qubit):
    tbit = 1 << qubit
    total = 0.0
    for i in range(state.shape[0]):
        if i & tbit:
            total += state[i].real ** 2 + state[i].imag ** 2
    return total


@njit(cache=True)
def _project(state, qubit, outcome, prob):
    tbit = 1 << qubit
    scale = 1.0 / np.sqrt(prob)
    for i in range(state.shape[0]):
        if ((i & tbit) != 0) == (outcome == 1):
            state[i] *= scale
        else:
            state[i] = 0.0


@njit(cache=True)
def _flip(state, qubit):
    tbit = 1 << qubit
    for i in range(state.shape[0]):
        if i & tbit == 0:
            j = i | tbit
            tmp = state[i]
            state[i] = state[j]
            state[j] = tmp


@njit(cache=True)
def _apply_batch(states, target, ctrl_mask, ctrl_val, u00, u01, u10, u11):
    for b in range(states.shape[0]):
        _apply_one(states[b], target, ctrl_mask, ctrl_val, u00, u01, u10, u11)


def apply_controlled_1q(states, target, ctrl_mask, ctrl_val, u00, u01, u10, u11):
    _apply_batch(states, int(target), int(ctrl_mask), int(ctrl_val),
                 complex(u00), complex(u01), complex(u10), complex(u11))


@njit(cache=True)
def _prob_one_batch(states, qubit):
    out = np.empty(states.shape[0])
    for b in range(states.shape[0]):
        out[b] = _prob_one(states[b], qubit)
    return out


def prob_one(states, qubit):
    return _prob_one_batch(states, int(qubit))


@njit(cache=True)
def _project_batch(states, qubit, outcomes, probs):
    for b in range(states.shape[0]):
        _project(states[b], qubit, outcomes[b], probs[b])


def project(states, qubit, outcomes, probs):
    _project_batch(states, int(qubit), np.asarray(outcomes, dtype=np.int64),
                   np.asarray(probs, dtype=np.float64))


@njit(cache=True)
def _flip_rows(states, qubit, rows):
    for b in range(states.shape[0]):
        if rows[b]:
            _flip(states[b], qubit)


def flip_rows(states, qubit, rows):
    _flip_rows(states, int(qubit), np.asarray(rows, dtype=np.bool_))


@njit(cache=True)
def _pauli_sum(amps, flips, zmasks, coeffs):
    out = np.zeros(amps.shape[0], dtype=np.complex128)
    for k in range(flips.shape[0]):
        flip = flips[k]
        zmask = zmasks[k]
        coeff = coeffs[k]
        for i in range(amps.shape[0]):
            x = i & zmask
            parity = 0
            while x:
                parity ^= 1
                x &= x - 1
            if parity:
                out[i ^ flip] -= coeff * amps[i]
            else:
                out[i ^ flip] += coeff * amps[i]
    return out


def apply_pauli_sum(amps, flips, zmasks, coeffs):
    return _pauli_sum(np.ascontiguousarray(amps, dtype=np.complex128),
                      np.asarray(flips, dtype=np.int64),
                      np.asarray(zmasks, dtype=np.int64),
                      np.asarray(coeffs, dtype=np.complex128))


@njit(cache=True)
def _run_program(n_qubits, kinds, targets, cmasks, cvals, mats, required, draws,
                 slots, uniforms):
    shots = uniforms.shape[0]
    records = np.zeros(shots, dtype=np.int64)
    accepted = np.zeros(shots, dtype=np.bool_)
    state = np.empty(1 << n_qubits, dtype=np.complex128)
    for s in range(shots):
        state[:] = 0.0
        state[0] = 1.0
        ok = True
        rec = 0
        for k in range(kinds.shape[0]):
            kind = kinds[k]
            if kind == OP_UNITARY:
                _apply_one(state, targets[k], cmasks[k], cvals[k],
                           mats[k, 0], mats[k, 1], mats[k, 2], mats[k, 3])
                continue
            p1 = min(max(_prob_one(state, targets[k]), 0.0), 1.0)
            outcome = 1 if uniforms[s, draws[k]] < p1 else 0
            if kind == OP_MEASURE and required[k] >= 0 and outcome != required[k]:
                ok = False
                break
            _project(state, targets[k], outcome, p1 if outcome == 1 else 1.0 - p1)
            if kind == OP_RESET:
                if outcome == 1:
                    _flip(state, targets[k])
            elif slots[k] >= 0:
                rec |= outcome << slots[k]
        if ok:
            records[s] = rec
            accepted[s] = True
    return records, accepted


def run_program(n_qubits, kinds, targets, cmasks, cvals, mats, required, draws,
                slots, uniforms):
    return _run_program(int(n_qubits), kinds, targets, cmasks, cvals, mats,
                        required, draws, slots, uniforms)


__all__ = [
    "OP_MEASURE", "OP_RESET", "OP_UNITARY", "apply_controlled_1q", "prob_one",
    "project", "flip_rows", "apply_pauli_sum", "run_program",
]
