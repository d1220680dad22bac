"""Pure-numpy kernels.

Every state kernel works on a 2-D array of shape ``(batch, 2**q)`` so that
many shot trajectories advance together; a single state is a batch of one.
Qubit ``k`` is bit ``k`` of the amplitude index (least significant first).
"""

from functools import lru_cache

import numpy as np

# program op kinds, shared with the numba backend
OP_UNITARY = 0
OP_MEASURE = 1
OP_RESET = 2


@lru_cache(maxsize=512)
def _pair_indices(n_qubits, target, ctrl_mask, ctrl_val):
    idx = np.arange(1 << n_qubits, dtype=np.int64)
    tbit = 1 << target
    keep = ((idx & tbit) == 0) & ((idx & ctrl_mask) == ctrl_val)
    i0 = idx[keep]
    return i0, i0 | tbit


@lru_cache(maxsize=512)
def _bit_set(n_qubits, qubit):
    idx = np.arange(1 << n_qubits, dtype=np.int64)
    return ((idx >> qubit) & 1).astype(bool)


def _n_qubits(states):
    return int(states.shape[1]).bit_length() - 1


def apply_controlled_1q(states, target, ctrl_mask, ctrl_val, u00, u01, u10, u11):
    """In place: apply [[u00, u01], [u10, u11]] to ``target`` where controls match."""
    i0, i1 = _pair_indices(_n_qubits(states), target, ctrl_mask, ctrl_val)
    a0 = states[:, i0]
    a1 = states[:, i1]
    states[:, i0] = u00 * a0 + u01 * a1
    states[:, i1] = u10 * a0 + u11 * a1


def prob_one(states, qubit):
    mask = _bit_set(_n_qubits(states), qubit)
    return np.sum(np.abs(states[:, mask]) ** 2, axis=1)


def project(states, qubit, outcomes, probs):
    """In place: keep the ``outcomes[b]`` branch of each row and renormalize by ``probs[b]``."""
    mask = _bit_set(_n_qubits(states), qubit)
    drop = mask[None, :] != (np.asarray(outcomes)[:, None] == 1)
    states[drop] = 0.0
    states /= np.sqrt(probs)[:, None]


def flip_rows(states, qubit, rows):
    """In place: X on ``qubit`` for the selected rows."""
    if not np.any(rows):
        return
    i0, i1 = _pair_indices(_n_qubits(states), qubit, 0, 0)
    sub = states[rows]
    sub[:, i0], sub[:, i1] = sub[:, i1].copy(), sub[:, i0].copy()
    states[rows] = sub


def apply_pauli_sum(amps, flips, zmasks, coeffs):
    """Return sum_k coeffs[k] * (-1)^popcount(i & zmasks[k]) * amps[i] placed at i ^ flips[k].

    ``coeffs`` already carries the i**(number of Y) factor. Terms are
    accumulated in index order.
    """
    idx = np.arange(amps.shape[0], dtype=np.int64)
    out = np.zeros(amps.shape[0], dtype=np.complex128)
    for flip, zmask, coeff in zip(flips, zmasks, coeffs):
        # bitwise_count returns uint8; widen before the subtraction
        sign = 1 - 2 * (np.bitwise_count(idx & zmask).astype(np.int64) & 1)
        out[idx ^ flip] += coeff * sign * amps
    return out


def run_program(n_qubits, kinds, targets, cmasks, cvals, mats, required, draws,
                slots, uniforms):
    """Simulate every shot of a compiled program with mid-circuit collapse.

    Returns ``(records, accepted)`` where ``records[s]`` packs the outcomes of
    the recorded (non post-selected) measurements, bit r for slot r.
    """
    shots = uniforms.shape[0]
    records = np.zeros(shots, dtype=np.int64)
    accepted = np.zeros(shots, dtype=np.bool_)
    alive = np.arange(shots)
    states = np.zeros((shots, 1 << n_qubits), dtype=np.complex128)
    states[:, 0] = 1.0
    for k in range(kinds.shape[0]):
        if alive.size == 0:
            break
        if kinds[k] == OP_UNITARY:
            m = mats[k]
            apply_controlled_1q(states, targets[k], cmasks[k], cvals[k], m[0], m[1], m[2], m[3])
            continue
        p1 = np.clip(prob_one(states, targets[k]), 0.0, 1.0)
        outcome = (uniforms[alive, draws[k]] < p1).astype(np.int64)
        if kinds[k] == OP_MEASURE and required[k] >= 0:
            ok = outcome == required[k]
            alive, states, outcome, p1 = alive[ok], states[ok], outcome[ok], p1[ok]
            if alive.size == 0:
                break
        probs = np.where(outcome == 1, p1, 1.0 - p1)
        project(states, targets[k], outcome, probs)
        if kinds[k] == OP_RESET:
            flip_rows(states, targets[k], outcome == 1)
        elif slots[k] >= 0:
            records[alive] |= outcome << slots[k]
    accepted[alive] = True
    return records, accepted
