"""Hot loops behind a switchable backend.

``QBM_NUMBA=0`` (or ``off``/``false``/``no``) selects the pure-numpy path;
otherwise the numba path is used when numba imports. Both backends expose
the same functions and are importable directly as ``kernels.numpy_backend``
and ``kernels.numba_backend()`` for comparison.
"""

import logging
import os

from . import _numpy as numpy_backend

log = logging.getLogger(__name__)

_OFF = {"0", "off", "false", "no"}


def numba_backend():
    """Import and return the numba backend module (raises ImportError without numba)."""
    from . import _numba

    return _numba


def _select():
    if os.environ.get("QBM_NUMBA", "1").strip().lower() in _OFF:
        return numpy_backend, "numpy"
    try:
        return numba_backend(), "numba"
    except ImportError:  # pragma: no cover - numba is a declared dependency
        log.warning("numba unavailable; using numpy kernels")
        return numpy_backend, "numpy"


backend, BACKEND_NAME = _select()

OP_UNITARY = numpy_backend.OP_UNITARY
OP_MEASURE = numpy_backend.OP_MEASURE
OP_RESET = numpy_backend.OP_RESET


def apply_controlled_1q(*args):
    return backend.apply_controlled_1q(*args)


def prob_one(states, qubit):
    return backend.prob_one(states, qubit)


def project(states, qubit, outcomes, probs):
    return backend.project(states, qubit, outcomes, probs)


def flip_rows(states, qubit, rows):
    return backend.flip_rows(states, qubit, rows)


def apply_pauli_sum(amps, flips, zmasks, coeffs):
    return backend.apply_pauli_sum(amps, flips, zmasks, coeffs)


def run_program(*args):
    return backend.run_program(*args)
