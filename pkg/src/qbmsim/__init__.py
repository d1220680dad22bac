"""Gate-based quantum Boltzmann machine simulator for ground-state search."""

from .kernels import BACKEND_NAME
from .model import Layout, QbmParameters, QbmShape, Regulator
from .pauli import PauliHamiltonian, parse_hamiltonian

__all__ = ["BACKEND_NAME", "Layout", "PauliHamiltonian", "QbmParameters", "QbmShape",
           "Regulator", "parse_hamiltonian"]
__version__ = "0.1.0"
