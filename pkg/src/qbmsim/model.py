"""Gate-based restricted Boltzmann machine: parameters, circuits and the classical oracle.

Qubit layout of a built circuit: visible qubits ``0..n-1``, hidden qubits
``n..n+m-1``, then the ancilla register. Bit value 0 maps to spin +1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from . import statesim as sim
from .wavefunction import VisibleDistribution, spins

EXACT_CAP = 22


class Layout(str, Enum):
    ONE_PER_PAIR = "one_per_pair"
    SINGLE_REUSED = "single_reused"

    @classmethod
    def parse(cls, value) -> "Layout":
        aliases = {"per-pair": cls.ONE_PER_PAIR, "reused": cls.SINGLE_REUSED}
        if isinstance(value, cls):
            return value
        return aliases.get(value) or cls(value)


@dataclass(frozen=True)
class QbmShape:
    n_visible: int
    n_hidden: int
    layout: Layout = Layout.ONE_PER_PAIR

    def __post_init__(self):
        if self.n_visible < 1 or self.n_hidden < 1:
            raise ValueError("QBM needs at least one visible and one hidden qubit")
        object.__setattr__(self, "layout", Layout.parse(self.layout))

    @property
    def n_pairs(self) -> int:
        return self.n_visible * self.n_hidden

    @property
    def n_ancillas(self) -> int:
        return self.n_pairs if self.layout is Layout.ONE_PER_PAIR else 1

    @property
    def n_qubits(self) -> int:
        return self.n_visible + self.n_hidden + self.n_ancillas

    def ancilla(self, i: int, j: int) -> int:
        base = self.n_visible + self.n_hidden
        return base + (i * self.n_hidden + j if self.layout is Layout.ONE_PER_PAIR else 0)


def _vec(x, shape, name):
    arr = np.array(x, dtype=np.float64).reshape(shape)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"non-finite entries in {name}")
    return arr


@dataclass
class QbmParameters:
    """Biases ``a`` (visible), ``b`` (hidden), weights ``w`` (n x m) and the node ``c``, ``d``.

    ``gamma``/``delta`` are present only for the complex phase node.
    """

    a: np.ndarray
    b: np.ndarray
    w: np.ndarray
    c: np.ndarray
    d: float
    gamma: np.ndarray | None = None
    delta: float | None = None

    def __post_init__(self):
        self.a = _vec(self.a, (-1,), "a")
        self.b = _vec(self.b, (-1,), "b")
        n, m = self.a.size, self.b.size
        self.w = _vec(self.w, (n, m), "w")
        self.c = _vec(self.c, (n,), "c")
        self.d = float(self.d)
        if not math.isfinite(self.d):
            raise ValueError("non-finite d")
        if (self.gamma is None) != (self.delta is None):
            raise ValueError("gamma and delta must be given together")
        if self.gamma is not None:
            self.gamma = _vec(self.gamma, (n,), "gamma")
            self.delta = float(self.delta)
            if not math.isfinite(self.delta):
                raise ValueError("non-finite delta")

    @classmethod
    def zeros(cls, n: int, m: int, d: float = 0.0, phase: bool = False) -> "QbmParameters":
        return cls(np.zeros(n), np.zeros(m), np.zeros((n, m)), np.zeros(n), d,
                   np.zeros(n) if phase else None, 0.0 if phase else None)

    @property
    def n_visible(self) -> int:
        return self.a.size

    @property
    def n_hidden(self) -> int:
        return self.b.size

    @property
    def phase(self) -> bool:
        return self.gamma is not None

    @property
    def size(self) -> int:
        return self.to_vector().size

    def to_vector(self) -> np.ndarray:
        """Flat layout: a, b, w (row-major), c, d[, gamma, delta]."""
        parts = [self.a, self.b, self.w.ravel(), self.c, [self.d]]
        if self.phase:
            parts += [self.gamma, [self.delta]]
        return np.concatenate(parts)

    def from_vector(self, vec) -> "QbmParameters":
        """New parameters of the same shape filled from a flat vector."""
        vec = np.asarray(vec, dtype=np.float64)
        n, m = self.n_visible, self.n_hidden
        cuts = np.cumsum([n, m, n * m, n, 1])
        if vec.shape != (cuts[-1] + (n + 1 if self.phase else 0),):
            raise ValueError("vector length does not match parameter layout")
        a, b, w, c, d, rest = np.split(vec, cuts)
        if self.phase:
            return QbmParameters(a, b, w, c, d[0], rest[:n], rest[n])
        return QbmParameters(a, b, w, c, d[0])

    def to_dict(self) -> dict:
        out = {"a": self.a.tolist(), "b": self.b.tolist(), "w": self.w.tolist(),
               "c": self.c.tolist(), "d": self.d}
        if self.phase:
            out.update(gamma=self.gamma.tolist(), delta=self.delta)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "QbmParameters":
        n = len(data["a"])
        return cls(data["a"], data["b"], np.reshape(data["w"], (n, len(data["b"]))),
                   data["c"], data["d"], data.get("gamma"), data.get("delta"))


@dataclass(frozen=True)
class Regulator:
    """Divisor k >= 1 applied to a, b and w before they become rotation angles."""

    k: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.k) and self.k >= 1.0):
            raise ValueError(f"regulator k must be >= 1, got {self.k}")

    def scale(self, params: QbmParameters) -> QbmParameters:
        if self.k == 1.0:
            return params
        return replace(params, a=params.a / self.k, b=params.b / self.k, w=params.w / self.k)


def regulator_for(params: QbmParameters, mode="off") -> Regulator:
    """``off`` -> k=1, ``auto`` -> k=max(1, sum|w|), a number -> that fixed k."""
    if isinstance(mode, Regulator):
        return mode
    if mode in (None, "off"):
        return Regulator(1.0)
    if mode == "auto":
        return Regulator(max(1.0, float(np.abs(params.w).sum())))
    try:
        k = float(mode)
    except (TypeError, ValueError):
        raise ValueError(f"unknown regulator mode {mode!r}") from None
    return Regulator(k)


def linear_angle(p: float) -> float:
    """Ry angle whose |1> probability is e^-p / (e^p + e^-p).

    Uses tan(theta/2) = e^-p, which stays finite for any |p|.
    """
    if not math.isfinite(p):
        raise ValueError("non-finite parameter")
    if p >= 0:
        return 2.0 * math.atan(math.exp(-p))
    return math.pi - 2.0 * math.atan(math.exp(p))


def coupling_angles(w: float) -> tuple[float, float]:
    """(theta_plus, theta_minus) with sin^2(theta/2) = e^(+-w) / e^|w|."""
    if not math.isfinite(w):
        raise ValueError("non-finite weight")

    def angle(exponent):
        # exponent <= 0; |1> probability r = e^exponent, |0> probability 1 - r
        return 2.0 * math.atan2(math.exp(exponent / 2), math.sqrt(-math.expm1(exponent)))

    return angle(w - abs(w)), angle(-w - abs(w))


_CONTROL_STATES = ((0, 0), (0, 1), (1, 0), (1, 1))


def entangling_layer(v_qubit: int, h_qubit: int, ancilla: int, w: float) -> list[sim.Gate]:
    """Four doubly-controlled Ry gates: theta_plus on even control parity, theta_minus on odd."""
    plus, minus = coupling_angles(w)
    return [sim.ccry(v_qubit, h_qubit, ancilla, plus if cv == ch else minus, (cv, ch))
            for cv, ch in _CONTROL_STATES]


def build_circuit(shape: QbmShape, params: QbmParameters, reg: Regulator | None = None
                  ) -> tuple[sim.Circuit, dict[int, int]]:
    """Circuit plus its post-selection map ``{op index: 1}`` for every ancilla measurement."""
    if (params.n_visible, params.n_hidden) != (shape.n_visible, shape.n_hidden):
        raise ValueError(f"parameters are ({params.n_visible},{params.n_hidden}), "
                         f"shape is ({shape.n_visible},{shape.n_hidden})")
    eff = (reg or Regulator()).scale(params)
    n, m = shape.n_visible, shape.n_hidden
    circ = sim.Circuit(shape.n_qubits)
    circ.extend(sim.ry(i, linear_angle(eff.a[i])) for i in range(n))
    circ.extend(sim.ry(n + j, linear_angle(eff.b[j])) for j in range(m))
    post: dict[int, int] = {}
    reused = shape.layout is Layout.SINGLE_REUSED
    for i in range(n):
        for j in range(m):
            anc = shape.ancilla(i, j)
            circ.extend(entangling_layer(i, n + j, anc, eff.w[i, j]))
            if reused:
                post[len(circ.ops)] = 1
                circ.append(sim.measure(anc, 1))
                circ.append(sim.reset(anc))
    if not reused:
        for i in range(n):
            for j in range(m):
                post[len(circ.ops)] = 1
                circ.append(sim.measure(shape.ancilla(i, j), 1))
    circ.extend(sim.measure(q) for q in range(n + m))
    return circ, post


def _check_cap(n, m, cap):
    if n + m > cap:
        raise ValueError(f"n + m = {n + m} exceeds exact cap {cap}")


def energy_of(config_v, config_h, params: QbmParameters, reg: Regulator | None = None) -> float:
    """E(v, h) = sum a_i v_i + sum b_j h_j + sum w_ij v_i h_j on spins, scaled parameters."""
    v = 1 - 2 * np.asarray(config_v, dtype=np.int64)
    h = 1 - 2 * np.asarray(config_h, dtype=np.int64)
    if v.shape != (params.n_visible,) or h.shape != (params.n_hidden,):
        raise ValueError("configuration length does not match the parameters")
    eff = (reg or Regulator()).scale(params)
    return float(eff.a @ v + eff.b @ h + v @ eff.w @ h)


def joint_log_weights(params: QbmParameters, reg: Regulator | None = None) -> np.ndarray:
    """E(v, h) on the grid, shape (2**n, 2**m)."""
    eff = (reg or Regulator()).scale(params)
    sv, sh = spins(params.n_visible), spins(params.n_hidden)
    return (sv @ eff.a)[:, None] + (sh @ eff.b)[None, :] + sv @ eff.w @ sh.T


def exact_joint_distribution(params: QbmParameters, reg: Regulator | None = None,
                             cap: int = EXACT_CAP) -> np.ndarray:
    """p(v, h) = exp(E(v, h)) / Z by brute force, shape (2**n, 2**m)."""
    _check_cap(params.n_visible, params.n_hidden, cap)
    e = joint_log_weights(params, reg)
    p = np.exp(e - e.max())
    return p / p.sum()


def exact_distribution(params: QbmParameters, reg: Regulator | None = None,
                       cap: int = EXACT_CAP) -> VisibleDistribution:
    """Visible marginal p(v) = sum_h exp(E(v,h)) / Z (log-sum-exp for stability)."""
    _check_cap(params.n_visible, params.n_hidden, cap)
    e = joint_log_weights(params, reg)
    top = e.max()
    logp = top + np.log(np.exp(e - top).sum(axis=1))
    p = np.exp(logp - logp.max())
    return VisibleDistribution(p / p.sum(), params.n_visible, "exact")


def circuit_state(shape: QbmShape, params: QbmParameters, reg: Regulator | None = None):
    circ, post = build_circuit(shape, params, reg)
    return sim.run_exact(circ, post)


def circuit_joint_distribution(shape: QbmShape, params: QbmParameters,
                               reg: Regulator | None = None) -> np.ndarray:
    """p(v, h) read off the post-selected circuit state, shape (2**n, 2**m)."""
    state, _ = circuit_state(shape, params, reg)
    n, m = shape.n_visible, shape.n_hidden
    flat = state.marginal(range(n + m))
    return flat.reshape(1 << m, 1 << n).T


def circuit_distribution(shape: QbmShape, params: QbmParameters,
                         reg: Regulator | None = None) -> VisibleDistribution:
    state, _ = circuit_state(shape, params, reg)
    return VisibleDistribution(state.marginal(range(shape.n_visible)), shape.n_visible, "exact")


def acceptance_rate_exact(shape: QbmShape, params: QbmParameters, reg: Regulator | None = None) -> float:
    """Probability that every ancilla post-selection succeeds."""
    _, success = circuit_state(shape, params, reg)
    return success


@dataclass
class SampledRun:
    distribution: VisibleDistribution
    accepted_shots: int
    rejected_shots: int
    joint_counts: np.ndarray = field(repr=False)

    @property
    def acceptance_rate(self) -> float:
        total = self.accepted_shots + self.rejected_shots
        return self.accepted_shots / total if total else 0.0


def sample_visible(shape: QbmShape, params: QbmParameters, reg: Regulator | None = None, *,
                   shots: int = 1000, seed=0, accepted_target: int | None = None,
                   max_shots: int | None = None) -> SampledRun:
    """Run the circuit shot by shot and histogram the visible readout."""
    circ, post = build_circuit(shape, params, reg)
    res = sim.run_sampled(circ, shots, seed, post, accepted_target=accepted_target,
                          max_shots=max_shots)
    n = shape.n_visible
    # readouts are qubits 0..n+m-1 in order, so the visible part is the low n bits
    keys = np.arange(res.counts.shape[0])
    visible = np.bincount(keys & ((1 << n) - 1), weights=res.counts, minlength=1 << n)
    dist = VisibleDistribution(visible, n, "sampled", res.accepted_shots)
    return SampledRun(dist, res.accepted_shots, res.rejected_shots, res.counts)
