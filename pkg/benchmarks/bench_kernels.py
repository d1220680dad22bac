"""Compare the numpy and numba kernel backends.

    python benchmarks/bench_kernels.py [--repeat 5] [--shots 20000]

Each case runs once to warm up (JIT compile for numba), then reports the
best of ``--repeat`` timings. Outputs are checked to agree before timing.
"""

import argparse
import time

import numpy as np

from qbmsim import kernels
from qbmsim import model as qbm
from qbmsim import statesim as sim
from qbmsim.pauli import PauliHamiltonian


def best_of(fn, repeat):
    fn()
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def program_case(shape, shots, seed=0):
    rng = np.random.default_rng(seed)
    n, m = shape.n_visible, shape.n_hidden
    params = qbm.QbmParameters(rng.uniform(-1, 1, n), rng.uniform(-1, 1, m),
                               rng.uniform(-1, 1, (n, m)), rng.uniform(-1, 1, n), 0.5)
    circ, post = qbm.build_circuit(shape, params)
    prog = sim.compile_circuit(circ, post)
    u = sim.shot_uniforms(seed, 0, shots, prog.n_draws)
    args = (prog.n_qubits, prog.kinds, prog.targets, prog.cmasks, prog.cvals, prog.mats,
            prog.required, prog.draws, prog.slots, u)
    return lambda backend: backend.run_program(*args)


def pauli_case(n_qubits, n_terms, seed=0):
    rng = np.random.default_rng(seed)
    terms = [(rng.normal(), "".join(rng.choice(list("IXYZ"), n_qubits))) for _ in range(n_terms)]
    H = PauliHamiltonian.from_terms(terms, n_qubits)
    amps = rng.normal(size=H.dim) + 1j * rng.normal(size=H.dim)
    flips, zmasks, coeffs = H._compiled()
    return lambda backend: backend.apply_pauli_sum(amps, flips, zmasks, coeffs)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--shots", type=int, default=20_000)
    args = parser.parse_args()

    backends = {"numpy": kernels.numpy_backend, "numba": kernels.numba_backend()}
    cases = {
        f"run_program (2,2) per-pair, {args.shots} shots": program_case(qbm.QbmShape(2, 2), args.shots),
        f"run_program (2,2) reused, {args.shots} shots": program_case(qbm.QbmShape(2, 2, "reused"), args.shots),
        f"run_program (2,3) reused, {args.shots} shots": program_case(qbm.QbmShape(2, 3, "reused"), args.shots),
        "apply_pauli_sum 12 qubits, 40 terms": pauli_case(12, 40),
        "apply_pauli_sum 16 qubits, 20 terms": pauli_case(16, 20),
    }
    print(f"{'case':<46}{'numpy [ms]':>12}{'numba [ms]':>12}{'speedup':>10}")
    for name, case in cases.items():
        ref, fast = case(backends["numpy"]), case(backends["numba"])
        if isinstance(ref, tuple):
            assert np.array_equal(ref[1], fast[1]) and np.array_equal(ref[0][ref[1]], fast[0][fast[1]])
        else:
            assert np.allclose(ref, fast, atol=1e-10)
        t_np = best_of(lambda: case(backends["numpy"]), args.repeat)
        t_nb = best_of(lambda: case(backends["numba"]), args.repeat)
        print(f"{name:<46}{t_np * 1e3:>12.2f}{t_nb * 1e3:>12.2f}{t_np / t_nb:>9.1f}x")


if __name__ == "__main__":
    main()
