"""Command-line entry point: ``qbmsim {train,exact,resources,validate,sample}``.

Settings come from an optional JSON document (``--config``) overridden by
flags. Output files are written atomically and only after the run succeeded.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import tempfile
import time
from pathlib import Path

import numpy as np

from . import decomposition as dec
from . import model as qbm
from . import optimizer as opt
from . import pauli
from . import validate as val
from .gradients import model_energy
from .statesim import EmptySampleError, PostSelectionError
from .wavefunction import DegenerateWavefunctionError, assemble, bitstring

log = logging.getLogger("qbmsim")

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2, 3

DEFAULTS = {
    "hamiltonian": None, "n_visible": None, "n_hidden": None, "layout": "per-pair",
    "node": "sign", "mode": "exact", "shots": 1000, "accepted_shots": None, "seed": 0,
    "regulator": "off", "eta": 0.05, "max_iters": 2000, "init_scale": 0.1,
    "grad_norm_tol": 1e-6, "energy_change_tol": 1e-10, "out": None, "params": None,
    "trials": 20, "cap": pauli.DENSE_CAP,
}


class UsageError(Exception):
    pass


def _regulator_arg(text):
    if text in ("off", "auto"):
        return text
    try:
        k = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError("regulator must be off, auto or a number >= 1") from None
    if k < 1:
        raise argparse.ArgumentTypeError("regulator k must be >= 1")
    return k


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    add = common.add_argument
    # default=None everywhere so that only flags actually given override the config file
    add("--config", type=Path, help="JSON file with settings (flags win)")
    add("--hamiltonian", type=Path, default=None)
    add("--n-visible", type=int, default=None)
    add("--n-hidden", type=int, default=None)
    add("--layout", choices=["per-pair", "reused", "one_per_pair", "single_reused"], default=None)
    add("--node", choices=["sign", "phase"], default=None)
    add("--mode", choices=["exact", "sampled"], default=None)
    add("--shots", type=int, default=None)
    add("--accepted-shots", type=int, default=None)
    add("--seed", type=int, default=None)
    add("--regulator", type=_regulator_arg, default=None)
    add("--eta", type=float, default=None)
    add("--max-iters", type=int, default=None)
    add("--init-scale", type=float, default=None)
    add("--params", type=Path, default=None, help="JSON parameter file")
    add("--trials", type=int, default=None)
    add("--cap", type=int, default=None, help="qubit cap for the dense reference solver")
    add("--out", type=Path, default=None, help="output directory")

    parser = argparse.ArgumentParser(prog="qbmsim", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("train", parents=[common], help="optimize a QBM against a Hamiltonian")
    sub.add_parser("exact", parents=[common], help="reference ground state by power iteration")
    sub.add_parser("resources", parents=[common], help="gate, width and shot report")
    sub.add_parser("validate", parents=[common], help="run the oracle suites")
    sub.add_parser("sample", parents=[common], help="sample the QBM circuit shot by shot")
    return parser


def resolve_config(args) -> dict:
    cfg = dict(DEFAULTS)
    if args.config is not None:
        try:
            loaded = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from None
        unknown = set(loaded) - set(cfg)
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        cfg.update(loaded)
    for key in cfg:
        value = getattr(args, key, None)
        if value is not None:
            cfg[key] = value
    for key in ("hamiltonian", "out", "params"):
        if cfg[key] is not None:
            cfg[key] = str(cfg[key])
    return cfg


def _load_hamiltonian(cfg):
    if cfg["hamiltonian"] is None:
        raise UsageError("--hamiltonian is required")
    try:
        return pauli.load_hamiltonian(cfg["hamiltonian"])
    except OSError as exc:
        raise UsageError(f"cannot read Hamiltonian: {exc}") from None


def _shape(cfg, n_default=None):
    n = cfg["n_visible"] if cfg["n_visible"] is not None else n_default
    if n is None:
        raise UsageError("--n-visible is required")
    m = cfg["n_hidden"] if cfg["n_hidden"] is not None else n
    return qbm.QbmShape(int(n), int(m), qbm.Layout.parse(cfg["layout"]))


def _train_config(cfg) -> opt.TrainConfig:
    return opt.TrainConfig(
        learning_rate=cfg["eta"], max_iters=cfg["max_iters"], grad_norm_tol=cfg["grad_norm_tol"],
        energy_change_tol=cfg["energy_change_tol"], seed=cfg["seed"], init_scale=cfg["init_scale"],
        mode=cfg["mode"], shots=cfg["shots"], regulator=cfg["regulator"], node=cfg["node"])


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def write_outputs(out_dir, files: dict[str, str]) -> None:
    """Write every file to a temporary name first, then rename into place."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    staged = []
    try:
        for name, text in files.items():
            fd, tmp = tempfile.mkstemp(dir=out, prefix=f".{name}.", suffix=".tmp")
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                fh.write(text)
            staged.append((tmp, out / name))
        for tmp, final in staged:
            os.replace(tmp, final)
    finally:
        for tmp, _ in staged:
            if os.path.exists(tmp):
                os.unlink(tmp)


def _load_params(cfg, shape):
    if cfg["params"] is None:
        tc = _train_config(cfg)
        return opt.initialize(shape, tc)
    try:
        data = json.loads(Path(cfg["params"]).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read parameters: {exc}") from None
    params = qbm.QbmParameters.from_dict(data.get("params", data))
    if (params.n_visible, params.n_hidden) != (shape.n_visible, shape.n_hidden):
        raise UsageError("parameter file does not match --n-visible/--n-hidden")
    return params


def cmd_train(cfg) -> int:
    H = _load_hamiltonian(cfg)
    shape = _shape(cfg, H.n_qubits)
    tc = _train_config(cfg)
    params = _load_params(cfg, shape) if cfg["params"] else None
    started = time.time()

    def emit(row):
        print(json.dumps({"iter": row.iter, "energy": row.energy, "grad_norm": row.grad_norm,
                          "acceptance_rate": row.acceptance_rate,
                          "flagged_samples": row.flagged_samples,
                          "elapsed_ms": round(row.elapsed_ms, 3)}), flush=True)

    result = opt.train(H, shape, tc, params, on_iteration=emit)
    reg = qbm.regulator_for(result.params, tc.regulator)
    model_psi = assemble(qbm.exact_distribution(result.params, reg), result.params.c,
                         result.params.d, result.params.gamma, result.params.delta)
    summary = {
        "final_energy": result.energy,
        "model_energy": model_energy(H, result.params, reg),
        "iterations": len(result.trace),
        "stop_reason": result.stop_reason,
        "acceptance_rate": result.final_acceptance,
        "params": result.params.to_dict(),
        "regulator_k": reg.k,
    }
    if H.n_qubits <= cfg["cap"]:
        gs = pauli.ground_state_exact(H, cap=cfg["cap"])
        summary.update(
            exact_ground_energy=gs.energy,
            energy_gap=result.energy - gs.energy,
            fidelity=float(abs(np.vdot(gs.state, model_psi.amplitudes)) ** 2),
            exact_converged=gs.converged,
        )
    trace = "".join(json.dumps(opt.trace_record(r), sort_keys=True) + "\n" for r in result.trace)
    meta = {"started_unix": started, "elapsed_ms": [round(r.elapsed_ms, 3) for r in result.trace]}
    files = {
        "config.json": _dumps(cfg),
        "trace.jsonl": trace,
        "summary.json": _dumps(summary),
        "wavefunction.txt": result.wavefunction.to_text(),
        "meta.json": _dumps(meta),
    }
    if cfg["out"]:
        write_outputs(cfg["out"], files)
    print(_dumps(summary), end="")
    return EXIT_OK


def _top_states(state, n, k=8):
    probs = np.abs(state) ** 2
    order = np.argsort(-probs, kind="stable")[:k]
    return [(bitstring(int(v), n), float(probs[v]), complex(state[v])) for v in order if probs[v] > 1e-12]


def cmd_exact(cfg) -> int:
    H = _load_hamiltonian(cfg)
    gs = pauli.ground_state_exact(H, cap=cfg["cap"])
    rng = np.random.default_rng(cfg["seed"])
    x, y = (rng.normal(size=(2, H.dim)) + 1j * rng.normal(size=(2, H.dim)))
    herm = abs(np.vdot(x, pauli.apply_hamiltonian(H, y)) - np.conj(np.vdot(y, pauli.apply_hamiltonian(H, x))))
    if herm > 1e-9 * max(1.0, H.norm_bound) * H.dim:
        raise RuntimeError(f"Hamiltonian is not Hermitian (mismatch {herm:.3g})")
    top = _top_states(gs.state, H.n_qubits)
    print(f"ground_energy: {gs.energy!r}")
    print(f"converged: {gs.converged} after {gs.iterations} iterations")
    for bits, prob, amp in top:
        print(f"  {bits}  p={prob:.6f}  amp={amp.real:+.6f}{amp.imag:+.6f}j")
    if cfg["out"]:
        summary = {"ground_energy": gs.energy, "converged": gs.converged,
                   "iterations": gs.iterations,
                   "top_states": [{"bits": b, "probability": p} for b, p, _ in top]}
        write_outputs(cfg["out"], {"exact.json": _dumps(summary)})
    return EXIT_OK


def cmd_resources(cfg) -> int:
    shape = _shape(cfg)
    report = dec.resource_report(shape, cfg["node"])
    print(report.to_text(), end="")
    print(json.dumps(report.to_dict(), sort_keys=True))
    if cfg["out"]:
        write_outputs(cfg["out"], {"resources.json": _dumps(report.to_dict())})
    return EXIT_OK


def cmd_validate(cfg) -> int:
    results = val.run_all(seed=cfg["seed"], trials=cfg["trials"])
    if cfg["trials"] == 0:
        print("warning: 0 trials requested; suites pass vacuously")
    for res in results:
        print(res.line())
    return EXIT_OK if all(r.passed for r in results) else EXIT_FAIL


def cmd_sample(cfg) -> int:
    shape = _shape(cfg)
    params = _load_params(cfg, shape)
    reg = qbm.regulator_for(params, cfg["regulator"])
    run = qbm.sample_visible(shape, params, reg, shots=cfg["shots"], seed=cfg["seed"],
                             accepted_target=cfg["accepted_shots"])
    summary = {
        "counts": {k: int(v) for k, v in run.distribution.as_dict().items()},
        "accepted_shots": run.accepted_shots,
        "rejected_shots": run.rejected_shots,
        "acceptance_rate": run.acceptance_rate,
        "regulator_k": reg.k,
        "params": params.to_dict(),
    }
    if shape.n_visible + shape.n_hidden <= qbm.EXACT_CAP:
        exact = qbm.exact_distribution(params, reg)
        summary["tv_distance"] = run.distribution.total_variation(exact)
        summary["exact_acceptance_rate"] = qbm.acceptance_rate_exact(shape, params, reg)
    if cfg["out"]:
        write_outputs(cfg["out"], {"config.json": _dumps(cfg), "sample.json": _dumps(summary)})
    print(_dumps(summary), end="")
    return EXIT_OK


COMMANDS = {"train": cmd_train, "exact": cmd_exact, "resources": cmd_resources,
            "validate": cmd_validate, "sample": cmd_sample}


def main(argv=None) -> int:
    level = getattr(logging, os.environ.get("QBM_LOG", "WARNING").upper(), logging.WARNING)
    if not isinstance(level, int):
        level = logging.WARNING
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
        return COMMANDS[args.command](cfg)
    except (UsageError, pauli.HamiltonianError, pauli.QubitCapError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DegenerateWavefunctionError, EmptySampleError, PostSelectionError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
