"""Command-line entry point: ``qnt <subcommand> ...``.

Exit codes: 0 ok, 1 oracle check failed, 2 configuration error,
3 simulation error, 4 estimation error. Errors are reported on stderr as a
single JSON object.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .estimators import estimator_for
from .exceptions import DimensionTooLarge, EstimationError, MixedCircuits, QNTError, SingularFIM
from .experiments import ExperimentConfig, run, run_to_files, write_csv
from .fisher import classical_fim, qcrb, qfim_general
from .multicast import MeasurementDatabase, derive_seed, distribution, sample
from .network import StarNetwork
from .oracle import MAX_N, oracle_distribution

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG = 2
EXIT_SIMULATION = 3
EXIT_ESTIMATION = 4

CIRCUIT_VARIANT = {"z": "Z", "ghz": "GHZ"}
ORACLE_DIST_TOL = 1e-9
ORACLE_FIM_TOL = 1e-5


class CommandError(Exception):
    def __init__(self, code, error, message, **extra):
        super().__init__(message)
        self.code = code
        self.payload = {"error": error, "message": message, **extra}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        sys.stderr.write(json.dumps({"error": "usage", "message": message}) + "\n")
        sys.exit(EXIT_CONFIG)


def _config_error(exc):
    return CommandError(EXIT_CONFIG, type(exc).__name__, str(exc))


def _load_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise _config_error(exc)


def load_star(path) -> StarNetwork:
    data = _load_json(path)
    try:
        return StarNetwork.from_dict(data)
    except (KeyError, TypeError, ValueError) as exc:
        raise _config_error(exc)


def _default_seed():
    raw = os.environ.get("QNT_SEED")
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise CommandError(EXIT_CONFIG, "ValueError", f"QNT_SEED is not an integer: {raw!r}")


def _emit(obj, path=None):
    text = json.dumps(obj, indent=2, sort_keys=True) + "\n"
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_simulate(args):
    star = load_star(args.star)
    variant = CIRCUIT_VARIANT[args.circuit]
    seed = _default_seed() if args.seed is None else args.seed
    if args.shots < 0:
        raise CommandError(EXIT_CONFIG, "ValueError", "--shots must be nonnegative")
    try:
        dist = distribution(star, variant)
        if args.shots == 0:
            _emit({"circuit": dist.circuit, "n": dist.n, "basis": variant, "distribution": dist.as_dict()})
            return EXIT_OK
        db = sample(dist, args.shots, seed)
    except QNTError as exc:
        raise CommandError(EXIT_SIMULATION, type(exc).__name__, str(exc))
    if args.out:
        db.to_jsonl(args.out)
    else:
        db.write_jsonl(sys.stdout)
    return EXIT_OK


def cmd_estimate(args):
    try:
        db = MeasurementDatabase.from_jsonl(args.data)
    except (OSError, json.JSONDecodeError, KeyError, ValueError, MixedCircuits) as exc:
        raise _config_error(exc)
    est = estimator_for(args.model, db.variant, **({} if args.model == "flip" else {"fallback": args.fallback}))
    try:
        est.fit(db)
    except EstimationError as exc:
        raise CommandError(EXIT_ESTIMATION, type(exc).__name__, str(exc), circuit=db.circuit, probes=len(db))
    out = est.estimate_set_.to_dict()
    out["selected"] = int(est.selected_)
    out["circuit"] = db.circuit
    out["probes"] = len(db)
    _emit(out, args.out)
    return EXIT_OK


def cmd_qcrb(args):
    star = load_star(args.star)
    variant = CIRCUIT_VARIANT[args.circuit]
    try:
        fim = classical_fim(star, variant)
    except (QNTError, TypeError) as exc:
        raise CommandError(EXIT_SIMULATION, type(exc).__name__, str(exc))
    try:
        value = qcrb(fim)
    except SingularFIM:
        value = None
    _emit({
        "circuit": variant,
        "n": star.n,
        "qcrb": value,
        "singular": value is None,
        "fim": fim.entries.tolist(),
        "parameter_labels": list(fim.parameter_labels),
    })
    return EXIT_OK


def _run_experiment(args, kind):
    data = _load_json(args.config)
    if args.threads is not None:
        data["threads"] = args.threads
    try:
        cfg = ExperimentConfig.from_dict(data)
    except (TypeError, ValueError) as exc:
        raise _config_error(exc)
    if cfg.kind != kind:
        raise CommandError(EXIT_CONFIG, "ValueError", f"config kind {cfg.kind!r} does not match {kind!r}")
    out = args.out or cfg.output_path
    if out:
        run_to_files(cfg, out)
    else:
        write_csv(run(cfg), sys.stdout)
    return EXIT_OK


def cmd_sweep(args):
    return _run_experiment(args, "qcrb_sweep")


def cmd_mse(args):
    return _run_experiment(args, "mse_curve")


def oracle_check(n: int, samples: int, seed: int, low: float = 0.02, high: float = 0.7) -> dict:
    """Compare the fast paths against dense simulation on random stars."""
    if n > MAX_N:
        raise DimensionTooLarge(f"oracle check supports n <= {MAX_N}, got {n}")
    if n < 3:
        raise ValueError(f"a star needs n >= 3, got {n}")
    rng = np.random.Generator(np.random.PCG64(derive_seed(seed, n, samples)))
    dist_dev = 0.0
    fim_dev = 0.0 if n <= 7 else None
    for _ in range(samples):
        star = StarNetwork.depolarizing(rng.uniform(low, high, n))
        for variant, init in (("Z", "single_zero"), ("GHZ", "bell_pair")):
            fast = distribution(star, variant).probs
            slow = oracle_distribution(star, variant).probs
            dist_dev = max(dist_dev, float(np.abs(fast - slow).max()))
            if fim_dev is not None:
                diff = classical_fim(star, variant).entries - qfim_general(star, init).entries
                fim_dev = max(fim_dev, float(np.abs(diff).max()))
    passed = dist_dev < ORACLE_DIST_TOL and (fim_dev is None or fim_dev < ORACLE_FIM_TOL)
    return {
        "n": n,
        "samples": samples,
        "seed": seed,
        "max_distribution_deviation": dist_dev,
        "distribution_tolerance": ORACLE_DIST_TOL,
        "max_fim_deviation": fim_dev,
        "fim_tolerance": ORACLE_FIM_TOL,
        "pass": passed,
    }


def cmd_oracle_check(args):
    seed = _default_seed() if args.seed is None else args.seed
    if args.samples < 1:
        raise CommandError(EXIT_CONFIG, "ValueError", "--samples must be positive")
    try:
        report = oracle_check(args.n, args.samples, seed)
    except (DimensionTooLarge, ValueError) as exc:
        raise _config_error(exc)
    _emit(report)
    return EXIT_OK if report["pass"] else EXIT_CHECK_FAILED


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qnt", description="Quantum network tomography of star networks.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="sample Multicast probes from a star description")
    p.add_argument("--star", required=True)
    p.add_argument("--circuit", choices=sorted(CIRCUIT_VARIANT), default="z")
    p.add_argument("--shots", type=int, required=True, help="0 prints the exact distribution")
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("estimate", help="estimate link parameters from a JSON-lines dataset")
    p.add_argument("--data", required=True)
    p.add_argument("--model", choices=["flip", "depol"], default="depol")
    p.add_argument("--fallback", choices=["raise", "clamp"], default="raise")
    p.add_argument("--out")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("qcrb", help="Fisher matrix and QCRB of a star")
    p.add_argument("--star", required=True)
    p.add_argument("--circuit", choices=sorted(CIRCUIT_VARIANT), default="z")
    p.set_defaults(func=cmd_qcrb)

    for name, func, text in (("sweep", cmd_sweep, "QCRB sweep"), ("mse", cmd_mse, "MSE curve")):
        p = sub.add_parser(name, help=f"run a {text} experiment config")
        p.add_argument("--config", required=True)
        p.add_argument("--out")
        p.add_argument("--threads", type=int, help="worker cap; results do not depend on it")
        p.set_defaults(func=func)

    p = sub.add_parser("oracle-check", help="compare fast paths with dense simulation")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--samples", type=int, default=5)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_oracle_check)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CommandError as exc:
        sys.stderr.write(json.dumps(exc.payload) + "\n")
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
