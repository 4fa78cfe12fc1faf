"""Config-driven QCRB sweeps and Monte Carlo MSE curves.

Both runs emit rows with the CSV header::

    kind,n,variant,theta_star,x,value,trials,failures,seed

For QCRB sweeps ``x`` is the uniform link parameter and ``value`` the QCRB
per distributed state, or ``singular``. For MSE curves ``x`` is the number
of probes and ``value`` the mean over trials of the per-link averaged
squared error.
"""

from __future__ import annotations

import csv
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import List, Optional

import numpy as np

from .estimators import (
    _moments_from_bits,
    estimate_depolarizing_ghz,
    estimate_depolarizing_z,
    select_candidate,
)
from .exceptions import EstimationError, SingularDistribution, SingularFIM
from .fisher import classical_fim, qcrb
from .multicast import check_variant, derive_seed, draw_indices, outcome_bits, outcome_table
from .network import StarNetwork

CSV_HEADER = ("kind", "n", "variant", "theta_star", "x", "value", "trials", "failures", "seed")
KINDS = ("qcrb_sweep", "mse_curve")
VARIANT_CODE = {"Z": 0, "GHZ": 1}
SINGULAR_THETA = 0.75

DEFAULT_THETA_GRID = [round(0.05 * k, 2) for k in range(1, 15)] + [0.74]
DEFAULT_SAMPLE_POINTS = [100, 200, 500] + [1000 * k for k in range(1, 11)]


@dataclass
class ExperimentConfig:
    kind: str
    sizes: List[int] = field(default_factory=lambda: [4, 5, 6, 7])
    variants: List[str] = field(default_factory=lambda: ["Z", "GHZ"])
    theta_grid: List[float] = field(default_factory=lambda: list(DEFAULT_THETA_GRID))
    include_singular: bool = False
    theta_star: float = 0.1
    sample_points: List[int] = field(default_factory=lambda: list(DEFAULT_SAMPLE_POINTS))
    trials: int = 200
    seed: int = 0
    output_path: Optional[str] = None
    threads: int = 1

    def __post_init__(self):
        self.kind = {"qcrbsweep": "qcrb_sweep", "msecurve": "mse_curve"}.get(
            self.kind.lower().replace("_", "").replace("-", ""), self.kind
        )
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")
        self.sizes = [int(n) for n in self.sizes]
        if not self.sizes or any(n < 3 or n > 8 for n in self.sizes):
            raise ValueError(f"sizes must lie in 3..8, got {self.sizes}")
        self.variants = [check_variant(v) for v in self.variants]
        self.theta_grid = [float(t) for t in self.theta_grid]
        if self.include_singular and SINGULAR_THETA not in self.theta_grid:
            self.theta_grid.append(SINGULAR_THETA)
        if any(not 0 < t <= SINGULAR_THETA for t in self.theta_grid):
            raise ValueError("theta_grid values must lie in (0, 0.75]")
        self.theta_star = float(self.theta_star)
        if not 0 <= self.theta_star <= SINGULAR_THETA:
            raise ValueError("theta_star must lie in [0, 0.75]")
        self.sample_points = [int(s) for s in self.sample_points]
        if not self.sample_points or self.sample_points[0] < 1 or any(
            a >= b for a, b in zip(self.sample_points, self.sample_points[1:])
        ):
            raise ValueError("sample_points must be positive and strictly ascending")
        self.trials = int(self.trials)
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        self.seed = int(self.seed)
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        self.threads = max(1, int(self.threads))

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


@dataclass(frozen=True)
class ResultRow:
    kind: str
    n: int
    variant: str
    theta_star: float
    x: float
    value: Optional[float]
    trials: int
    failures: int
    seed: int

    @property
    def singular(self) -> bool:
        return self.value is None

    def sort_key(self):
        return (self.kind, self.n, self.variant, self.theta_star, self.x)

    def as_strings(self) -> list:
        return [
            self.kind,
            str(self.n),
            self.variant,
            repr(float(self.theta_star)),
            repr(self.x),
            "singular" if self.value is None else repr(float(self.value)),
            str(self.trials),
            str(self.failures),
            str(self.seed),
        ]


def _qcrb_value(n, variant, theta):
    if theta == SINGULAR_THETA:
        return None
    try:
        return qcrb(classical_fim(StarNetwork.uniform(n, theta), variant))
    except (SingularFIM, SingularDistribution):
        return None


def run_qcrb_sweep(cfg: ExperimentConfig) -> List[ResultRow]:
    """QCRB of the uniform star for every (n, variant, theta)."""
    if cfg.kind != "qcrb_sweep":
        raise ValueError(f"expected a qcrb_sweep config, got {cfg.kind!r}")
    rows = []
    for n in cfg.sizes:
        for variant in cfg.variants:
            for theta in cfg.theta_grid:
                value = _qcrb_value(n, variant, theta)
                rows.append(ResultRow("qcrb_sweep", n, variant, theta, theta, value, 1,
                                      int(value is None), cfg.seed))
    return sorted(rows, key=ResultRow.sort_key)


def _estimate(bits, counts, variant, n, count):
    """Estimate from outcome counts; returns (theta_hat, failed)."""
    moments = _moments_from_bits(bits, variant, counts, count)
    fn = estimate_depolarizing_z if variant == "Z" else estimate_depolarizing_ghz
    try:
        est = fn(moments, n, fallback="clamp")
    except EstimationError:
        # non-identifiable moments: report the maximally mixed point
        return np.full(n, SINGULAR_THETA), True
    failed = any(not f.startswith("clamped") for f in est.flags)
    return est.candidates[select_candidate(est, counts, variant)], failed


def mse_point(n: int, variant: str, theta_star: float, count: int, trials: int, seed: int):
    """Mean squared error and failure count for one (n, variant, S) point.

    Trial ``t`` draws its probes with seed ``derive_seed(seed, n, v, S, t)``
    so results do not depend on evaluation order or worker count.
    """
    variant = check_variant(variant)
    star = StarNetwork.uniform(n, theta_star)
    probs = outcome_table(star.weight_matrix(), variant)
    bits = outcome_bits(variant, n)
    errors = np.empty(trials)
    failures = 0
    for t in range(trials):
        trial_seed = derive_seed(seed, n, VARIANT_CODE[variant], count, t)
        idx = draw_indices(probs, count, trial_seed)
        counts = np.bincount(idx, minlength=probs.size)
        theta_hat, failed = _estimate(bits, counts, variant, n, count)
        failures += failed
        errors[t] = np.mean((theta_hat - theta_star) ** 2)
    return float(errors.mean()), failures


def _mse_task(args):
    n, variant, theta_star, count, trials, seed = args
    value, failures = mse_point(n, variant, theta_star, count, trials, seed)
    return ResultRow("mse_curve", n, variant, theta_star, count, value, trials, failures, seed)


def run_mse_curve(cfg: ExperimentConfig) -> List[ResultRow]:
    """Monte Carlo MSE versus probe count for every (n, variant)."""
    if cfg.kind != "mse_curve":
        raise ValueError(f"expected an mse_curve config, got {cfg.kind!r}")
    tasks = [
        (n, v, cfg.theta_star, s, cfg.trials, cfg.seed)
        for n in cfg.sizes
        for v in cfg.variants
        for s in cfg.sample_points
    ]
    if cfg.threads > 1:
        with ProcessPoolExecutor(max_workers=cfg.threads) as pool:
            rows = list(pool.map(_mse_task, tasks))
    else:
        rows = [_mse_task(t) for t in tasks]
    return sorted(rows, key=ResultRow.sort_key)


def run(cfg: ExperimentConfig) -> List[ResultRow]:
    return run_qcrb_sweep(cfg) if cfg.kind == "qcrb_sweep" else run_mse_curve(cfg)


def write_csv(rows, fh) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for row in sorted(rows, key=ResultRow.sort_key):
        writer.writerow(row.as_strings())


def metadata(cfg: ExperimentConfig, wall_time: float) -> dict:
    from . import __version__

    notes = {
        "qcrb_sweep": "value = trace of inverse Fisher matrix per distributed state",
        "mse_curve": "value = mean over trials of the per-link mean squared error",
    }
    return {
        "toolkit": "qnt",
        "version": __version__,
        "config": asdict(cfg),
        "aggregation": notes[cfg.kind],
        "wall_time_s": wall_time,
    }


def run_to_files(cfg: ExperimentConfig, output_path=None) -> List[ResultRow]:
    """Run ``cfg`` and write the CSV plus a ``.meta.json`` sidecar."""
    path = output_path or cfg.output_path
    if not path:
        raise ValueError("no output_path configured")
    start = time.perf_counter()
    rows = run(cfg)
    wall = time.perf_counter() - start
    with open(path, "w", encoding="utf-8", newline="") as fh:
        write_csv(rows, fh)
    with open(str(path) + ".meta.json", "w", encoding="utf-8") as fh:
        json.dump(metadata(cfg, wall), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return rows
