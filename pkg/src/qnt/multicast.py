"""Exact outcome distributions of the Multicast circuit and sampling from them.

Each link applies a Pauli error drawn from its (I, X, Y, Z) weights. Only two
features of that error matter for the distributed states: whether it flips
the computational-basis bit (X, Y) and whether it flips the GHZ sign (Y, Z).
A bit flip on the root link is copied to every leaf by the CNOT fan-out.

Outcome encodings
-----------------
Z variant: ``n - 1`` leaf bits, leaf 1 first. Table index ``k`` has leaf 1 as
its most significant bit.

GHZ variant: sign bit ``b`` followed by ``n - 1`` bits ``s`` taken relative
to the root qubit, i.e. basis state ``(|0,s> + (-1)^b |1,~s>) / sqrt(2)``.
Table index is ``b * 2**(n-1) + int(s, 2)``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np

from .exceptions import MixedCircuits
from .network import StarNetwork

VARIANTS = ("Z", "GHZ")
CIRCUITS = {"Z": "multicast_z", "GHZ": "multicast_ghz"}
VARIANT_OF_CIRCUIT = {v: k for k, v in CIRCUITS.items()}

SUM_TOL = 1e-10
SAMPLE_BLOCK = 1 << 16


def check_variant(variant: str) -> str:
    v = str(variant).upper()
    if v not in VARIANTS:
        raise ValueError(f"variant must be one of {VARIANTS}, got {variant!r}")
    return v


def bit_table(width: int) -> np.ndarray:
    """All ``2**width`` bit strings as rows, most significant bit first."""
    k = np.arange(1 << width)
    shifts = np.arange(width - 1, -1, -1)
    return ((k[:, None] >> shifts) & 1).astype(np.int8)


def outcome_bits(variant: str, n: int) -> np.ndarray:
    """Bit rows labelling each table entry (``b`` first for GHZ)."""
    if check_variant(variant) == "Z":
        return bit_table(n - 1)
    return bit_table(n)


def z_table(weights: np.ndarray) -> np.ndarray:
    """Z-basis outcome table for an ``(n, 4)`` array of link weights.

    The map is linear in every row, so passing a derivative row in place of
    a link's weights yields the partial derivative of the table.
    """
    w = np.asarray(weights, dtype=float)
    flip = w[:, 1] + w[:, 2]
    keep = w[:, 0] + w[:, 3]
    x = bit_table(w.shape[0] - 1).astype(bool)
    root_keep = np.where(x, flip[1:], keep[1:]).prod(axis=1)
    root_flip = np.where(x, keep[1:], flip[1:]).prod(axis=1)
    return keep[0] * root_keep + flip[0] * root_flip


def ghz_table(weights: np.ndarray) -> np.ndarray:
    """GHZ-basis outcome table for an ``(n, 4)`` array of link weights.

    Per link the joint (bit, phase) events are I=(0,0), X=(1,0), Y=(1,1),
    Z=(0,1). Writing ``A(f)`` for the bit marginal and ``D(f)`` for the
    phase-signed bit marginal, ``P(b, s) = 1/2 sum_f0 [prod A + (-1)^b prod D]``.
    """
    w = np.asarray(weights, dtype=float)
    n = w.shape[0]
    a = np.stack([w[:, 0] + w[:, 3], w[:, 1] + w[:, 2]], axis=1)
    d = np.stack([w[:, 0] - w[:, 3], w[:, 1] - w[:, 2]], axis=1)
    s = bit_table(n - 1)
    leaves = np.arange(1, n)
    total_a = np.zeros(len(s))
    total_d = np.zeros(len(s))
    for f0 in (0, 1):
        f = s ^ f0
        total_a += a[0, f0] * a[leaves, f].prod(axis=1)
        total_d += d[0, f0] * d[leaves, f].prod(axis=1)
    return 0.5 * np.concatenate([total_a + total_d, total_a - total_d])


def outcome_table(weights: np.ndarray, variant: str) -> np.ndarray:
    if check_variant(variant) == "Z":
        return z_table(weights)
    return ghz_table(weights)


@dataclass(frozen=True)
class OutcomeDistribution:
    """Exact probability table over the outcomes of one variant."""

    variant: str
    n: int
    probs: np.ndarray = field(repr=False)

    def __post_init__(self):
        variant = check_variant(self.variant)
        object.__setattr__(self, "variant", variant)
        probs = np.asarray(self.probs, dtype=float)
        size = 1 << (self.n - 1 if variant == "Z" else self.n)
        if probs.shape != (size,):
            raise ValueError(f"expected {size} probabilities, got shape {probs.shape}")
        if np.any(probs < -SUM_TOL):
            raise ValueError("negative probability in outcome table")
        probs = np.clip(probs, 0.0, None)
        if abs(probs.sum() - 1.0) > SUM_TOL:
            raise ValueError(f"outcome table sums to {probs.sum()!r}")
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)

    @property
    def circuit(self) -> str:
        return CIRCUITS[self.variant]

    @property
    def bits(self) -> np.ndarray:
        return outcome_bits(self.variant, self.n)

    def labels(self) -> list:
        return [format_outcome(self.variant, row) for row in self.bits]

    def as_dict(self) -> dict:
        return dict(zip(self.labels(), self.probs.tolist()))

    def marginal_parities(self) -> np.ndarray:
        """Exact ``E[(-1)^bit]`` for every bit column."""
        return (1 - 2 * self.bits.astype(float)).T @ self.probs


def format_outcome(variant: str, row) -> str:
    bits = "".join(str(int(v)) for v in row)
    if variant == "Z":
        return bits
    return f"b={bits[0]},s={bits[1:]}"


def outcome_record(variant: str, row) -> dict:
    bits = "".join(str(int(v)) for v in row)
    if variant == "Z":
        return {"bits": bits}
    return {"b": int(bits[0]), "s": bits[1:]}


def z_distribution(star: StarNetwork) -> OutcomeDistribution:
    return OutcomeDistribution("Z", star.n, z_table(star.weight_matrix()))


def ghz_distribution(star: StarNetwork) -> OutcomeDistribution:
    return OutcomeDistribution("GHZ", star.n, ghz_table(star.weight_matrix()))


def distribution(star: StarNetwork, variant: str) -> OutcomeDistribution:
    if check_variant(variant) == "Z":
        return z_distribution(star)
    return ghz_distribution(star)


def derive_seed(seed: int, *keys: int) -> int:
    """Stable 64-bit child seed for ``(seed, *keys)``.

    Uses numpy's SeedSequence hashing, so the result does not depend on
    process, platform or ``PYTHONHASHSEED``.
    """
    ss = np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, *(int(k) for k in keys)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def draw_indices(probs: np.ndarray, count: int, seed: int) -> np.ndarray:
    """Draw ``count`` table indices i.i.d. from ``probs``.

    Draws come in fixed-size blocks, each from its own derived PCG64 stream,
    so any split of blocks across workers gives the same sequence.
    """
    cdf = np.cumsum(probs)
    cdf /= cdf[-1]
    out = np.empty(count, dtype=np.int64)
    for block, start in enumerate(range(0, count, SAMPLE_BLOCK)):
        stop = min(start + SAMPLE_BLOCK, count)
        rng = np.random.Generator(np.random.PCG64(derive_seed(seed, block)))
        u = rng.random(stop - start)
        out[start:stop] = np.searchsorted(cdf, u, side="right")
    np.minimum(out, len(probs) - 1, out=out)
    return out


@dataclass
class MeasurementDatabase:
    """Sampled outcomes of one circuit/basis pair.

    ``outcomes`` holds one row per probe: leaf bits for the Z variant, or the
    sign bit followed by ``s`` for the GHZ variant.
    """

    circuit: str
    n: int
    outcomes: np.ndarray
    seeds: np.ndarray
    indices: np.ndarray

    def __post_init__(self):
        if self.circuit not in VARIANT_OF_CIRCUIT:
            raise ValueError(f"unknown circuit {self.circuit!r}")
        self.outcomes = np.asarray(self.outcomes, dtype=np.int8).reshape(-1, self.width)
        self.seeds = np.asarray(self.seeds, dtype=np.uint64).reshape(-1)
        self.indices = np.asarray(self.indices, dtype=np.uint64).reshape(-1)
        if not (len(self.outcomes) == len(self.seeds) == len(self.indices)):
            raise ValueError("outcomes, seeds and indices must have equal length")

    @property
    def variant(self) -> str:
        return VARIANT_OF_CIRCUIT[self.circuit]

    @property
    def basis(self) -> str:
        return self.variant

    @property
    def width(self) -> int:
        return self.n - 1 if self.variant == "Z" else self.n

    def __len__(self) -> int:
        return len(self.outcomes)

    def records(self) -> Iterator[dict]:
        variant = self.variant
        for row, seed, index in zip(self.outcomes, self.seeds, self.indices):
            yield {
                "circuit": self.circuit,
                "n": self.n,
                "basis": variant,
                "outcome": outcome_record(variant, row),
                "seed": int(seed),
                "index": int(index),
            }

    def write_jsonl(self, fh) -> None:
        for rec in self.records():
            fh.write(json.dumps(rec, separators=(",", ":")) + "\n")

    def to_jsonl(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            self.write_jsonl(fh)

    @classmethod
    def from_records(cls, records: Iterable[dict]) -> "MeasurementDatabase":
        records = list(records)
        if not records:
            raise ValueError("no records")
        tags = {(r["circuit"], int(r["n"]), r.get("basis")) for r in records}
        if len(tags) != 1:
            raise MixedCircuits(f"records mix circuits/bases: {sorted(map(str, tags))}")
        circuit, n, basis = tags.pop()
        variant = VARIANT_OF_CIRCUIT[circuit]
        if basis is not None and basis != variant:
            raise MixedCircuits(f"circuit {circuit} measured in basis {basis}")
        rows = []
        for r in records:
            out = r["outcome"]
            bits = out["bits"] if variant == "Z" else str(int(out["b"])) + out["s"]
            rows.append([int(c) for c in bits])
        return cls(
            circuit,
            n,
            np.array(rows, dtype=np.int8),
            np.array([int(r.get("seed", 0)) for r in records], dtype=np.uint64),
            np.array([int(r.get("index", i)) for i, r in enumerate(records)], dtype=np.uint64),
        )

    @classmethod
    def from_jsonl(cls, path) -> "MeasurementDatabase":
        with open(path, encoding="utf-8") as fh:
            return cls.from_records(json.loads(line) for line in fh if line.strip())

    @classmethod
    def concatenate(cls, fragments: Sequence["MeasurementDatabase"]) -> "MeasurementDatabase":
        fragments = list(fragments)
        tags = {(f.circuit, f.n) for f in fragments}
        if len(tags) > 1:
            raise MixedCircuits(f"fragments mix circuits: {sorted(map(str, tags))}")
        first = fragments[0]
        return cls(
            first.circuit,
            first.n,
            np.concatenate([f.outcomes for f in fragments]),
            np.concatenate([f.seeds for f in fragments]),
            np.concatenate([f.indices for f in fragments]),
        )


def sample(dist: OutcomeDistribution, count: int, seed: int) -> MeasurementDatabase:
    """Draw ``count`` i.i.d. probes from ``dist``; deterministic in ``seed``."""
    count = int(count)
    if count < 1:
        raise ValueError(f"count must be positive, got {count}")
    idx = draw_indices(dist.probs, count, seed)
    return MeasurementDatabase(
        dist.circuit,
        dist.n,
        dist.bits[idx],
        np.full(count, int(seed) & 0xFFFFFFFFFFFFFFFF, dtype=np.uint64),
        np.arange(count, dtype=np.uint64),
    )
