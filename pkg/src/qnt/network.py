"""Star topologies with per-link single-qubit Pauli noise.

Links are indexed with 0 for the root-to-hub link and ``i`` in ``1..n-1``
for the hub-to-leaf ``i`` link. Every downstream module relies on this
order.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence, Union

import numpy as np

from .exceptions import InvalidCandidate

PROB_TOL = 1e-12

#: Order of the Pauli weight vectors used everywhere: (I, X, Y, Z).
PAULI_LABELS = ("I", "X", "Y", "Z")


def _check_probability(value, name):
    value = float(value)
    if not (-PROB_TOL <= value <= 1 + PROB_TOL) or np.isnan(value):
        raise ValueError(f"{name} must lie in [0, 1], got {value!r}")
    return min(max(value, 0.0), 1.0)


@dataclass(frozen=True)
class PauliProbs:
    """Weights of I, X, Y, Z in a single-qubit Pauli channel."""

    p_I: float
    p_X: float
    p_Y: float
    p_Z: float

    def __post_init__(self):
        values = self.as_array()
        if np.any(values < -PROB_TOL) or np.any(np.isnan(values)):
            raise ValueError(f"Pauli weights must be nonnegative, got {tuple(values)}")
        if abs(values.sum() - 1.0) > PROB_TOL:
            raise ValueError(f"Pauli weights must sum to 1, got {values.sum()!r}")

    def as_array(self) -> np.ndarray:
        return np.array([self.p_I, self.p_X, self.p_Y, self.p_Z], dtype=float)


@dataclass(frozen=True)
class BitFlip:
    p: float

    kind = "bitflip"

    def __post_init__(self):
        object.__setattr__(self, "p", _check_probability(self.p, "p"))

    @property
    def parameter(self) -> float:
        return self.p

    def with_parameter(self, value: float) -> "BitFlip":
        return BitFlip(value)

    def weights(self) -> np.ndarray:
        return np.array([1.0 - self.p, self.p, 0.0, 0.0])

    def weight_derivative(self) -> np.ndarray:
        return np.array([-1.0, 1.0, 0.0, 0.0])

    def to_dict(self) -> dict:
        return {"kind": self.kind, "params": {"p": self.p}}


@dataclass(frozen=True)
class Depolarizing:
    theta: float

    kind = "depolarizing"

    def __post_init__(self):
        object.__setattr__(self, "theta", _check_probability(self.theta, "theta"))

    @property
    def parameter(self) -> float:
        return self.theta

    def with_parameter(self, value: float) -> "Depolarizing":
        return Depolarizing(value)

    def weights(self) -> np.ndarray:
        t = self.theta
        return np.array([1.0 - t, t / 3.0, t / 3.0, t / 3.0])

    def weight_derivative(self) -> np.ndarray:
        return np.array([-1.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0])

    def to_dict(self) -> dict:
        return {"kind": self.kind, "params": {"theta": self.theta}}


@dataclass(frozen=True)
class GeneralPauli:
    """Arbitrary Pauli channel. Carries no scalar parameter."""

    probs: PauliProbs

    kind = "pauli"

    @property
    def parameter(self) -> float:
        raise TypeError("a general Pauli channel has no single scalar parameter")

    def with_parameter(self, value: float):
        raise TypeError("a general Pauli channel has no single scalar parameter")

    def weights(self) -> np.ndarray:
        return self.probs.as_array()

    def weight_derivative(self) -> np.ndarray:
        raise TypeError("a general Pauli channel has no single scalar parameter")

    def to_dict(self) -> dict:
        p = self.probs
        return {"kind": self.kind, "params": {"p_I": p.p_I, "p_X": p.p_X, "p_Y": p.p_Y, "p_Z": p.p_Z}}


LinkChannel = Union[BitFlip, Depolarizing, GeneralPauli]


def link_from_dict(spec: dict) -> LinkChannel:
    """Build a link channel from ``{"kind": ..., "params": {...}}``."""
    kind = str(spec.get("kind", "")).lower()
    params = spec.get("params", {})
    if kind in ("bitflip", "bit_flip", "flip"):
        return BitFlip(params["p"])
    if kind in ("depolarizing", "depol"):
        return Depolarizing(params["theta"])
    if kind in ("pauli", "general_pauli", "generalpauli"):
        return GeneralPauli(PauliProbs(params["p_I"], params["p_X"], params["p_Y"], params["p_Z"]))
    raise ValueError(f"unknown link kind {spec.get('kind')!r}")


def pauli_probs(channel: LinkChannel) -> PauliProbs:
    if isinstance(channel, GeneralPauli):
        return channel.probs
    return PauliProbs(*channel.weights())


def flip_probability(channel: LinkChannel) -> float:
    """Probability that the link flips a computational-basis qubit (X or Y)."""
    w = channel.weights()
    return float(w[1] + w[2])


def phase_flip_probability(channel: LinkChannel) -> float:
    """Probability that the link applies a sign flip (Y or Z)."""
    w = channel.weights()
    return float(w[2] + w[3])


def depolarizing_to_flip(theta: float) -> float:
    """No-flip weight of the bit-flip channel equivalent to ``Depolarizing(theta)`` on ``|0>``."""
    theta = _check_probability(theta, "theta")
    return 1.0 - 2.0 * theta / 3.0


def flip_to_depolarizing(theta_f: float) -> float:
    """Inverse of :func:`depolarizing_to_flip`, defined for ``theta_f`` in [1/3, 1]."""
    theta_f = float(theta_f)
    if theta_f < 1.0 / 3.0 - PROB_TOL:
        raise InvalidCandidate(f"theta_f={theta_f!r} < 1/3 has no depolarizing counterpart")
    if theta_f > 1.0 + PROB_TOL:
        raise InvalidCandidate(f"theta_f={theta_f!r} exceeds 1")
    return 1.5 * (1.0 - theta_f)


@dataclass(frozen=True)
class StarNetwork:
    """Root, hub and ``n - 1`` leaves; ``links[0]`` is the root link.

    Parameters
    ----------
    n : int
        Number of end nodes (root plus leaves), at least 3.
    links : sequence of LinkChannel
        Exactly ``n`` channels in link-index order.
    """

    n: int
    links: tuple

    def __post_init__(self):
        links = tuple(self.links)
        object.__setattr__(self, "links", links)
        if int(self.n) != self.n or self.n < 3:
            raise ValueError(f"a star needs n >= 3 end nodes, got {self.n!r}")
        if len(links) != self.n:
            raise ValueError(f"expected {self.n} links, got {len(links)}")
        for link in links:
            if not isinstance(link, (BitFlip, Depolarizing, GeneralPauli)):
                raise TypeError(f"not a link channel: {link!r}")

    @classmethod
    def depolarizing(cls, thetas: Iterable[float]) -> "StarNetwork":
        links = tuple(Depolarizing(t) for t in thetas)
        return cls(len(links), links)

    @classmethod
    def bitflip(cls, ps: Iterable[float]) -> "StarNetwork":
        links = tuple(BitFlip(p) for p in ps)
        return cls(len(links), links)

    @classmethod
    def uniform(cls, n: int, theta: float) -> "StarNetwork":
        return cls.depolarizing([theta] * n)

    @classmethod
    def from_dict(cls, spec: dict) -> "StarNetwork":
        links = tuple(link_from_dict(item) for item in spec["links"])
        n = int(spec.get("n", len(links)))
        return cls(n, links)

    def to_dict(self) -> dict:
        return {"n": self.n, "links": [link.to_dict() for link in self.links]}

    def weight_matrix(self) -> np.ndarray:
        """``(n, 4)`` array of (I, X, Y, Z) weights, one row per link."""
        return np.stack([link.weights() for link in self.links])

    def parameters(self) -> np.ndarray:
        return np.array([link.parameter for link in self.links], dtype=float)

    def with_parameter(self, index: int, value: float) -> "StarNetwork":
        links = list(self.links)
        links[index] = links[index].with_parameter(value)
        return StarNetwork(self.n, tuple(links))

    def with_parameters(self, values: Sequence[float]) -> "StarNetwork":
        if len(values) != self.n:
            raise ValueError(f"expected {self.n} values, got {len(values)}")
        return StarNetwork(self.n, tuple(l.with_parameter(v) for l, v in zip(self.links, values)))
