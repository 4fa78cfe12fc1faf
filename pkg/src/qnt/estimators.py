"""Link-parameter estimators built on single- and two-bit parity moments.

All estimators work in correlation coordinates ``c_l = 1 - 2 q_l`` where
``q_l`` is the probability that link ``l`` flips a bit. Under the Multicast
circuit the parities of the leaf bits satisfy::

    E[(-1)^x_i]         = c_0 c_i
    E[(-1)^(x_i ^ x_j)] = c_i c_j

so ``c_0**2`` follows from any leaf pair and the rest from division. The
global sign of ``c`` is not identifiable from Z data alone; this is the
two-fold degeneracy ``p`` versus ``1 - p``. GHZ data adds the sign-bit parity
``E[(-1)^b] = prod_l (1 - 2 r_l)`` with ``r_l`` the phase-flip probability,
which for depolarizing links pins down ``c_0`` uniquely.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Optional, Sequence, Union

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import check_fallback, check_outcomes
from .exceptions import (
    DegenerateMoments,
    EmptyDatabase,
    NegativeSquare,
    NoRootInRange,
    NoValidCandidate,
)
from .multicast import MeasurementDatabase, OutcomeDistribution, outcome_table
from .network import StarNetwork

EPS_DIV = 1e-6
CLAMP_TOL = 1e-12


@dataclass(frozen=True)
class MomentStatistics:
    """Parity means of one dataset.

    ``m[i]`` is the mean of ``(-1)^x`` for leaf ``i + 1``; ``mm`` holds the
    pairwise parity means (unit diagonal); ``g`` the sign-bit parity mean
    for GHZ data. ``sample_count`` is None for moments of an exact table.
    """

    m: np.ndarray
    mm: np.ndarray
    g: Optional[float] = None
    sample_count: Optional[int] = None

    def __post_init__(self):
        m = np.asarray(self.m, dtype=float)
        mm = np.asarray(self.mm, dtype=float)
        k = m.shape[0]
        if mm.shape != (k, k):
            raise ValueError(f"pairwise moments must be {k}x{k}, got {mm.shape}")
        if np.any(np.abs(m) > 1 + 1e-9) or np.any(np.abs(mm) > 1 + 1e-9):
            raise ValueError("parity means must lie in [-1, 1]")
        if not np.allclose(mm, mm.T, atol=1e-12):
            raise ValueError("pairwise moments must be symmetric")
        if self.g is not None and abs(self.g) > 1 + 1e-9:
            raise ValueError("sign parity must lie in [-1, 1]")
        if self.sample_count is not None and self.sample_count < 1:
            raise ValueError("sample_count must be positive")
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "mm", mm)

    @property
    def n(self) -> int:
        return self.m.shape[0] + 1


def _moments_from_bits(bits: np.ndarray, variant: str, weights=None, count=None) -> MomentStatistics:
    """Parities of outcome rows.

    ``weights`` are per-row multiplicities (``count`` given, sampled data) or
    probabilities (``count`` None, exact moments). Without weights each row
    counts once.
    """
    bits = np.asarray(bits)
    if variant == "GHZ":
        sign = 1.0 - 2.0 * bits[:, 0]
        leaf = 1.0 - 2.0 * bits[:, 1:]
    else:
        sign = None
        leaf = 1.0 - 2.0 * bits
    if weights is None:
        count = leaf.shape[0]
        w = np.ones(count)
    else:
        w = np.asarray(weights, dtype=float)
    scale = 1.0 if count is None else float(count)
    m = (w @ leaf) / scale
    mm = ((leaf * w[:, None]).T @ leaf) / scale
    mm = 0.5 * (mm + mm.T)
    g = None if sign is None else float(w @ sign) / scale
    return MomentStatistics(m, mm, g, count)


def empirical_moments(
    db: Union[MeasurementDatabase, Sequence[MeasurementDatabase]]
) -> MomentStatistics:
    """Sample parity means of a database (or of homogeneous fragments)."""
    if not isinstance(db, MeasurementDatabase):
        fragments = list(db)
        if not fragments:
            raise EmptyDatabase("no fragments given")
        db = MeasurementDatabase.concatenate(fragments)
    if len(db) == 0:
        raise EmptyDatabase("measurement database is empty")
    return _moments_from_bits(db.outcomes, db.variant)


def exact_moments(dist: OutcomeDistribution) -> MomentStatistics:
    """Parity means of an exact outcome table."""
    return _moments_from_bits(dist.bits, dist.variant, dist.probs)


@dataclass(frozen=True)
class EstimateSet:
    """One or two candidate parameter vectors plus diagnostics.

    ``kind`` is ``"bitflip"`` (flip probabilities) or ``"depolarizing"``.
    ``valid[k, l]`` is False where candidate ``k`` needed clamping or a
    fallback at link ``l``.
    """

    kind: str
    candidates: np.ndarray
    degenerate: bool
    valid: np.ndarray = field(repr=False)
    flags: tuple = ()

    def __post_init__(self):
        cands = np.atleast_2d(np.asarray(self.candidates, dtype=float))
        if not 1 <= cands.shape[0] <= 2:
            raise ValueError("an estimate set holds one or two candidates")
        object.__setattr__(self, "candidates", cands)
        object.__setattr__(self, "valid", np.asarray(self.valid, dtype=bool).reshape(cands.shape))
        object.__setattr__(self, "flags", tuple(self.flags))

    @property
    def n(self) -> int:
        return self.candidates.shape[1]

    def star(self, index: int = 0) -> StarNetwork:
        if self.kind == "bitflip":
            return StarNetwork.bitflip(self.candidates[index])
        return StarNetwork.depolarizing(self.candidates[index])

    def to_dict(self) -> dict:
        return {
            "model": self.kind,
            "candidates": self.candidates.tolist(),
            "degenerate": bool(self.degenerate),
            "flags": list(self.flags),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "EstimateSet":
        cands = np.atleast_2d(np.asarray(data["candidates"], dtype=float))
        return cls(data.get("model", "depolarizing"), cands, bool(data["degenerate"]),
                   np.ones(cands.shape, dtype=bool), tuple(data.get("flags", ())))


def _check_n(moments: MomentStatistics, n: int) -> None:
    if n < 3:
        raise ValueError(f"estimation needs n >= 3, got {n}")
    if moments.n != n:
        raise ValueError(f"moments describe n={moments.n}, not n={n}")


def flip_correlations(moments: MomentStatistics, n: int, eps_div: float = EPS_DIV) -> np.ndarray:
    """Correlations ``c`` (root first) for the positive root-sign branch."""
    _check_n(moments, n)
    m, mm = moments.m, moments.mm
    pairs = list(combinations(range(n - 1), 2))
    denom = np.array([mm[i, j] for i, j in pairs])
    if np.any(np.abs(denom) < eps_div):
        bad = [pairs[k] for k in np.flatnonzero(np.abs(denom) < eps_div)]
        raise DegenerateMoments(f"pairwise parity below {eps_div} for leaf pairs {bad}")
    ratios = np.array([m[i] * m[j] for i, j in pairs]) / denom
    c0_sq = float(np.median(ratios))
    if c0_sq <= 0:
        raise NegativeSquare(f"root correlation squared is {c0_sq!r}")
    c0 = np.sqrt(c0_sq)
    return np.concatenate([[c0], m / c0])


def _clamp(values, lo, hi, label, flags, candidate):
    values = np.asarray(values, dtype=float)
    out = np.clip(values, lo, hi)
    moved = np.abs(out - values) > CLAMP_TOL
    for link in np.flatnonzero(moved):
        flags.append(f"clamped:candidate={candidate}:link={link}:{label}={values[link]:.6g}")
    return out, ~moved


def estimate_flip_star(moments: MomentStatistics, n: int, eps_div: float = EPS_DIV) -> EstimateSet:
    """Both bit-flip candidate vectors ``p`` and ``1 - p``."""
    c = flip_correlations(moments, n, eps_div)
    flags = []
    cands, valid = [], []
    for k, sign in enumerate((1.0, -1.0)):
        p, ok = _clamp((1.0 - sign * c) / 2.0, 0.0, 1.0, "p", flags, k)
        cands.append(p)
        valid.append(ok)
    return EstimateSet("bitflip", np.array(cands), True, np.array(valid), tuple(flags))


def estimate_depolarizing_z(
    moments: MomentStatistics, n: int, eps_div: float = EPS_DIV, fallback: str = "raise"
) -> EstimateSet:
    """Depolarizing parameters from Z-basis parities.

    Each flip candidate maps link-wise to ``theta = 3 (1 - theta_f) / 2`` with
    ``theta_f = 1 - p``; a candidate with any ``theta_f < 1/3`` is discarded.
    Both survive exactly when every ``theta_f`` lies in [1/3, 2/3].
    """
    check_fallback(fallback)
    c = flip_correlations(moments, n, eps_div)
    flags = []
    survivors = []
    for sign in (1.0, -1.0):
        theta_f = (1.0 + sign * c) / 2.0
        if np.all(theta_f >= 1.0 / 3.0 - CLAMP_TOL):
            survivors.append(sign)
    if not survivors:
        if fallback == "raise":
            raise NoValidCandidate(f"both sign branches give theta_f < 1/3 (c={c.tolist()})")
        bad = [int(np.sum((1.0 + s * c) / 2.0 < 1.0 / 3.0)) for s in (1.0, -1.0)]
        survivors = [1.0 if bad[0] <= bad[1] else -1.0]
        flags.append("no_valid_candidate")
    cands, valid = [], []
    for k, sign in enumerate(survivors):
        theta, ok = _clamp(0.75 * (1.0 - sign * c), 0.0, 1.0, "theta", flags, k)
        cands.append(theta)
        valid.append(ok)
    return EstimateSet("depolarizing", np.array(cands), len(cands) == 2, np.array(valid), tuple(flags))


def solve_root_correlation(g: float, leaf_product: float, n: int) -> Optional[float]:
    """Root of ``g * c**(n-2) = leaf_product`` in [0, 1], or None.

    The left side is monotone in ``c >= 0`` so the root, when present, is
    the nonnegative real ``(n-2)``-th root of ``leaf_product / g``.
    """
    ratio = leaf_product / g
    if ratio < 0:
        return None
    c0 = ratio ** (1.0 / (n - 2))
    if c0 > 1.0 + CLAMP_TOL:
        return None
    return min(c0, 1.0)


def estimate_depolarizing_ghz(
    moments: MomentStatistics, n: int, eps_div: float = EPS_DIV, fallback: str = "raise"
) -> EstimateSet:
    """Depolarizing parameters from GHZ-basis data.

    For depolarizing links the bit and phase flip probabilities coincide, so
    with ``c_i = m_i / c_0`` the sign parity ``g = prod c_l`` becomes the
    single-variable equation ``g * c_0**(n-2) = prod_i m_i``.
    """
    check_fallback(fallback)
    _check_n(moments, n)
    if moments.g is None:
        raise ValueError("GHZ estimation needs the sign-bit parity g")
    g = moments.g
    if abs(g) < eps_div:
        raise DegenerateMoments(f"sign parity |g|={abs(g):.3g} below {eps_div}")
    m = moments.m
    prod = float(np.prod(m))
    flags = []
    c0 = solve_root_correlation(g, prod, n)
    root_ok = c0 is not None
    if not root_ok:
        if fallback == "raise":
            raise NoRootInRange(f"no root in [0, 1] for g={g!r}, prod(m)={prod!r}")
        c0 = 0.0 if prod / g < 0 else 1.0
        flags.append(f"no_root_in_range:boundary={c0:g}")
    if c0 > 0:
        leaf_c = m / c0
    else:
        leaf_c = np.zeros_like(m)
        flags.append("root_correlation_zero")
    c = np.concatenate([[c0], leaf_c])
    theta, ok = _clamp(0.75 * (1.0 - c), 0.0, 1.0, "theta", flags, 0)
    ok[0] &= root_ok
    return EstimateSet("depolarizing", theta[None, :], False, ok[None, :], tuple(flags))


def outcome_counts(bits: np.ndarray) -> np.ndarray:
    """Histogram of outcome rows over table indices."""
    bits = np.asarray(bits, dtype=np.int64)
    width = bits.shape[1]
    idx = bits @ (1 << np.arange(width - 1, -1, -1))
    return np.bincount(idx, minlength=1 << width)


def log_likelihood(est: EstimateSet, counts: np.ndarray, variant: str, index: int = 0) -> float:
    probs = outcome_table(est.star(index).weight_matrix(), variant)
    hit = counts > 0
    with np.errstate(divide="ignore"):
        return float(counts[hit] @ np.log(probs[hit]))


def select_candidate(est: EstimateSet, counts: Optional[np.ndarray] = None, variant: str = "Z") -> int:
    """Index of the candidate with the highest likelihood of ``counts``.

    Ties (or no data) go to the candidate with the smaller parameter sum.
    """
    k = est.candidates.shape[0]
    if k == 1:
        return 0
    totals = est.candidates.sum(axis=1)
    if counts is None:
        return int(np.argmin(totals))
    ll = np.array([log_likelihood(est, counts, variant, i) for i in range(k)])
    best = ll.max()
    tied = np.flatnonzero(ll >= best - 1e-9 * max(1.0, abs(best)))
    return int(tied[np.argmin(totals[tied])])


class _MomentEstimator(BaseEstimator):
    """Shared fit logic: outcome bits -> moments -> estimate set."""

    _variant = "Z"
    _kind = "depolarizing"

    def _estimate(self, moments, n):
        raise NotImplementedError

    def _data_variant(self):
        return self._variant

    def fit(self, X, y=None):
        """Fit from an outcome-bit array or a :class:`MeasurementDatabase`.

        Z data: one column per leaf. GHZ data: sign bit then ``s``.
        """
        variant = self._data_variant()
        bits, n = check_outcomes(X, variant)
        moments = _moments_from_bits(bits, variant)
        counts = outcome_counts(bits)
        return self._finish(moments, n, counts, variant)

    def fit_moments(self, moments: MomentStatistics):
        """Fit directly from parity moments (exact or empirical)."""
        return self._finish(moments, moments.n, None, self._data_variant())

    def _finish(self, moments, n, counts, variant):
        est = self._estimate(moments, n)
        self.moments_ = moments
        self.estimate_set_ = est
        self.candidates_ = est.candidates
        self.degenerate_ = est.degenerate
        self.flags_ = est.flags
        self.n_links_ = n
        self.selected_ = select_candidate(est, counts, variant)
        self.params_ = est.candidates[self.selected_]
        return self

    def distribution(self) -> OutcomeDistribution:
        """Outcome table implied by the selected candidate."""
        check_is_fitted(self, "params_")
        star = self.estimate_set_.star(self.selected_)
        return OutcomeDistribution(self._variant, star.n, outcome_table(star.weight_matrix(), self._variant))

    def score(self, X, y=None) -> float:
        """Mean log-likelihood per probe under the selected candidate."""
        check_is_fitted(self, "params_")
        bits, n = check_outcomes(X, self._variant, self.n_links_)
        counts = outcome_counts(bits)
        return log_likelihood(self.estimate_set_, counts, self._variant, self.selected_) / len(bits)


class FlipStarEstimator(_MomentEstimator):
    """Bit-flip probabilities of a flip star from leaf parities.

    Parameters
    ----------
    eps_div : float
        Smallest admissible magnitude of a pairwise parity used as divisor.
    variant : {"Z", "GHZ"}
        Layout of the training data. GHZ data contributes only its ``s`` bits.
    """

    _kind = "bitflip"

    def __init__(self, eps_div=EPS_DIV, variant="Z"):
        self.eps_div = eps_div
        self.variant = variant

    def _data_variant(self):
        return self.variant.upper()

    @property
    def _variant(self):
        return self.variant.upper()

    def _estimate(self, moments, n):
        return estimate_flip_star(moments, n, self.eps_div)

    @property
    def p_(self):
        check_is_fitted(self, "params_")
        return self.params_


class DepolarizingZEstimator(_MomentEstimator):
    """Depolarizing parameters from Z-basis Multicast data.

    Parameters
    ----------
    eps_div : float
        Divisor guard for pairwise parities.
    fallback : {"raise", "clamp"}
        What to do when neither sign branch is a valid depolarizing vector.
    """

    _variant = "Z"

    def __init__(self, eps_div=EPS_DIV, fallback="raise"):
        self.eps_div = eps_div
        self.fallback = fallback

    def _estimate(self, moments, n):
        return estimate_depolarizing_z(moments, n, self.eps_div, self.fallback)

    @property
    def theta_(self):
        check_is_fitted(self, "params_")
        return self.params_


class DepolarizingGHZEstimator(_MomentEstimator):
    """Depolarizing parameters from GHZ-basis Multicast data.

    Parameters
    ----------
    eps_div : float
        Guard on the sign-bit parity used as divisor.
    fallback : {"raise", "clamp"}
        With "clamp", a missing root in [0, 1] falls back to the nearest
        boundary and the estimate is flagged.
    """

    _variant = "GHZ"

    def __init__(self, eps_div=EPS_DIV, fallback="raise"):
        self.eps_div = eps_div
        self.fallback = fallback

    def _estimate(self, moments, n):
        return estimate_depolarizing_ghz(moments, n, self.eps_div, self.fallback)

    @property
    def theta_(self):
        check_is_fitted(self, "params_")
        return self.params_


def estimator_for(model: str, variant: str, **kwargs) -> _MomentEstimator:
    """Estimator matching a model name (``flip``/``depol``) and data variant."""
    model = model.lower()
    variant = variant.upper()
    if model in ("flip", "bitflip"):
        return FlipStarEstimator(variant=variant, **{k: v for k, v in kwargs.items() if k == "eps_div"})
    if model in ("depol", "depolarizing"):
        if variant == "Z":
            return DepolarizingZEstimator(**kwargs)
        if variant == "GHZ":
            return DepolarizingGHZEstimator(**kwargs)
    raise ValueError(f"no estimator for model={model!r}, variant={variant!r}")
