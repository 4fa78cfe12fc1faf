"""Fisher information of Multicast outcome tables, general QFIM, and the QCRB.

The distributed states are diagonal in a parameter-independent basis (Z or
GHZ), so their QFIM equals the classical Fisher information of measuring in
that basis. :func:`classical_fim` is the fast analytic path;
:func:`qfim_general` computes the QFIM of the dense state directly and is
used to check it.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import DimensionTooLarge, SingularDistribution, SingularFIM
from .multicast import check_variant, outcome_table
from .network import StarNetwork
from .oracle import Init, build_state

PROB_FLOOR = 1e-14
FD_STEP = 1e-5
LAMBDA_CUT = 1e-10
MAX_COND = 1e12
QFIM_MAX_N = 7


@dataclass(frozen=True)
class FisherMatrix:
    entries: np.ndarray = field(repr=False)
    parameter_labels: tuple = ()

    def __post_init__(self):
        f = np.asarray(self.entries, dtype=float)
        if f.ndim != 2 or f.shape[0] != f.shape[1]:
            raise ValueError(f"Fisher matrix must be square, got {f.shape}")
        if np.max(np.abs(f - f.T), initial=0.0) > 1e-9 * max(1.0, np.abs(f).max(initial=0.0)):
            raise ValueError("Fisher matrix is not symmetric")
        f = 0.5 * (f + f.T)
        if np.linalg.eigvalsh(f).min() < -1e-8 * max(1.0, np.abs(f).max()):
            raise ValueError("Fisher matrix is not positive semidefinite")
        labels = tuple(self.parameter_labels) or tuple(f"theta_{i}" for i in range(f.shape[0]))
        object.__setattr__(self, "entries", f)
        object.__setattr__(self, "parameter_labels", labels)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.entries, dtype=dtype)


def _labels(n):
    return tuple(f"theta_{i}" for i in range(n))


def table_gradient(star: StarNetwork, variant: str):
    """Outcome table and its ``(n, K)`` gradient in the link parameters.

    The table is linear in each link's weight row and each row is affine in
    its parameter, so substituting the row's derivative gives the partial.
    """
    variant = check_variant(variant)
    w = star.weight_matrix()
    probs = outcome_table(w, variant)
    grad = np.empty((star.n, probs.size))
    for l, link in enumerate(star.links):
        wl = w.copy()
        wl[l] = link.weight_derivative()
        grad[l] = outcome_table(wl, variant)
    return probs, grad


def fim_from_table(probs: np.ndarray, grad: np.ndarray) -> np.ndarray:
    small = probs < PROB_FLOOR
    if np.any(small & np.any(np.abs(grad) > PROB_FLOOR, axis=0)):
        raise SingularDistribution("an outcome has vanishing probability but nonzero gradient")
    keep = ~small
    g = grad[:, keep]
    return (g / probs[keep]) @ g.T


def classical_fim(star: StarNetwork, variant: str = "Z") -> FisherMatrix:
    """Fisher information of the exact Z or GHZ outcome table."""
    params = star.parameters()
    if np.any(params < 0) or np.any(params > 1):
        raise ValueError("link parameters must lie in [0, 1]")
    probs, grad = table_gradient(star, variant)
    return FisherMatrix(fim_from_table(probs, grad), _labels(star.n))


def _state(star, init):
    return build_state(star, init).matrix


def state_derivative(star: StarNetwork, index: int, init, h: float = FD_STEP) -> np.ndarray:
    """Central finite difference of the state in parameter ``index``.

    Falls back to a one-sided difference within ``h`` of [0, 1].
    """
    theta = star.links[index].parameter
    lo, hi = theta - h, theta + h
    if lo < 0:
        lo = theta
    if hi > 1:
        hi = theta
    plus = _state(star.with_parameter(index, hi), init)
    minus = _state(star.with_parameter(index, lo), init)
    return (plus - minus) / (hi - lo)


def qfim_general(
    star: StarNetwork, init="single_zero", h: float = FD_STEP, lambda_cut: float = LAMBDA_CUT
) -> FisherMatrix:
    """SLD quantum Fisher information of the dense Multicast state.

    ``F_jk = sum 2 Re(<e_i|d_j rho|e_m><e_m|d_k rho|e_i>) / (l_i + l_m)``
    over eigenpairs with ``l_i + l_m > lambda_cut``.
    """
    if star.n > QFIM_MAX_N:
        raise DimensionTooLarge(f"general QFIM supports n <= {QFIM_MAX_N}, got {star.n}")
    init = Init(init)
    lam, vecs = np.linalg.eigh(_state(star, init))
    lam = np.clip(lam, 0.0, None)
    total = lam[:, None] + lam[None, :]
    weight = np.zeros_like(total)
    mask = total > lambda_cut
    weight[mask] = 2.0 / total[mask]
    rotated = [vecs.conj().T @ state_derivative(star, j, init, h) @ vecs for j in range(star.n)]
    f = np.empty((star.n, star.n))
    for j in range(star.n):
        for k in range(j, star.n):
            f[j, k] = f[k, j] = np.sum(weight * (rotated[j] * rotated[k].T).real)
    return FisherMatrix(f, _labels(star.n))


def qcrb(F) -> float:
    """Trace of the inverse Fisher matrix."""
    f = np.asarray(F, dtype=float)
    with np.errstate(all="ignore"):
        cond = np.linalg.cond(f)
    if not np.isfinite(cond) or cond >= MAX_COND:
        raise SingularFIM(f"Fisher matrix is singular (condition number {cond:.3g})")
    return float(np.trace(np.linalg.inv(f)))
