"""Brute-force density-matrix simulation of the Multicast circuit.

Qubit 0 is the most significant bit of a basis index. Output qubit order is
(root qubit if present, leaf 1, ..., leaf n-1); leaf 1 receives the hub's
control qubit and leaves 2.. receive the CNOT targets.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .exceptions import DimensionMismatch, DimensionTooLarge
from .multicast import OutcomeDistribution, bit_table
from .network import StarNetwork

MAX_QUBITS = 8
MAX_N = 8

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (I2, X, Y, Z)


class Init(str, Enum):
    SINGLE_ZERO = "single_zero"
    BELL_PAIR = "bell_pair"


@dataclass(frozen=True)
class DensityMatrix:
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        rho = np.asarray(self.matrix, dtype=complex)
        dim = rho.shape[0]
        if rho.shape != (dim, dim) or dim & (dim - 1):
            raise ValueError(f"density matrix must be 2^m square, got {rho.shape}")
        object.__setattr__(self, "matrix", rho)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def num_qubits(self) -> int:
        return self.dim.bit_length() - 1

    def check(self, tol: float = 1e-10, psd_tol: float = 1e-9) -> None:
        rho = self.matrix
        if np.max(np.abs(rho - rho.conj().T)) > tol:
            raise ValueError("density matrix is not Hermitian")
        if abs(np.trace(rho) - 1) > tol:
            raise ValueError(f"trace is {np.trace(rho)!r}")
        if np.linalg.eigvalsh(rho).min() < -psd_tol:
            raise ValueError("density matrix is not positive semidefinite")


@dataclass(frozen=True)
class MeasurementBasis:
    """Orthonormal basis stored as the columns of ``vectors``."""

    label: str
    vectors: np.ndarray = field(repr=False)

    @property
    def num_qubits(self) -> int:
        return self.vectors.shape[0].bit_length() - 1


def single_qubit_op(op: np.ndarray, qubit: int, m: int) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for q in range(m):
        out = np.kron(out, op if q == qubit else I2)
    return out


def cnot(control: int, target: int, m: int) -> np.ndarray:
    bits = bit_table(m)
    flipped = bits.copy()
    flipped[:, target] ^= bits[:, control]
    weights = 1 << np.arange(m - 1, -1, -1)
    dest = flipped @ weights
    u = np.zeros((1 << m, 1 << m), dtype=complex)
    u[dest, np.arange(1 << m)] = 1
    return u


def apply_pauli_channel(rho: np.ndarray, weights, qubit: int, m: int) -> np.ndarray:
    """``sum_k w_k P_k rho P_k`` on one qubit."""
    out = np.zeros_like(rho)
    for w, pauli in zip(weights, PAULIS):
        if w == 0:
            continue
        op = single_qubit_op(pauli, qubit, m)
        out += w * (op @ rho @ op.conj().T)
    return out


def _check_size(n: int) -> None:
    if n > MAX_N:
        raise DimensionTooLarge(f"dense simulation supports n <= {MAX_N}, got {n}")


def build_state(star: StarNetwork, init="single_zero") -> DensityMatrix:
    """Density matrix left in the end nodes after one Multicast round."""
    init = Init(init)
    n = star.n
    _check_size(n)
    weights = star.weight_matrix()
    root = 1 if init is Init.BELL_PAIR else 0
    m = root + n - 1
    hub = root  # qubit sent through the root link, later leaf 1

    psi = np.zeros(1 << m, dtype=complex)
    if init is Init.BELL_PAIR:
        psi[0] = 1 / np.sqrt(2)
        psi[0b11 << (m - 2)] = 1 / np.sqrt(2)
    else:
        psi[0] = 1.0
    rho = np.outer(psi, psi.conj())

    rho = apply_pauli_channel(rho, weights[0], hub, m)
    for target in range(hub + 1, m):
        u = cnot(hub, target, m)
        rho = u @ rho @ u.conj().T
    for leaf in range(1, n):
        rho = apply_pauli_channel(rho, weights[leaf], hub + leaf - 1, m)
    return DensityMatrix(rho)


def z_basis(m: int) -> MeasurementBasis:
    if m > MAX_QUBITS:
        raise DimensionTooLarge(f"m={m} exceeds {MAX_QUBITS}")
    return MeasurementBasis("Z", np.eye(1 << m, dtype=complex))


def ghz_basis(m: int) -> MeasurementBasis:
    """Columns ``(|0,s> + (-1)^b |1,~s>)/sqrt(2)`` at index ``b*2^(m-1) + s``."""
    if m > MAX_QUBITS:
        raise DimensionTooLarge(f"m={m} exceeds {MAX_QUBITS}")
    if m < 2:
        raise ValueError("GHZ basis needs at least 2 qubits")
    half = 1 << (m - 1)
    vecs = np.zeros((1 << m, 1 << m), dtype=complex)
    for b in (0, 1):
        for s in range(half):
            col = b * half + s
            low = s  # |0, s>
            high = half + (~s & (half - 1))  # |1, ~s>
            vecs[low, col] = 1 / np.sqrt(2)
            vecs[high, col] = (-1) ** b / np.sqrt(2)
    return MeasurementBasis("GHZ", vecs)


def measure_distribution(rho: DensityMatrix, basis: MeasurementBasis) -> OutcomeDistribution:
    """Born-rule outcome probabilities ``<v|rho|v>``."""
    if rho.dim != basis.vectors.shape[0]:
        raise DimensionMismatch(f"state dim {rho.dim} vs basis dim {basis.vectors.shape[0]}")
    v = basis.vectors
    probs = np.einsum("ik,ij,jk->k", v.conj(), rho.matrix, v).real
    if probs.min() < -1e-12:
        raise ValueError(f"negative Born probability {probs.min()!r}; state is not PSD")
    probs = np.clip(probs, 0.0, None)
    probs = probs / probs.sum()
    m = rho.num_qubits
    n = m + 1 if basis.label == "Z" else m
    return OutcomeDistribution(basis.label, n, probs)


def oracle_distribution(star: StarNetwork, variant: str) -> OutcomeDistribution:
    if variant.upper() == "Z":
        rho = build_state(star, Init.SINGLE_ZERO)
        return measure_distribution(rho, z_basis(rho.num_qubits))
    rho = build_state(star, Init.BELL_PAIR)
    return measure_distribution(rho, ghz_basis(rho.num_qubits))
