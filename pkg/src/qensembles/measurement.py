"""Projective measurements: spectral decomposition, Born rule, moments, conditional states."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .states import (
    SIGMA_1,
    SIGMA_3,
    DensityOperator,
    InvariantError,
    PureState,
)

DEGENERACY_TOL = 1e-8
ZERO_PROBABILITY = 1e-14
MAX_COLLECTIVE_SITES = 12


class ZeroProbabilityError(ValueError):
    """The requested outcome has (numerically) vanishing probability."""

    def __init__(self, probability: float):
        super().__init__(f"outcome probability {probability:.3e} is below {ZERO_PROBABILITY:g}")
        self.probability = probability


@dataclass(frozen=True, eq=False)
class Observable:
    """Hermitian operator stored through its clustered spectrum.

    ``labels[j]`` assigns eigenvector column ``j`` to cluster
    ``eigenvalues[labels[j]]``.  Diagonal observables keep no eigenvector
    matrix (``eigvecs is None``): column ``j`` is then basis vector ``j``,
    which keeps 12-qubit collective observables cheap.
    """

    eigenvalues: np.ndarray
    labels: np.ndarray
    eigvecs: np.ndarray | None

    @property
    def dim(self) -> int:
        return self.labels.size

    @property
    def is_diagonal(self) -> bool:
        return self.eigvecs is None

    def diagonal(self) -> np.ndarray:
        if not self.is_diagonal:
            raise ValueError("observable is not diagonal in the computational basis")
        return self.eigenvalues[self.labels]

    @property
    def matrix(self) -> np.ndarray:
        if self.is_diagonal:
            return np.diag(self.diagonal().astype(complex))
        v = self.eigvecs
        return (v * self.eigenvalues[self.labels]) @ v.conj().T

    def projector(self, i: int) -> np.ndarray:
        mask = self.labels == i
        if self.is_diagonal:
            return np.diag(mask.astype(complex))
        v = self.eigvecs[:, mask]
        return v @ v.conj().T

    @property
    def spectrum(self) -> list[tuple[float, np.ndarray]]:
        return [(float(x), self.projector(i)) for i, x in enumerate(self.eigenvalues)]

    @property
    def ranks(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.eigenvalues.size)

    def power_matrix(self, k: int) -> np.ndarray:
        """``X**k`` by repeated multiplication (diagonal observables stay 1-D)."""
        if k < 1:
            raise ValueError(f"power must be a positive integer, got {k}")
        base = self.diagonal().astype(float) if self.is_diagonal else self.matrix
        out = base
        for _ in range(k - 1):
            out = out * base if self.is_diagonal else out @ base
        return out


def _cluster(values: np.ndarray, tol: float) -> tuple[np.ndarray, np.ndarray]:
    """Group eigenvalues whose successive gaps are <= tol; clusters sorted descending."""
    order = np.argsort(-values, kind="stable")
    sorted_vals = values[order]
    starts = np.concatenate(([True], np.abs(np.diff(sorted_vals)) > tol))
    cluster_of_sorted = np.cumsum(starts) - 1
    n_clusters = int(cluster_of_sorted[-1]) + 1
    centers = np.array(
        [sorted_vals[cluster_of_sorted == c].mean() for c in range(n_clusters)]
    )
    labels = np.empty_like(cluster_of_sorted)
    labels[order] = cluster_of_sorted
    return centers, labels


def spectral_decompose(matrix, degeneracy_tol: float = DEGENERACY_TOL) -> Observable:
    """Build an :class:`Observable` from a Hermitian matrix.

    Eigenvalues closer than ``degeneracy_tol`` are merged into one outcome
    whose projector spans all of their eigenvectors.
    """
    m = np.asarray(matrix, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    if np.max(np.abs(m - m.conj().T)) > 1e-10:
        raise ValueError("observable matrix is not Hermitian")
    offdiag = m - np.diag(np.diag(m))
    if not np.any(offdiag):
        values = np.diag(m).real.copy()
        centers, labels = _cluster(values, degeneracy_tol)
        return Observable(centers, labels, None)
    m = 0.5 * (m + m.conj().T)
    values, vecs = np.linalg.eigh(m)
    centers, labels = _cluster(values, degeneracy_tol)
    return Observable(centers, labels, vecs)


def diagonal_observable(values, degeneracy_tol: float = DEGENERACY_TOL) -> Observable:
    """Observable with the given computational-basis diagonal."""
    values = np.asarray(values, dtype=float).reshape(-1)
    centers, labels = _cluster(values, degeneracy_tol)
    return Observable(centers, labels, None)


class OutcomeDistribution(NamedTuple):
    values: np.ndarray
    probabilities: np.ndarray

    @property
    def entries(self) -> list[tuple[float, float]]:
        return list(zip(self.values.tolist(), self.probabilities.tolist()))

    def mean(self) -> float:
        return float(np.dot(self.values, self.probabilities))


def _check_dims(rho: DensityOperator, obs: Observable) -> None:
    if rho.dim != obs.dim:
        raise ValueError(f"dimension mismatch: state {rho.dim}, observable {obs.dim}")


def born(rho: DensityOperator, obs: Observable) -> OutcomeDistribution:
    """Outcome probabilities ``p_x = Tr[rho P_x]`` for each spectral cluster."""
    _check_dims(rho, obs)
    if obs.is_diagonal:
        weights = np.diag(rho.matrix).real
    else:
        v = obs.eigvecs
        weights = np.einsum("ij,jk,ki->i", v.conj().T, rho.matrix, v).real
    probs = np.bincount(obs.labels, weights=weights, minlength=obs.eigenvalues.size)
    if np.any(probs < -1e-12) or abs(probs.sum() - 1.0) > 1e-10:
        raise InvariantError(f"Born probabilities are not a distribution: {probs.tolist()}")
    probs = np.clip(probs, 0.0, None)
    return OutcomeDistribution(obs.eigenvalues.copy(), probs)


def expectation(rho: DensityOperator, obs: Observable, k: int = 1) -> float:
    """Moment ``Tr[rho X^k]``."""
    _check_dims(rho, obs)
    xk = obs.power_matrix(k)
    if obs.is_diagonal:
        value = complex(np.dot(np.diag(rho.matrix), xk))
    else:
        value = complex(np.einsum("ij,ji->", rho.matrix, xk))
    scale = max(1.0, abs(value.real))
    if abs(value.imag) > 1e-10 * scale:
        raise InvariantError(f"expectation has imaginary part {value.imag:.3e}")
    return value.real


def project(psi: PureState, projector) -> tuple[float, PureState]:
    """Probability of ``projector`` on ``psi`` and the normalized collapsed state.

    Raises:
        ZeroProbabilityError: when the probability is below 1e-14.
    """
    p_mat = np.asarray(projector, dtype=complex)
    if p_mat.shape != (psi.dim, psi.dim):
        raise ValueError(f"projector shape {p_mat.shape} does not match dimension {psi.dim}")
    if np.max(np.abs(p_mat @ p_mat - p_mat)) > 1e-10 or np.max(np.abs(p_mat - p_mat.conj().T)) > 1e-10:
        raise ValueError("matrix is not a Hermitian projector")
    out = p_mat @ psi.amplitudes
    prob = float(np.vdot(out, out).real)
    if prob < ZERO_PROBABILITY:
        raise ZeroProbabilityError(prob)
    return prob, PureState(out / np.sqrt(prob), psi.layout)


def conditional_state(rho_ab: DensityOperator, projector) -> tuple[float, DensityOperator]:
    """Outcome probability and the state of the rest after projecting subsystem 0.

    Computes ``p = Tr[rho (P x I)]`` and ``Tr_A[rho (P x I)] / p``.  Only the
    first subsystem can be measured; permute beforehand for any other.
    """
    if len(rho_ab.layout) < 2:
        raise ValueError("conditional_state needs at least two subsystems")
    d_a = rho_ab.layout[0]
    rest = rho_ab.layout[1:]
    d_b = rho_ab.dim // d_a
    p_mat = np.asarray(projector, dtype=complex)
    if p_mat.shape != (d_a, d_a):
        raise ValueError(f"projector shape {p_mat.shape} does not match subsystem dimension {d_a}")
    t = rho_ab.matrix.reshape(d_a, d_b, d_a, d_b)
    # Tr_A[rho (P x I)]_{b b'} = sum_{a a'} rho_{a b, a' b'} P_{a' a}
    reduced = np.einsum("ibjc,ji->bc", t, p_mat)
    prob = float(np.trace(reduced).real)
    if prob < ZERO_PROBABILITY:
        raise ZeroProbabilityError(prob)
    mat = reduced / prob
    mat = 0.5 * (mat + mat.conj().T)
    return prob, DensityOperator(mat, rest)


def collective_sigma_z(m: int) -> Observable:
    """Sum of ``sigma_z`` over ``m`` qubits; diagonal entry = #zeros - #ones."""
    if not 1 <= m <= MAX_COLLECTIVE_SITES:
        raise ValueError(f"m must be in [1, {MAX_COLLECTIVE_SITES}], got {m}")
    idx = np.arange(2**m)
    ones = np.zeros(idx.size, dtype=np.int64)
    for bit in range(m):
        ones += (idx >> bit) & 1
    return diagonal_observable(m - 2 * ones)


def sigma_phi(phi: float) -> np.ndarray:
    """Spin component ``cos(phi) sigma_3 + sin(phi) sigma_1``."""
    return np.cos(phi) * SIGMA_3 + np.sin(phi) * SIGMA_1


def sigma_phi_eigenstates(phi: float) -> tuple[PureState, PureState]:
    """The +1 and -1 eigenvectors of :func:`sigma_phi`, real amplitudes."""
    c, s = np.cos(phi / 2), np.sin(phi / 2)
    return PureState([c, s]), PureState([-s, c])
