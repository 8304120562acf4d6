"""Finite-dimensional states: kets, density operators, tensor products, partial traces.

Conventions used throughout the package:

* subsystems are indexed from 0, leftmost Kronecker factor varies slowest;
* ``sigma_3 |0> = +|0>`` and ``sigma_3 |1> = -|1>``.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence, Union

import numpy as np

NORM_TOL = 1e-12
HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
PSD_TOL = 1e-10
# Above this dimension the constructor skips the eigenvalue PSD check;
# is_density_operator always performs it.
PSD_CHECK_MAX_DIM = 512


class InvariantError(ValueError):
    """A value violates a numerical invariant beyond tolerance."""


def _freeze(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def _as_layout(dims: Iterable[int]) -> tuple[int, ...]:
    layout = tuple(int(d) for d in dims)
    if not layout:
        raise InvariantError("layout must contain at least one subsystem")
    if any(d < 1 for d in layout):
        raise InvariantError(f"subsystem dimensions must be >= 1, got {layout}")
    return layout


@dataclass(frozen=True, eq=False)
class PureState:
    """Unit vector of complex amplitudes with a tensor-product layout."""

    amplitudes: np.ndarray
    layout: tuple[int, ...]

    def __init__(self, amplitudes, layout: Iterable[int] | None = None):
        amps = np.array(amplitudes, dtype=complex).reshape(-1)
        if amps.size < 1:
            raise InvariantError("a state needs at least one amplitude")
        layout = _as_layout(layout if layout is not None else (amps.size,))
        if int(np.prod(layout)) != amps.size:
            raise InvariantError(f"layout {layout} does not match dimension {amps.size}")
        norm = float(np.vdot(amps, amps).real)
        if abs(norm - 1.0) > NORM_TOL:
            raise InvariantError(f"state is not normalized: <psi|psi> = {norm!r}")
        object.__setattr__(self, "amplitudes", _freeze(amps))
        object.__setattr__(self, "layout", layout)

    @classmethod
    def normalized(cls, amplitudes, layout: Iterable[int] | None = None) -> "PureState":
        amps = np.array(amplitudes, dtype=complex).reshape(-1)
        return cls(amps / np.linalg.norm(amps), layout)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def projector(self) -> np.ndarray:
        return np.outer(self.amplitudes, self.amplitudes.conj())

    def density(self) -> "DensityOperator":
        return DensityOperator(self.projector(), self.layout)

    def __repr__(self) -> str:
        return f"PureState({np.array2string(self.amplitudes, precision=4)}, layout={self.layout})"


class DensityCheck(NamedTuple):
    ok: bool
    reason: str

    def __bool__(self) -> bool:
        return self.ok


def is_density_operator(
    matrix, tol: float = HERMITIAN_TOL, psd_tol: float = PSD_TOL
) -> DensityCheck:
    """Check Hermiticity, unit trace and positivity, in that order.

    Args:
        matrix: square complex matrix.
        tol: absolute tolerance for Hermiticity and for the trace.
        psd_tol: the smallest eigenvalue may be as low as ``-psd_tol``.

    Returns:
        A truthy/falsy :class:`DensityCheck` whose ``reason`` names the
        first failed condition (empty when all hold).
    """
    m = np.asarray(matrix, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    herm = float(np.max(np.abs(m - m.conj().T))) if m.size else 0.0
    if herm > tol:
        return DensityCheck(False, f"not Hermitian: max |M - M^dag| = {herm:.3e}")
    tr = complex(np.trace(m))
    if abs(tr - 1.0) > tol:
        return DensityCheck(False, f"trace is {tr.real:.15g}, not 1")
    lowest = float(np.linalg.eigvalsh(m)[0])
    if lowest < -psd_tol:
        return DensityCheck(False, f"negative eigenvalue {lowest:.3e}")
    return DensityCheck(True, "")


@dataclass(frozen=True, eq=False)
class DensityOperator:
    """Hermitian, positive, unit-trace matrix with a tensor-product layout."""

    matrix: np.ndarray
    layout: tuple[int, ...]

    def __init__(self, matrix, layout: Iterable[int] | None = None, *, check: bool = True):
        m = np.array(matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise InvariantError(f"density matrix must be square, got shape {m.shape}")
        layout = _as_layout(layout if layout is not None else (m.shape[0],))
        if int(np.prod(layout)) != m.shape[0]:
            raise InvariantError(f"layout {layout} does not match dimension {m.shape[0]}")
        if check:
            if m.shape[0] <= PSD_CHECK_MAX_DIM:
                verdict = is_density_operator(m)
            else:
                verdict = _cheap_check(m)
            if not verdict:
                raise InvariantError(verdict.reason)
        object.__setattr__(self, "matrix", _freeze(m))
        object.__setattr__(self, "layout", layout)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def __repr__(self) -> str:
        return f"DensityOperator(dim={self.dim}, layout={self.layout})"


def _cheap_check(m: np.ndarray) -> DensityCheck:
    herm = float(np.max(np.abs(m - m.conj().T)))
    if herm > HERMITIAN_TOL:
        return DensityCheck(False, f"not Hermitian: max |M - M^dag| = {herm:.3e}")
    tr = complex(np.trace(m))
    if abs(tr - 1.0) > TRACE_TOL:
        return DensityCheck(False, f"trace is {tr.real:.15g}, not 1")
    if float(np.min(np.diag(m).real)) < -PSD_TOL:
        return DensityCheck(False, "negative diagonal entry")
    return DensityCheck(True, "")


Operand = Union[PureState, DensityOperator]


def _as_density(x: Operand) -> DensityOperator:
    return x.density() if isinstance(x, PureState) else x


def tensor(*operands: Operand) -> Operand:
    """Kronecker product of states, folded left to right.

    Kets stay kets; if any operand is a density operator the result is one.
    """
    if not operands:
        raise ValueError("tensor needs at least one operand")
    if all(isinstance(x, PureState) for x in operands):
        amps = functools.reduce(np.kron, (x.amplitudes for x in operands))
        layout = sum((x.layout for x in operands), ())
        return PureState(amps, layout)
    dens = [_as_density(x) for x in operands]
    mat = functools.reduce(np.kron, (d.matrix for d in dens))
    layout = sum((d.layout for d in dens), ())
    return DensityOperator(mat, layout, check=False)


def from_ensemble(members: Sequence[tuple[float, PureState]]) -> DensityOperator:
    """Statistical operator ``sum_k p_k |psi_k><psi_k|`` of a pure-state ensemble."""
    if not members:
        raise ValueError("ensemble is empty")
    probs = np.array([float(p) for p, _ in members])
    if np.any(probs < 0):
        raise ValueError(f"probabilities must be non-negative, got {probs.tolist()}")
    if abs(probs.sum() - 1.0) > 1e-12:
        raise ValueError(f"probabilities sum to {probs.sum()!r}, not 1")
    dims = {s.dim for _, s in members}
    if len(dims) != 1:
        raise ValueError(f"members have mismatched dimensions {sorted(dims)}")
    layout = members[0][1].layout
    amps = np.stack([s.amplitudes for _, s in members])
    mat = (amps.T * probs) @ amps.conj()
    mat = 0.5 * (mat + mat.conj().T)
    return DensityOperator(mat, layout)


def partial_trace(rho: DensityOperator, keep: Iterable[int]) -> DensityOperator:
    """Trace out every subsystem not listed in ``keep``.

    The kept subsystems appear in increasing index order in the result.
    """
    keep = sorted(set(int(k) for k in keep))
    n = len(rho.layout)
    if not keep:
        raise ValueError("keep must name at least one subsystem")
    if keep[0] < 0 or keep[-1] >= n:
        raise ValueError(f"subsystem indices {keep} out of range for layout {rho.layout}")
    if len(keep) == n:
        return rho
    dims = rho.layout
    t = rho.matrix.reshape(dims + dims)
    row = list(range(n))
    col = [i + n if i in keep else i for i in range(n)]
    out_idx = keep + [k + n for k in keep]
    reduced = np.einsum(t, row + col, out_idx)
    d_keep = int(np.prod([dims[k] for k in keep]))
    mat = reduced.reshape(d_keep, d_keep)
    mat = 0.5 * (mat + mat.conj().T)
    return DensityOperator(mat, [dims[k] for k in keep])


def trace_distance(rho: Operand, sigma: Operand) -> float:
    """Half the trace norm of ``rho - sigma``."""
    a, b = _as_density(rho).matrix, _as_density(sigma).matrix
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    diff = a - b
    diff = 0.5 * (diff + diff.conj().T)
    return float(0.5 * np.sum(np.abs(np.linalg.eigvalsh(diff))))


# ------------------------------------------------------------------ qubits

IDENTITY_2 = _freeze(np.eye(2, dtype=complex))
SIGMA_1 = _freeze(np.array([[0, 1], [1, 0]], dtype=complex))
SIGMA_2 = _freeze(np.array([[0, -1j], [1j, 0]], dtype=complex))
SIGMA_3 = _freeze(np.array([[1, 0], [0, -1]], dtype=complex))
PAULIS = (SIGMA_1, SIGMA_2, SIGMA_3)

KET_0 = PureState([1, 0])
KET_1 = PureState([0, 1])
KET_PLUS = PureState(np.array([1, 1]) / np.sqrt(2))
KET_MINUS = PureState(np.array([1, -1]) / np.sqrt(2))
KET_PLUS_I = PureState(np.array([1, 1j]) / np.sqrt(2))


def basis_state(bits: str | Sequence[int]) -> PureState:
    """Computational-basis product ket, e.g. ``basis_state("101")``."""
    bits = [int(b) for b in bits]
    amps = np.zeros(2 ** len(bits), dtype=complex)
    amps[int("".join(map(str, bits)) or "0", 2)] = 1.0
    return PureState(amps, [2] * len(bits))


def bell_state() -> PureState:
    """``(|00> + |11>) / sqrt(2)``."""
    return PureState(np.array([1, 0, 0, 1]) / np.sqrt(2), [2, 2])


def bloch_of(rho: Operand) -> np.ndarray:
    """Bloch vector ``r_i = Tr[rho sigma_i]`` of a single-qubit state."""
    m = _as_density(rho).matrix
    if m.shape != (2, 2):
        raise ValueError(f"bloch_of needs a qubit, got dimension {m.shape[0]}")
    return np.array([np.trace(m @ s).real for s in PAULIS])


def bloch_to(r) -> DensityOperator:
    """Qubit density operator ``(I + r . sigma) / 2``."""
    r = np.asarray(r, dtype=float).reshape(3)
    length = float(np.linalg.norm(r))
    if length > 1.0 + 1e-12:
        raise ValueError(f"Bloch vector longer than 1: |r| = {length!r}")
    mat = 0.5 * (IDENTITY_2 + sum(ri * s for ri, s in zip(r, PAULIS)))
    return DensityOperator(mat, [2])


def orthogonal_complement(psi: PureState) -> PureState:
    """Qubit state orthogonal to ``psi``; ``(a, b)`` maps to ``(-b*, a*)``."""
    if psi.dim != 2:
        raise ValueError(f"orthogonal_complement needs a qubit, got dimension {psi.dim}")
    a, b = psi.amplitudes
    return PureState([-np.conj(b), np.conj(a)])


# ------------------------------------------------------------ debug JSON


def to_json_dict(op: Operand) -> dict:
    """``{dims, re, im}`` form used by test fixtures. Kets serialize as columns."""
    if isinstance(op, PureState):
        m = op.amplitudes.reshape(-1, 1)
    else:
        m = op.matrix
    return {"dims": list(op.layout), "re": m.real.tolist(), "im": m.imag.tolist()}


def from_json_dict(data: dict) -> Operand:
    m = np.asarray(data["re"], dtype=float) + 1j * np.asarray(data["im"], dtype=float)
    if m.ndim == 2 and m.shape[1] == 1 and m.shape[0] != 1:
        return PureState(m[:, 0], data["dims"])
    return DensityOperator(m, data["dims"])
