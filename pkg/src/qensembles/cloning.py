"""1 -> 2 qubit cloners and the entangled-pair signaling test.

Qubit order in the three-qubit register is (clone A, clone B, ancilla C).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .measurement import conditional_state, sigma_phi, spectral_decompose
from .states import (
    KET_0,
    KET_PLUS,
    KET_PLUS_I,
    SIGMA_3,
    DensityOperator,
    InvariantError,
    PureState,
    basis_state,
    bell_state,
    bloch_of,
    partial_trace,
    tensor,
)

BUZEK_HILLERY = "buzek_hillery"
PERFECT = "perfect_hypothetical"


class NonUniversalChannelError(ValueError):
    """Per-probe shrinking factors disagree."""


@dataclass(frozen=True, eq=False)
class CloningChannel:
    kind: str
    unitary: np.ndarray | None = None
    blank: PureState | None = None
    ancilla: PureState | None = None

    def evolve(self, psi: PureState) -> PureState:
        """Three-qubit output ``U |psi, blank, ancilla>`` (Buzek-Hillery only)."""
        if self.kind != BUZEK_HILLERY:
            raise ValueError(f"{self.kind} has no unitary dilation")
        inp = tensor(_qubit(psi), self.blank, self.ancilla)
        return PureState(self.unitary @ inp.amplitudes, [2, 2, 2])

    def joint(self, rho: DensityOperator | PureState) -> DensityOperator:
        """Two-clone state for a qubit input.

        The Buzek-Hillery channel is linear and accepts mixed inputs; the
        perfect cloner is only defined on pure states, so a mixed input
        raises ``ValueError``.
        """
        if self.kind == PERFECT:
            psi = rho if isinstance(rho, PureState) else _pure_part(rho)
            return tensor(psi, psi).density()
        if isinstance(rho, PureState):
            return partial_trace(self.evolve(rho).density(), [0, 1])
        env = tensor(self.blank, self.ancilla).density()
        full = tensor(rho, env).matrix
        out = DensityOperator(self.unitary @ full @ self.unitary.conj().T, [2, 2, 2], check=False)
        return partial_trace(out, [0, 1])


def _qubit(psi: PureState) -> PureState:
    if psi.dim != 2:
        raise ValueError(f"cloners take single qubits, got dimension {psi.dim}")
    return psi


def _pure_part(rho: DensityOperator) -> PureState:
    vals, vecs = np.linalg.eigh(rho.matrix)
    if vals[-1] < 1.0 - 1e-10:
        raise ValueError("the perfect cloner is only defined on pure input states")
    return PureState.normalized(vecs[:, -1], rho.layout)


def _complete_unitary(fixed: dict[int, np.ndarray], dim: int) -> np.ndarray:
    """Fill the remaining columns by Gram-Schmidt over the canonical basis, in order."""
    u = np.zeros((dim, dim), dtype=complex)
    basis = [v for v in fixed.values()]
    for col, v in fixed.items():
        u[:, col] = v
    free = [c for c in range(dim) if c not in fixed]
    for e in np.eye(dim, dtype=complex):
        if not free:
            break
        w = e.copy()
        for _ in range(2):
            for b in basis:
                w -= np.vdot(b, w) * b
        norm = np.linalg.norm(w)
        if norm < 1e-8:
            continue
        w /= norm
        basis.append(w)
        u[:, free.pop(0)] = w
    return u


def buzek_hillery(blank: int = 0, ancilla: int = 0) -> CloningChannel:
    """Universal symmetric 1 -> 2 cloner with blank ``|blank>`` and ancilla ``|ancilla>``."""
    if blank not in (0, 1) or ancilla not in (0, 1):
        raise ValueError("blank and ancilla must be 0 or 1")
    a, b = np.sqrt(2 / 3), np.sqrt(1 / 6)
    col0 = (a * basis_state("001").amplitudes
            - b * basis_state("010").amplitudes
            - b * basis_state("100").amplitudes)
    col1 = (-a * basis_state("110").amplitudes
            + b * basis_state("011").amplitudes
            + b * basis_state("101").amplitudes)
    i0 = 2 * blank + ancilla
    u = _complete_unitary({i0: col0, 4 + i0: col1}, 8)
    if np.max(np.abs(u.conj().T @ u - np.eye(8))) > 1e-10:
        raise InvariantError("unitary completion failed")
    u.setflags(write=False)
    return CloningChannel(
        BUZEK_HILLERY, u, basis_state([blank]), basis_state([ancilla])
    )


def perfect_cloner() -> CloningChannel:
    """The impossible ``|psi> -> |psi>|psi>`` map, for the signaling contrast only."""
    return CloningChannel(PERFECT)


class CloneOutput(NamedTuple):
    joint: DensityOperator
    clone_a: DensityOperator
    clone_b: DensityOperator


def clone(channel: CloningChannel, psi: PureState) -> CloneOutput:
    joint = channel.joint(_qubit(psi))
    return CloneOutput(joint, partial_trace(joint, [0]), partial_trace(joint, [1]))


def single_clone_fidelity(psi: PureState, rho: DensityOperator) -> float:
    """Overlap ``<psi|rho|psi>``."""
    v = psi.amplitudes
    value = complex(np.vdot(v, rho.matrix @ v))
    if abs(value.imag) > 1e-12:
        raise InvariantError(f"fidelity has imaginary part {value.imag:.3e}")
    return value.real


def haar_qubits(n: int, seed: int) -> list[PureState]:
    """``n`` Haar-random qubit states from normalized complex Gaussians."""
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((n, 2)) + 1j * rng.standard_normal((n, 2))
    return [PureState.normalized(row) for row in z]


def average_fidelity(channel: CloningChannel, n_samples: int, seed: int) -> float:
    """Monte Carlo estimate of the clone fidelity averaged over inputs and both clones."""
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    total = 0.0
    for psi in haar_qubits(n_samples, seed):
        out = clone(channel, psi)
        total += single_clone_fidelity(psi, out.clone_a) + single_clone_fidelity(psi, out.clone_b)
    return total / (2 * n_samples)


DEFAULT_PROBES = (KET_0, KET_PLUS, KET_PLUS_I)


def shrinking_factor(channel: CloningChannel, probes: Sequence[PureState] = DEFAULT_PROBES,
                     tol: float = 1e-8) -> float:
    """Common Bloch-vector contraction ``eta`` with ``r_clone = eta * r_input``.

    Args:
        channel: cloner to probe.
        probes: pure inputs whose Bloch vectors span three dimensions.
        tol: allowed spread of per-probe estimates and of the off-axis residual.

    Raises:
        NonUniversalChannelError: the channel does not shrink every probe alike.
    """
    rs = np.array([bloch_of(p.density()) for p in probes])
    if np.linalg.matrix_rank(rs, tol=1e-8) < 3:
        raise ValueError("probe Bloch vectors must span three dimensions")
    etas = []
    for p, r in zip(probes, rs):
        out = clone(channel, p)
        for c in (out.clone_a, out.clone_b):
            r_out = bloch_of(c)
            eta = float(np.dot(r, r_out) / np.dot(r, r))
            if np.linalg.norm(r_out - eta * r) > tol:
                raise NonUniversalChannelError(f"clone Bloch vector not parallel to input for {p!r}")
            etas.append(eta)
    if max(etas) - min(etas) > tol:
        raise NonUniversalChannelError(f"shrinking factors differ across probes: {etas}")
    return float(np.mean(etas))


def alice_observable(setting) -> np.ndarray:
    """``"sigma_3"``, ``"sigma_1"`` or an angle ``phi`` for ``cos(phi) sigma_3 + sin(phi) sigma_1``."""
    if isinstance(setting, str):
        key = setting.strip().lower()
        if key in ("sigma_3", "3", "z"):
            return SIGMA_3
        if key in ("sigma_1", "1", "x"):
            return sigma_phi(np.pi / 2)
        raise ValueError(f"unknown measurement setting {setting!r}")
    phi = float(setting)
    if not 0.0 <= phi < 2 * np.pi:
        raise ValueError(f"phi must lie in [0, 2pi), got {phi}")
    return sigma_phi(phi)


def bob_conditionals(setting) -> list[tuple[float, DensityOperator]]:
    """Bob's outcome-conditional states when Alice measures ``setting`` on the Bell pair."""
    bell = bell_state().density()
    obs = spectral_decompose(alice_observable(setting))
    return [conditional_state(bell, obs.projector(i)) for i in range(obs.eigenvalues.size)]


def bob_unconditional(setting) -> DensityOperator:
    """Bob's single-qubit state averaged over Alice's unknown outcome."""
    mat = sum(p * rho.matrix for p, rho in bob_conditionals(setting))
    return DensityOperator(mat, [2])


def flash_experiment(channel: CloningChannel, setting) -> DensityOperator:
    """Bob's two-qubit state after cloning his half of a Bell pair.

    Alice measures ``setting`` on her qubit; Bob, ignorant of the outcome,
    clones each conditional state and holds the probability-weighted mixture.
    """
    mat = sum(p * channel.joint(rho).matrix for p, rho in bob_conditionals(setting))
    return DensityOperator(mat, [2, 2])


def joint_clone_fidelity(channel: CloningChannel, psi: PureState) -> float:
    """``<psi psi| rho_AB |psi psi>``: how close the joint output is to two perfect copies."""
    target = tensor(psi, psi).amplitudes
    joint = clone(channel, psi).joint.matrix
    return float(np.vdot(target, joint @ target).real)
