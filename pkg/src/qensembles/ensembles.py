"""Quantum ensembles as preparation procedures.

Three kinds share one interface:

``IIDEnsemble``
    every preparation is an independent draw from ``{p_k, psi_k}``;
``SequenceEnsemble``
    a fixed periodic pattern started at a uniformly random offset;
``FiniteCompositionEnsemble``
    exactly ``count_k`` copies of each ``psi_k`` in uniformly random order.

All of them can share a single-particle operator while their m-particle
window operators differ.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np

from . import kernels
from .measurement import collective_sigma_z, expectation
from .states import (
    KET_0,
    KET_1,
    KET_MINUS,
    KET_PLUS,
    DensityOperator,
    PureState,
    from_ensemble,
    tensor,
)

MAX_WINDOW = 12


def _check_qubits(states) -> tuple[PureState, ...]:
    states = tuple(states)
    if not states:
        raise ValueError("an ensemble needs at least one state")
    for s in states:
        if not isinstance(s, PureState) or s.dim != 2:
            raise ValueError(f"ensemble members must be single-qubit PureStates, got {s!r}")
    return states


@dataclass(frozen=True, eq=False)
class IIDEnsemble:
    states: tuple[PureState, ...]
    probabilities: tuple[float, ...]
    name: str = "iid"

    def __post_init__(self):
        object.__setattr__(self, "states", _check_qubits(self.states))
        probs = tuple(float(p) for p in self.probabilities)
        if len(probs) != len(self.states):
            raise ValueError("need one probability per state")
        if any(p < 0 for p in probs) or abs(sum(probs) - 1.0) > 1e-12:
            raise ValueError(f"probabilities must be non-negative and sum to 1, got {probs}")
        object.__setattr__(self, "probabilities", probs)

    @property
    def members(self) -> list[tuple[float, PureState]]:
        return list(zip(self.probabilities, self.states))

    def draw_indices(self, key: int, lane: int, row0: int, n_rows: int, m: int) -> np.ndarray:
        u = kernels.hash_uniforms(key, lane, row0, n_rows, m)
        cdf = np.cumsum(self.probabilities)
        idx = np.searchsorted(cdf, u, side="right")
        return np.minimum(idx, len(self.states) - 1)


@dataclass(frozen=True, eq=False)
class SequenceEnsemble:
    pattern: tuple[PureState, ...]
    name: str = "sequence"

    def __post_init__(self):
        object.__setattr__(self, "pattern", _check_qubits(self.pattern))

    @property
    def states(self) -> tuple[PureState, ...]:
        return self.pattern

    @property
    def period(self) -> int:
        return len(self.pattern)

    def draw_indices(self, key: int, lane: int, row0: int, n_rows: int, m: int) -> np.ndarray:
        u = kernels.hash_uniforms(key, lane, row0, n_rows, 1)[:, 0]
        offset = np.minimum((u * self.period).astype(np.int64), self.period - 1)
        return (offset[:, None] + np.arange(m)[None, :]) % self.period


@dataclass(frozen=True, eq=False)
class FiniteCompositionEnsemble:
    states: tuple[PureState, ...]
    counts: tuple[int, ...]
    name: str = "finite"

    def __post_init__(self):
        object.__setattr__(self, "states", _check_qubits(self.states))
        counts = tuple(int(c) for c in self.counts)
        if len(counts) != len(self.states):
            raise ValueError("need one count per state")
        if any(c < 0 for c in counts) or sum(counts) < 1:
            raise ValueError(f"counts must be non-negative with a positive total, got {counts}")
        object.__setattr__(self, "counts", counts)

    @property
    def n_total(self) -> int:
        return sum(self.counts)

    def draw_indices(self, key: int, lane: int, row0: int, n_rows: int, m: int) -> np.ndarray:
        if m > self.n_total:
            raise ValueError(f"cannot draw {m} particles from a collection of {self.n_total}")
        base = np.repeat(np.arange(len(self.states)), self.counts)
        return kernels.shuffled_rows(key, lane, row0, n_rows, base)[:, :m]


Ensemble = Union[IIDEnsemble, SequenceEnsemble, FiniteCompositionEnsemble]


def single_particle_operator(e: Ensemble) -> DensityOperator:
    """Density operator of one preparation taken in isolation."""
    if isinstance(e, IIDEnsemble):
        return from_ensemble(e.members)
    if isinstance(e, SequenceEnsemble):
        w = 1.0 / e.period
        return from_ensemble([(w, s) for s in e.pattern])
    n = e.n_total
    return from_ensemble([(c / n, s) for s, c in zip(e.states, e.counts) if c])


def _mixture_of_products(weights, sequences, states) -> DensityOperator:
    m = len(sequences[0])
    kets = np.stack([
        tensor(*(states[i] for i in seq)).amplitudes for seq in sequences
    ])
    w = np.asarray(weights, dtype=float)
    mat = (kets.T * w) @ kets.conj()
    mat = 0.5 * (mat + mat.conj().T)
    return DensityOperator(mat, [2] * m)


def _ordered_draws(counts: tuple[int, ...], m: int):
    """Yield (sequence, probability) for ordered draws without replacement."""
    remaining = list(counts)
    total = sum(counts)
    seq: list[int] = []

    def rec(weight: float, left: int):
        if len(seq) == m:
            yield tuple(seq), weight
            return
        for k, c in enumerate(remaining):
            if c == 0:
                continue
            remaining[k] -= 1
            seq.append(k)
            yield from rec(weight * c / left, left - 1)
            seq.pop()
            remaining[k] += 1

    yield from rec(1.0, total)


def window_operator(e: Ensemble, m: int) -> DensityOperator:
    """Joint density operator of ``m`` consecutive preparations."""
    if not 1 <= m <= MAX_WINDOW:
        raise ValueError(f"window length must be in [1, {MAX_WINDOW}], got {m}")
    if isinstance(e, IIDEnsemble):
        rho1 = single_particle_operator(e)
        return tensor(*([rho1] * m)) if m > 1 else rho1
    if isinstance(e, SequenceEnsemble):
        p = e.period
        seqs = [tuple((o + j) % p for j in range(m)) for o in range(p)]
        return _mixture_of_products([1.0 / p] * p, seqs, e.pattern)
    if e.n_total > MAX_WINDOW or m > e.n_total:
        raise ValueError(
            f"finite-composition windows need m <= N <= {MAX_WINDOW}, got m={m}, N={e.n_total}"
        )
    seqs, weights = zip(*_ordered_draws(e.counts, m))
    return _mixture_of_products(weights, seqs, e.states)


def sigma_z_moment_table(e: Ensemble, m: int) -> tuple[float, float]:
    """``(<Sigma_z>, <Sigma_z^2>)`` on the m-particle window."""
    rho = window_operator(e, m)
    sz = collective_sigma_z(m)
    return expectation(rho, sz, 1), expectation(rho, sz, 2)


def sample(e: Ensemble, n: int, seed: int) -> list[PureState]:
    """Deterministic realization of ``n`` successive preparations."""
    if n < 1:
        raise ValueError(f"n must be positive, got {n}")
    if isinstance(e, FiniteCompositionEnsemble) and n != e.n_total:
        raise ValueError(f"finite ensemble holds exactly {e.n_total} particles, asked for {n}")
    idx = e.draw_indices(kernels.derive_key(seed), 0, 0, 1, n)[0]
    return [e.states[i] for i in idx]


# ---------------------------------------------------------------- built-ins


def e1() -> IIDEnsemble:
    return IIDEnsemble((KET_1, KET_0), (0.5, 0.5), name="E1")


def e2() -> IIDEnsemble:
    return IIDEnsemble((KET_PLUS, KET_MINUS), (0.5, 0.5), name="E2")


def e3() -> SequenceEnsemble:
    return SequenceEnsemble((KET_1, KET_0), name="E3")


def e4() -> SequenceEnsemble:
    return SequenceEnsemble((KET_PLUS, KET_MINUS), name="E4")


def e5(n_total: int) -> FiniteCompositionEnsemble:
    _check_even(n_total)
    return FiniteCompositionEnsemble((KET_0, KET_1), (n_total // 2, n_total // 2), name="E5")


def e6(n_total: int) -> FiniteCompositionEnsemble:
    _check_even(n_total)
    return FiniteCompositionEnsemble((KET_PLUS, KET_MINUS), (n_total // 2, n_total // 2), name="E6")


def _check_even(n: int) -> None:
    if n < 2 or n % 2:
        raise ValueError(f"N must be even and >= 2, got {n}")


BUILTINS = {"E1": e1, "E2": e2, "E3": e3, "E4": e4, "E5": e5, "E6": e6}
_SIZED = {"E5", "E6"}


def builtin(name: str, n_total: int | None = None) -> Ensemble:
    """Look up E1..E6; E5 and E6 need ``n_total``."""
    key = name.strip().upper()
    if key not in BUILTINS:
        raise KeyError(f"unknown ensemble {name!r}; choose from {sorted(BUILTINS)}")
    if key in _SIZED:
        if n_total is None:
            raise ValueError(f"{key} needs n_total")
        return BUILTINS[key](n_total)
    return BUILTINS[key]()


# --------------------------------------------------------------- JSON files


def _state_from_pairs(pairs) -> PureState:
    amps = [complex(float(re), float(im)) for re, im in pairs]
    if len(amps) != 2:
        raise ValueError(f"each state needs two [re, im] amplitude pairs, got {pairs!r}")
    return PureState(amps)


def ensemble_from_dict(data: dict) -> Ensemble:
    """Parse the ensemble file schema.

    ``states`` is a list of qubit states, each ``[[re0, im0], [re1, im1]]``.
    ``iid`` files add ``probs``; ``sequence`` files add ``pattern`` (indices
    into ``states`` for one period); ``finite`` files add ``counts`` and
    optionally ``n_total`` (checked against the counts).
    """
    kind = data.get("type")
    states = [_state_from_pairs(s) for s in data.get("states", [])]
    name = str(data.get("name", kind))
    if kind == "iid":
        return IIDEnsemble(tuple(states), tuple(data["probs"]), name=name)
    if kind == "sequence":
        pattern = tuple(states[int(i)] for i in data["pattern"])
        return SequenceEnsemble(pattern, name=name)
    if kind == "finite":
        e = FiniteCompositionEnsemble(tuple(states), tuple(data["counts"]), name=name)
        if "n_total" in data and int(data["n_total"]) != e.n_total:
            raise ValueError(f"n_total={data['n_total']} disagrees with counts summing to {e.n_total}")
        return e
    raise ValueError(f"unknown ensemble type {kind!r}; expected iid, sequence or finite")


def load_ensemble(path: str | Path) -> Ensemble:
    with open(path) as fh:
        return ensemble_from_dict(json.load(fh))


def ensemble_to_dict(e: Ensemble) -> dict:
    def pairs(s: PureState):
        return [[float(a.real), float(a.imag)] for a in s.amplitudes]

    if isinstance(e, IIDEnsemble):
        return {"type": "iid", "name": e.name, "states": [pairs(s) for s in e.states],
                "probs": list(e.probabilities)}
    if isinstance(e, SequenceEnsemble):
        return {"type": "sequence", "name": e.name, "states": [pairs(s) for s in e.pattern],
                "pattern": list(range(e.period))}
    return {"type": "finite", "name": e.name, "states": [pairs(s) for s in e.states],
            "counts": list(e.counts), "n_total": e.n_total}
