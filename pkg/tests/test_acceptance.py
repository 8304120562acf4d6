"""Exit criteria, one test each, at the tolerances fixed for the build."""

import json
import math
import os
import subprocess
import sys
import time

import numpy as np
import pytest
from scipy import stats

from conftest import random_density, random_ket
from qensembles import ensembles as E
from qensembles.cloning import (
    buzek_hillery,
    clone,
    flash_experiment,
    haar_qubits,
    perfect_cloner,
    shrinking_factor,
    single_clone_fidelity,
)
from qensembles.experiments import binomial_pmf, filter_experiment, moments_experiment
from qensembles.measurement import (
    born,
    conditional_state,
    expectation,
    sigma_phi,
    spectral_decompose,
)
from qensembles.states import (
    IDENTITY_2,
    DensityOperator,
    from_ensemble,
    is_density_operator,
    orthogonal_complement,
    partial_trace,
    tensor,
    trace_distance,
)

pytestmark = pytest.mark.acceptance


def test_01_clone_fidelity_five_sixths():
    start = time.perf_counter()
    c = buzek_hillery()
    for psi in haar_qubits(100, seed=101):
        out = clone(c, psi)
        assert abs(single_clone_fidelity(psi, out.clone_a) - 5 / 6) <= 1e-12
        assert abs(single_clone_fidelity(psi, out.clone_b) - 5 / 6) <= 1e-12
    assert time.perf_counter() - start < 1.0


def test_02_shrinking_factor_two_thirds():
    start = time.perf_counter()
    eta = shrinking_factor(buzek_hillery())
    assert abs(eta - 2 / 3) <= 1e-10
    assert abs(0.5 * (1 + eta) - 5 / 6) <= 1e-10
    assert time.perf_counter() - start < 1.0


def test_03_generic_three_qubit_output():
    c = buzek_hillery()
    rng = np.random.default_rng(303)
    for _ in range(50):
        psi = random_ket(rng, 2)
        perp = orthogonal_complement(psi)
        target = (math.sqrt(2 / 3) * tensor(psi, psi, perp).amplitudes
                  - math.sqrt(1 / 6) * (tensor(psi, perp, psi).amplitudes
                                        + tensor(perp, psi, psi).amplitudes))
        fidelity = abs(np.vdot(target, c.evolve(psi).amplitudes)) ** 2
        assert fidelity >= 1 - 1e-10


def _perfect_flash_oracle(phi):
    """Eigenvalues of the explicitly written 4x4 difference R(phi) - R(sigma_3)."""
    c, s = math.cos(phi / 2), math.sin(phi / 2)
    kets_phi = [np.array([c, s]), np.array([-s, c])]
    kets_z = [np.array([1.0, 0.0]), np.array([0.0, 1.0])]

    def mixture(kets):
        out = np.zeros((4, 4))
        for k in kets:
            kk = np.kron(k, k)
            out += 0.5 * np.outer(kk, kk)
        return out

    diff = mixture(kets_phi) - mixture(kets_z)
    return 0.5 * float(np.abs(np.linalg.eigvals(diff)).sum())


def test_04_no_signaling():
    bh = buzek_hillery()
    r3 = flash_experiment(bh, "sigma_3")
    rng = np.random.default_rng(404)
    for phi in rng.uniform(0, 2 * np.pi, 20):
        assert trace_distance(flash_experiment(bh, phi), r3) <= 1e-10
    p = perfect_cloner()
    d = trace_distance(flash_experiment(p, np.pi / 2), flash_experiment(p, "sigma_3"))
    oracle = _perfect_flash_oracle(np.pi / 2)
    assert d > 0
    assert abs(d - oracle) <= 1e-10
    assert abs(oracle - 0.5) <= 1e-12  # exact value from sympy


def test_05_moment_tables():
    start = time.perf_counter()
    rep = moments_experiment(["E3", "E4"], 12, mc_samples=100_000, seed=505)
    rows = {r["m"]: r for r in rep.results}
    assert (rows[2]["E3_mean"], rows[2]["E3_second"]) == pytest.approx((0, 0), abs=1e-10)
    assert (rows[2]["E4_mean"], rows[2]["E4_second"]) == pytest.approx((0, 2), abs=1e-10)
    assert (rows[3]["E3_mean"], rows[3]["E3_second"]) == pytest.approx((0, 1), abs=1e-10)
    assert (rows[3]["E4_mean"], rows[3]["E4_second"]) == pytest.approx((0, 3), abs=1e-10)
    for m, r in rows.items():
        assert abs(r["E3_mean"]) <= 1e-10 and abs(r["E4_mean"]) <= 1e-10
        assert abs(r["E3_second"] - (m % 2)) <= 1e-10
        assert abs(r["E4_second"] - m) <= 1e-10
        for tag in ("E3", "E4"):
            for k in ("mean", "second"):
                assert abs(r[f"{tag}_mc_{k}"] - r[f"{tag}_{k}"]) <= 4 * r[f"{tag}_mc_{k}_se"] + 1e-10
    assert time.perf_counter() - start < 30.0


def test_06_single_particle_operators_coincide():
    half = DensityOperator(IDENTITY_2 / 2)
    for e in (E.e3(), E.e4(), E.e5(100), E.e6(100)):
        assert trace_distance(E.single_particle_operator(e), half) <= 1e-12


def test_07_binomial_asymptotics():
    pmf = binomial_pmf(100, 50, 0.5)
    assert abs(pmf - math.sqrt(2 / (math.pi * 100))) / pmf < 0.005
    n = 1000
    assert abs(n * binomial_pmf(n, n // 2, 0.5) ** 2 - 2 / math.pi) / (2 / math.pi) < 0.01


def test_08_filter_experiment():
    for n in (4, 100):
        e5 = filter_experiment("E5", n, 10_000, seed=808)
        assert e5.summary["all_trials_exactly_half"]
    trials = 100_000
    rep = filter_experiment("E6", 4, trials, seed=808)
    observed = np.array([r["occurrences"] for r in rep.results])
    expected = np.array([binomial_pmf(4, k, 0.5) for k in range(5)]) * trials
    assert stats.chisquare(observed, expected).pvalue > 0.01


def test_09_structural_properties():
    rng = np.random.default_rng(909)
    draws = 100
    for _ in range(draws):
        # Theorem-1 direction: every ensemble mixture is a density operator
        size, dim = int(rng.integers(1, 9)), int(rng.integers(1, 9))
        probs = rng.dirichlet(np.ones(size))
        probs /= probs.sum()
        assert is_density_operator(from_ensemble([(p, random_ket(rng, dim)) for p in probs]).matrix)
    for _ in range(draws):
        dims = [[2, 2], [2, 3], [2, 2, 2]][int(rng.integers(0, 3))]
        rho = random_density(rng, dims, rank=int(rng.integers(1, 4)))
        for keep in ([0], [len(dims) - 1]):
            assert is_density_operator(partial_trace(rho, keep).matrix, tol=1e-10)
    for _ in range(draws):
        rho = random_density(rng, [2, 2], rank=int(rng.integers(1, 5)))
        proj = random_ket(rng, 2).projector()
        lhs = np.trace(rho.matrix @ np.kron(proj, IDENTITY_2))
        rhs = np.trace(partial_trace(rho, [0]).matrix @ proj)
        assert abs(lhs - rhs) <= 1e-10
    for _ in range(draws):
        d = int(rng.integers(2, 7))
        rho = random_density(rng, [d], rank=int(rng.integers(1, d + 1)))
        g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        obs = spectral_decompose(g + g.conj().T)
        dist = born(rho, obs)
        assert abs(dist.probabilities.sum() - 1) <= 1e-10
        assert abs(expectation(rho, obs) - dist.mean()) <= 1e-10
    for _ in range(draws):
        rho = random_density(rng, [2, 2], rank=int(rng.integers(1, 5)))
        obs = spectral_decompose(sigma_phi(rng.uniform(0, 2 * np.pi)))
        total = np.zeros((2, 2), dtype=complex)
        for i in range(obs.eigenvalues.size):
            p, rho_b = conditional_state(rho, obs.projector(i))
            total += p * rho_b.matrix
        assert np.max(np.abs(total - partial_trace(rho, [1]).matrix)) <= 1e-10


COMMANDS = [
    ["moments", "--pair", "E3,E4", "--m-max", "6", "--mc-samples", "20000", "--seed", "10"],
    ["filter", "--ensemble", "E6", "--n", "100", "--trials", "20000", "--seed", "10"],
    ["filter", "--ensemble", "E5", "--n", "100", "--trials", "2000", "--seed", "10"],
    ["discriminate", "--n-max", "200"],
    ["flash", "--phis", "0.2,0.785,1.3"],
    ["clone", "--fidelity", "--samples", "2000", "--seed", "10"],
]


def _cli(argv, **env):
    out = subprocess.run([sys.executable, "-m", "qensembles", *argv], capture_output=True,
                         env={**os.environ, **env}, check=True)
    return out.stdout


def test_10_cli_determinism():
    for argv in COMMANDS:
        first = _cli(argv)
        assert first == _cli(argv), argv
        assert first == _cli(argv, QENSEMBLES_DISABLE_NUMBA="1"), argv
        json.loads(first)
