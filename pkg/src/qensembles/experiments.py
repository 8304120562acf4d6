"""Experiment drivers and their machine-readable reports."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy import stats

from . import __version__, kernels
from .cloning import (
    BUZEK_HILLERY,
    PERFECT,
    average_fidelity,
    bob_unconditional,
    buzek_hillery,
    flash_experiment,
    perfect_cloner,
    shrinking_factor,
)
from .ensembles import (
    Ensemble,
    FiniteCompositionEnsemble,
    builtin,
    sigma_z_moment_table,
    single_particle_operator,
)
from .states import trace_distance

EXACT_COMB_MAX_N = 1000
BINOMIAL_MAX_N = 10**6
CHUNK_ROWS = 8192

# Stream lanes; a moments row (slot, m) uses lanes 1000 * (slot + 1) + 2 * m (+1).
LANE_FILTER_PREPARE = 1
LANE_FILTER_MEASURE = 2


@dataclass
class ExperimentReport:
    experiment: str
    params: dict
    results: list[dict]
    seed: int | None = None
    summary: dict = field(default_factory=dict)
    version: str = __version__

    def as_dict(self) -> dict:
        return {
            "experiment": self.experiment,
            "params": self.params,
            "results": self.results,
            "seed": self.seed,
            "summary": self.summary,
            "version": self.version,
        }

    def to_json(self) -> str:
        return canonical_json(self.as_dict())

    def to_csv(self) -> str:
        buf = io.StringIO()
        columns: list[str] = []
        for row in self.results:
            for k in row:
                if k not in columns:
                    columns.append(k)
        writer = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
        writer.writeheader()
        for row in self.results:
            writer.writerow({k: _csv_cell(v) for k, v in row.items()})
        return buf.getvalue()


def _csv_cell(v):
    if isinstance(v, float):
        return format(v, ".17g")
    return v


def _encode(obj) -> str:
    if obj is None or isinstance(obj, bool):
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            return json.dumps(str(x))
        return format(x, ".17g")
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        items = sorted((str(k), v) for k, v in obj.items())
        return "{" + ",".join(f"{json.dumps(k)}:{_encode(v)}" for k, v in items) + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        return "[" + ",".join(_encode(v) for v in obj) + "]"
    raise TypeError(f"cannot encode {type(obj).__name__}")


def canonical_json(obj) -> str:
    """Sorted keys, no whitespace, floats at 17 significant digits."""
    return _encode(obj)


# --------------------------------------------------------------- binomials


@dataclass(frozen=True)
class BinomialSpec:
    n: int
    m: int
    p: float

    def __post_init__(self):
        if self.n < 0 or self.m < 0 or self.m > self.n:
            raise ValueError(f"need 0 <= m <= n, got n={self.n}, m={self.m}")
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"p must lie in [0, 1], got {self.p}")


def binomial_pmf(spec: BinomialSpec | int, m: int | None = None, p: float | None = None) -> float:
    """``C(N, m) p^m (1-p)^(N-m)`` with an exact integer coefficient up to N = 1000.

    Accepts either a :class:`BinomialSpec` or ``(n, m, p)``.
    """
    if not isinstance(spec, BinomialSpec):
        spec = BinomialSpec(int(spec), int(m), float(p))
    n, m, p = spec.n, spec.m, spec.p
    if n > BINOMIAL_MAX_N:
        raise ValueError(f"N={n} exceeds the guard {BINOMIAL_MAX_N}")
    if p == 0.0:
        return 1.0 if m == 0 else 0.0
    if p == 1.0:
        return 1.0 if m == n else 0.0
    if n <= EXACT_COMB_MAX_N:
        log_coeff = math.log(math.comb(n, m))
    else:
        log_coeff = math.lgamma(n + 1) - math.lgamma(m + 1) - math.lgamma(n - m + 1)
    return math.exp(log_coeff + m * math.log(p) + (n - m) * math.log1p(-p))


def _check_even(n: int) -> None:
    if n < 2 or n % 2:
        raise ValueError(f"N must be even and >= 2, got {n}")


def discrimination_power(n: int) -> float:
    """Equal-prior success probability of the rule "E5 iff exactly N/2 pass".

    E5 always yields N/2 and is never misidentified; E6 is mistaken for E5
    with probability ``P(N, N/2, 1/2)``.
    """
    _check_even(n)
    return 1.0 - 0.5 * binomial_pmf(n, n // 2, 0.5)


def discrimination_report(n_max: int) -> ExperimentReport:
    _check_even(n_max)
    rows = []
    for n in range(2, n_max + 1, 2):
        pmf = binomial_pmf(n, n // 2, 0.5)
        rows.append({
            "n": n,
            "p_half_pass_e6": pmf,
            "stirling": math.sqrt(2.0 / (math.pi * n)),
            "success_probability": 1.0 - 0.5 * pmf,
        })
    return ExperimentReport(
        "discriminate",
        {"n_max": n_max, "decision_rule": "declare E5 iff exactly N/2 photons pass; equal priors"},
        rows,
    )


# ---------------------------------------------------------- filter statistics


def _resolve(e: Ensemble | str, n_total: int | None) -> Ensemble:
    return builtin(e, n_total) if isinstance(e, str) else e


def _pass_probabilities(e: Ensemble) -> np.ndarray:
    return np.array([abs(s.amplitudes[0]) ** 2 for s in e.states])


def filter_counts(e: Ensemble, n: int, trials: int, seed: int, row0: int = 0) -> np.ndarray:
    """Photons passing a ``|0><0|`` filter, one entry per trial.

    Trial ``t`` draws its preparation and measurement randomness from rows
    ``row0 + t`` of two lanes, independent of the total trial count.
    """
    key = kernels.derive_key(seed)
    p0 = _pass_probabilities(e)
    out = np.empty(trials, dtype=np.int64)
    for start in range(0, trials, CHUNK_ROWS):
        rows = min(CHUNK_ROWS, trials - start)
        idx = e.draw_indices(key, LANE_FILTER_PREPARE, row0 + start, rows, n)
        out[start:start + rows] = kernels.born_zero_counts(
            key, LANE_FILTER_MEASURE, row0 + start, idx, p0
        )
    return out


def pooled_chisquare(observed: np.ndarray, expected: np.ndarray, min_expected: float = 5.0):
    """Chi-square goodness of fit after merging sparse bins into their neighbours."""
    obs_bins: list[float] = []
    exp_bins: list[float] = []
    acc_o = acc_e = 0.0
    for o, e in zip(observed, expected):
        acc_o += o
        acc_e += e
        if acc_e >= min_expected:
            obs_bins.append(acc_o)
            exp_bins.append(acc_e)
            acc_o = acc_e = 0.0
    if acc_e > 0 or acc_o > 0:
        if exp_bins:
            obs_bins[-1] += acc_o
            exp_bins[-1] += acc_e
        else:
            obs_bins.append(acc_o)
            exp_bins.append(acc_e)
    obs_arr, exp_arr = np.array(obs_bins), np.array(exp_bins)
    exp_arr *= obs_arr.sum() / exp_arr.sum()
    if obs_arr.size < 2:
        return 0.0, 1.0, int(obs_arr.size)
    res = stats.chisquare(obs_arr, exp_arr)
    return float(res.statistic), float(res.pvalue), int(obs_arr.size)


def filter_experiment(e: Ensemble | str, n: int, trials: int, seed: int) -> ExperimentReport:
    """Count photons through a ``|0>`` filter for a fixed-composition collection of ``n``.

    Rows give the empirical count distribution next to the binomial law an
    i.i.d. source with the same single-particle operator would produce.
    """
    _check_even(n)
    if trials < 1:
        raise ValueError("trials must be >= 1")
    e = _resolve(e, n)
    if isinstance(e, FiniteCompositionEnsemble) and e.n_total != n:
        raise ValueError(f"ensemble holds {e.n_total} particles, experiment asked for {n}")
    counts = filter_counts(e, n, trials, seed)
    hist = np.bincount(counts, minlength=n + 1)
    p_pass = float(single_particle_operator(e).matrix[0, 0].real)
    pmf = np.array([binomial_pmf(n, k, p_pass) for k in range(n + 1)])
    rows = [
        {"count": k, "occurrences": int(hist[k]), "frequency": hist[k] / trials,
         "binomial_pmf": float(pmf[k])}
        for k in range(n + 1)
    ]
    half = n // 2
    freq_half = hist[half] / trials
    chi2, pvalue, bins = pooled_chisquare(hist.astype(float), pmf * trials)
    summary = {
        "frequency_half": float(freq_half),
        "binomial_pmf_half": float(pmf[half]),
        "frequency_half_stderr": math.sqrt(pmf[half] * (1 - pmf[half]) / trials),
        "mean_count": float(counts.mean()),
        "mean_count_stderr": float(counts.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0,
        "all_trials_exactly_half": bool(np.all(counts == half)),
        "chisquare_vs_binomial": chi2,
        "chisquare_pvalue": pvalue,
        "chisquare_bins": bins,
    }
    return ExperimentReport(
        "filter",
        {"ensemble": e.name, "n": n, "trials": trials, "pass_probability": p_pass},
        rows, seed, summary,
    )


# ------------------------------------------------------------ moment tables


def sampled_sigma_z(e: Ensemble, m: int, samples: int, key: int, lane: int) -> np.ndarray:
    """Collective ``Sigma_z`` outcomes of ``samples`` independent m-particle windows."""
    p0 = _pass_probabilities(e)
    out = np.empty(samples, dtype=np.int64)
    for start in range(0, samples, CHUNK_ROWS):
        rows = min(CHUNK_ROWS, samples - start)
        idx = e.draw_indices(key, lane, start, rows, m)
        zeros = kernels.born_zero_counts(key, lane + 1, start, idx, p0)
        out[start:start + rows] = 2 * zeros - m
    return out


def _mc_moments(values: np.ndarray) -> dict:
    n = values.size
    v = values.astype(np.int64)
    s1, s2, s4 = int(v.sum()), int((v * v).sum()), int((v**4).sum())
    mean, second = s1 / n, s2 / n
    var1 = max(second - mean**2, 0.0)
    var2 = max(s4 / n - second**2, 0.0)
    scale = n / (n - 1) if n > 1 else 0.0
    return {
        "mean": mean,
        "mean_se": math.sqrt(var1 * scale / n),
        "second": second,
        "second_se": math.sqrt(var2 * scale / n),
    }


def moments_experiment(pair: Sequence[Ensemble | str], m_max: int, mc_samples: int = 0,
                       seed: int = 0, n_total: int = 12) -> ExperimentReport:
    """Exact and sampled ``(<Sigma_z>, <Sigma_z^2>)`` for two ensembles, m = 1..m_max."""
    if len(pair) != 2:
        raise ValueError("moments_experiment compares exactly two ensembles")
    if not 1 <= m_max <= 12:
        raise ValueError(f"m_max must be in [1, 12], got {m_max}")
    ensembles = [_resolve(e, n_total) for e in pair]
    key = kernels.derive_key(seed)
    rows = []
    for m in range(1, m_max + 1):
        row: dict = {"m": m}
        for slot, e in enumerate(ensembles):
            tag = e.name if ensembles[0].name != ensembles[1].name else f"{e.name}_{slot}"
            mean, second = sigma_z_moment_table(e, m)
            row[f"{tag}_mean"] = mean
            row[f"{tag}_second"] = second
            if mc_samples > 0:
                lane = 1000 * (slot + 1) + 2 * m
                mc = _mc_moments(sampled_sigma_z(e, m, mc_samples, key, lane))
                for k, v in mc.items():
                    row[f"{tag}_mc_{k}"] = v
        rows.append(row)
    params = {"pair": [e.name for e in ensembles], "m_max": m_max, "mc_samples": mc_samples}
    return ExperimentReport("moments", params, rows, seed if mc_samples > 0 else None)


# ------------------------------------------------------------------- cloning


def flash_report(phis: Iterable[float]) -> ExperimentReport:
    """Distance between Bob's states for Alice measuring ``sigma_phi`` versus ``sigma_3``."""
    phis = [float(p) for p in phis]
    channels = {PERFECT: perfect_cloner(), BUZEK_HILLERY: buzek_hillery()}
    ref_states = {name: flash_experiment(c, "sigma_3") for name, c in channels.items()}
    ref_single = bob_unconditional("sigma_3")
    rows = []
    for phi in phis:
        row = {
            "phi": float(phi),
            "single_particle_distance": trace_distance(bob_unconditional(phi), ref_single),
        }
        for name, c in channels.items():
            row[f"{name}_distance"] = trace_distance(flash_experiment(c, phi), ref_states[name])
        rows.append(row)
    return ExperimentReport("flash", {"phis": phis}, rows)


def clone_report(samples: int, seed: int) -> ExperimentReport:
    rows = []
    for name, c in ((BUZEK_HILLERY, buzek_hillery()), (PERFECT, perfect_cloner())):
        eta = shrinking_factor(c)
        rows.append({
            "cloner": name,
            "average_fidelity": average_fidelity(c, samples, seed),
            "shrinking_factor": eta,
            "fidelity_from_eta": 0.5 * (1 + eta),
        })
    return ExperimentReport("clone", {"samples": samples}, rows, seed)
