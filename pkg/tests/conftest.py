import itertools

import numpy as np
import pytest

from qensembles.states import DensityOperator, PureState


def random_ket(rng, dim, layout=None):
    z = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return PureState.normalized(z, layout)


def random_density(rng, dims, rank=None):
    d = int(np.prod(dims))
    rank = rank or d
    g = rng.standard_normal((d, rank)) + 1j * rng.standard_normal((d, rank))
    m = g @ g.conj().T
    m /= np.trace(m).real
    return DensityOperator(0.5 * (m + m.conj().T), dims)


def brute_partial_trace(matrix, dims, keep):
    """Index-by-index summation; independent of the einsum implementation."""
    keep = sorted(keep)
    out_dims = [dims[k] for k in keep]
    d_out = int(np.prod(out_dims))
    out = np.zeros((d_out, d_out), dtype=complex)
    strides = [int(np.prod(dims[i + 1:])) for i in range(len(dims))]
    for row in itertools.product(*(range(d) for d in dims)):
        for col in itertools.product(*(range(d) for d in dims)):
            if any(row[i] != col[i] for i in range(len(dims)) if i not in keep):
                continue
            r = sum(row[i] * strides[i] for i in range(len(dims)))
            c = sum(col[i] * strides[i] for i in range(len(dims)))
            ro = co = 0
            for k in keep:
                ro = ro * dims[k] + row[k]
                co = co * dims[k] + col[k]
            out[ro, co] += matrix[r, c]
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(20261019)


_ACCEPTANCE = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _ACCEPTANCE[report.nodeid] = report.outcome


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for nodeid, outcome in _ACCEPTANCE.items():
        name = nodeid.split("::")[-1]
        terminalreporter.write_line(f"{'PASS' if outcome == 'passed' else 'FAIL'}  {name}")
