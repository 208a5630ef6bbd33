import numpy as np
import pytest

from cpdeconv import CpdFactors, HsiCube, KernelBank


def random_factors(rng, p, q, n, r):
    return CpdFactors(rng.uniform(size=(p, r)), rng.uniform(size=(q, r)), rng.uniform(size=(n, r)))


def random_problem(rng, p=8, q=8, n=3, r=2, k=3):
    """Random factors, observation and an asymmetric k x k kernel per band."""
    factors = random_factors(rng, p, q, n, r)
    kernels = [rng.uniform(size=(k, k)) for _ in range(n)]
    bank = KernelBank.from_kernels(kernels, p, q)
    observed = HsiCube(rng.uniform(size=(n, p, q)))
    return factors, observed, bank


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one line per acceptance criterion, printed at the end of the run
ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[n])
