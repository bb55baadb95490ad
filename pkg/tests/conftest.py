import numpy as np
import pytest

from metapop.landscape import Ring, from_arrays
from metapop.rates import Constant, Linear, RateModel


@pytest.fixture
def ring2():
    """Two patches, both neighbours of each other, a = (1, 1)."""
    L = from_arrays(np.array([0.0, 1.0]), np.array([1.0, 1.0]), Ring())
    return L, RateModel(Linear(1.0), Constant(0.5), 2)


def chi2_pvalue(counts, probs):
    """Pearson chi-square p-value, pooling cells with tiny expectation."""
    from scipy.stats import chisquare

    counts = np.asarray(counts, dtype=float)
    probs = np.asarray(probs, dtype=float)
    keep = probs * counts.sum() >= 5
    obs = np.r_[counts[keep], counts[~keep].sum()]
    exp = np.r_[probs[keep], probs[~keep].sum()] * counts.sum()
    if exp[-1] == 0:
        obs, exp = obs[:-1], exp[:-1]
    return chisquare(obs, exp).pvalue


ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
