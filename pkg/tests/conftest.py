import numpy as np
import pytest

from hedgefuzzy.data import Dataset, load_thyroid_csv
from hedgefuzzy.network import RuleBase


@pytest.fixture(scope="session")
def thyroid():
    return load_thyroid_csv()


def random_rulebase(rng, U, D, K, hedge_high=2.0):
    return RuleBase(
        centers=rng.uniform(0, 1, (U, D)),
        widths=rng.uniform(0.2, 0.8, (U, D)),
        hedges=rng.uniform(0.1, hedge_high, (U, D)),
        weights=rng.uniform(0.05, 1.0, (U, K)),
        rule_class=np.arange(U) % K + 1,
    )


def toy_dataset(rng, n_per_class=20, K=3, D=2, spread=0.08):
    centers = rng.uniform(0.2, 0.8, (K, D))
    X = np.vstack([c + rng.normal(0, spread, (n_per_class, D)) for c in centers])
    y = np.repeat(np.arange(1, K + 1), n_per_class)
    return Dataset(X, y, K)


# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
