import numpy as np
import pytest

from calshift.core import LabeledSet, PredictionSet
from calshift.simkit import SimConfig, generate_beta_binary

ACCEPTANCE_LINES = []


def binary_set(scores, labels):
    scores = np.asarray(scores, dtype=float)
    return LabeledSet(PredictionSet(np.column_stack([1 - scores, scores])), np.asarray(labels))


def binary_preds(scores):
    scores = np.asarray(scores, dtype=float)
    return PredictionSet(np.column_stack([1 - scores, scores]))


def calibrated_multiclass(n, k, seed):
    """Dirichlet predictions with labels drawn from them, hence calibrated."""
    rng = np.random.default_rng(seed)
    probs = rng.dirichlet(np.ones(k), size=n)
    cum = probs.cumsum(axis=1)
    u = rng.random(n)[:, None]
    labels = np.minimum((u > cum).sum(axis=1), k - 1)
    return LabeledSet(PredictionSet(probs), labels)


@pytest.fixture
def sim_pair():
    return generate_beta_binary(SimConfig(n=2000, m=2000, seed=123))


@pytest.fixture
def sim_large():
    return generate_beta_binary(SimConfig(n=10000, m=10000, seed=5))


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
