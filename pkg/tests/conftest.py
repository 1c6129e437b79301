import numpy as np
import pytest

from reference import stage_independent
from strsub.task_assignment import TaskAssignmentInstance, TaskAssignmentOracle


def task_oracle(probs, K, lo=None, hi=None):
    """Single-subtask oracle with stage-independent probabilities."""
    probs = np.asarray(probs, dtype=float)
    lo = probs.min() if lo is None else lo
    hi = probs.max() if hi is None else hi
    m = probs.size
    inst = TaskAssignmentInstance(stage_independent(probs, K), np.full((1, m), lo), np.full((1, m), hi))
    return TaskAssignmentOracle(inst)


@pytest.fixture
def two_agent_oracle():
    # p(0)=0.6, p(1)=0.7 at every stage, K=2
    return task_oracle([0.6, 0.7], 2)


@pytest.fixture
def identical_oracle():
    return task_oracle([0.5, 0.5], 2)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    setattr(item, f"rep_{rep.when}", rep)
