import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))  # make oracles importable

from amdp_lab import DeterministicPolicy, TabularMdp, two_state_cycle, two_state_slow_chain


@pytest.fixture
def cycle() -> TabularMdp:
    return two_state_cycle()


@pytest.fixture
def cycle_policy() -> DeterministicPolicy:
    return DeterministicPolicy(np.array([0, 0]))


@pytest.fixture
def slow4() -> TabularMdp:
    return two_state_slow_chain(4)


@pytest.fixture
def self_loop() -> TabularMdp:
    """One state, one action, reward 0.7."""
    return TabularMdp(1, 1, np.array([[[1.0]]]), np.array([[0.7]]))


def make_stay_or_cycle() -> TabularMdp:
    """Two-state cycle plus a 'stay' alternative at state 0.

    Action 0 at state 0 moves (reward 1), action 1 stays (reward 0.6);
    state 1 always moves back with reward 0.
    """
    P = np.zeros((2, 2, 2))
    P[0, 0, 1] = 1.0
    P[0, 1, 0] = 1.0
    P[1, :, 0] = 1.0
    r = np.array([[1.0, 0.6], [0.0, 0.0]])
    return TabularMdp(2, 2, P, r)


def make_transient_funnel() -> TabularMdp:
    """Weakly communicating, single action: state 0 always falls into the
    absorbing state 1, so it is transient under every policy."""
    P = np.zeros((2, 1, 2))
    P[0, 0, 1] = 1.0
    P[1, 0, 1] = 1.0
    r = np.array([[0.25], [0.75]])
    return TabularMdp(2, 1, P, r)


def make_two_absorbing() -> TabularMdp:
    """Not weakly communicating: two absorbing states fed by a coin flip."""
    P = np.zeros((3, 1, 3))
    P[0, 0, 1] = 0.5
    P[0, 0, 2] = 0.5
    P[1, 0, 1] = 1.0
    P[2, 0, 2] = 1.0
    r = np.array([[0.0], [0.3], [0.9]])
    return TabularMdp(3, 1, P, r)


def pytest_terminal_summary(terminalreporter):
    """Echo the per-criterion acceptance lines at the end of the run."""
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
