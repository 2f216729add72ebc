import numpy as np
import pytest

from measurelab.measurement import computational_basis_povm
from measurelab.sequential import TwoStageExperiment
from measurelab.statekit import bloch_to_density, maximally_mixed
from measurelab.update_rules import LogisticBlochRule, LudersRule

# (criterion, passed, detail) rows filled in by test_acceptance.py
ACCEPTANCE_RESULTS = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in ACCEPTANCE_RESULTS:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def zplus():
    return bloch_to_density((0, 0, 1))


@pytest.fixture
def zminus():
    return bloch_to_density((0, 0, -1))


@pytest.fixture
def half():
    return maximally_mixed(2)


@pytest.fixture
def cb():
    return computational_basis_povm()


@pytest.fixture
def logistic4(cb):
    return TwoStageExperiment(cb, cb, LogisticBlochRule(4.0))


@pytest.fixture
def lueders_cc(cb):
    return TwoStageExperiment(cb, cb, LudersRule())
