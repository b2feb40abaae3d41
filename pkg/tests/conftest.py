import pytest

from src.core.approximation import Approximation
from src.increments.exp_diff import ExpDiff
from src.increments.pareto_mg1 import ParetoMG1
from src.increments.weibull import WeibullDetArrival


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run slow reproduction tests")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture(scope="session")
def weibull():
    return WeibullDetArrival(coef=2.0, shape=0.5, interarrival=1.0)


@pytest.fixture(scope="session")
def pareto():
    return ParetoMG1(alpha=2.5, lam=0.75)


@pytest.fixture(scope="session")
def exp_diff():
    return ExpDiff(mu=1.0, lam=0.5)


@pytest.fixture(scope="session")
def weibull_approx(weibull):
    return Approximation(weibull)


@pytest.fixture(scope="session")
def pareto_approx(pareto):
    return Approximation(pareto)
