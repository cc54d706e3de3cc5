import numpy as np
import pytest
from dataclasses import replace

from aeosched.scenario import GenerationConfig, generate


@pytest.fixture(scope="session")
def small_gen():
    return GenerationConfig(n_targets=6, observation_period_s=240.0)


@pytest.fixture(scope="session")
def small_scenarios(small_gen):
    return [generate(replace(small_gen, seed=s)) for s in range(8)]


@pytest.fixture(scope="session")
def n40_scenario():
    return generate(GenerationConfig(seed=7))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    from ._acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for k in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[k])
