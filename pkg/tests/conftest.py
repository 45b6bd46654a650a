import warnings

import pytest

from gkdvlab import Grid, gauge_shift, mkdv, minimize_energy_at_charge
from gkdvlab.solitons import mkdv_charge
from gkdvlab.stability import Kind, PerturbationSpec, stability_experiment

KS = (1, 2, 3)
EPSILONS = (1e-3, 1e-2)


@pytest.fixture(scope="session")
def grid():
    return Grid(1024, 80.0)


@pytest.fixture(scope="session")
def shifted_models():
    return {k: gauge_shift(mkdv(k))[0] for k in KS}


@pytest.fixture(scope="session")
def ground_states(grid, shifted_models):
    """Minimizers at the charge of the speed-1 closed-form soliton."""
    return {
        k: minimize_energy_at_charge(shifted_models[k], grid, mkdv_charge(k, 1.0))
        for k in KS
    }


@pytest.fixture(scope="session")
def stability_reports(ground_states, shifted_models):
    specs = [PerturbationSpec(kind, eps) for kind in Kind for eps in EPSILONS]
    return {
        k: stability_experiment(ground_states[k], shifted_models[k], specs, t_end=20.0, dt=1e-3)
        for k in KS
    }


@pytest.fixture
def quiet():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        yield


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
