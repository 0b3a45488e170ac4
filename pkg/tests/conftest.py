import numpy as np
import pytest

from inertial_kuramoto import OscillatorNetwork, compute_constants, simulate
from inertial_kuramoto.certifier import certify
from inertial_kuramoto.reference import reference_initial_state, reference_network, reference_params

REF_DT = 1e-7
REF_HORIZON = 0.2
REF_STRIDE = 100


@pytest.fixture(scope="session")
def ref_net():
    return reference_network()


@pytest.fixture(scope="session")
def ref_constants(ref_net):
    return compute_constants(ref_net)


@pytest.fixture(scope="session")
def ref_report(ref_constants):
    init = reference_initial_state()
    p = np.ptp(init.phase), np.ptp(init.frequency)
    return certify(ref_constants, 780.0, *p, reference_params())


@pytest.fixture(scope="session")
def ref_trajectory(ref_net):
    """The full reference run; shared because it takes several seconds."""
    return simulate(ref_net, reference_initial_state(), REF_DT, REF_HORIZON,
                    REF_STRIDE, params=reference_params())


@pytest.fixture
def small_network():
    """Nonstiff all-to-all instance used for convergence and symmetry checks."""
    rng = np.random.default_rng(7)
    n = 4
    weights = rng.uniform(0.5, 1.5, (n, n))
    np.fill_diagonal(weights, 0.0)
    return OscillatorNetwork.homogeneous(
        gamma=0.1,
        damping=rng.uniform(0.8, 1.2, n),
        natural_frequency=rng.uniform(-0.5, 0.5, n),
        coupling=2.0,
        weights=weights,
        frustration=0.05,
    )


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
