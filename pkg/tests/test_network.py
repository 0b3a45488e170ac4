import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from inertial_kuramoto import OscillatorNetwork, compute_constants, validate
from inertial_kuramoto.network import connectivity


def brute_connectivity(weights, damping):
    """Ordered-pair enumeration straight from the definition."""
    n = len(damping)
    r = np.asarray(weights, float) / np.asarray(damping, float)[:, None]
    vals = []
    for i, j in itertools.permutations(range(n), 2):
        shared = sum(min(r[i, k], r[j, k]) for k in range(n) if k not in (i, j))
        vals.append(r[i, j] + r[j, i] + shared)
    return min(vals)


def test_ref_constants(ref_constants):
    c = ref_constants
    assert c.n == 4
    assert c.connectivity == pytest.approx(1.0088781275221953, rel=1e-13)
    assert c.psi_u == pytest.approx(1.0911074740861975, rel=1e-13)
    assert c.d_omega == pytest.approx(0.005694353170002079, rel=1e-12)
    assert c.alpha_bar == 1e-6
    assert c.gamma == pytest.approx(1e-6, rel=1e-12)


def test_all_to_all_unit_connectivity_equals_n():
    for n in range(2, 9):
        w = np.ones((n, n)) - np.eye(n)
        net = OscillatorNetwork.homogeneous(0.1, np.ones(n), np.zeros(n), 1.0, w)
        assert compute_constants(net).connectivity == pytest.approx(n)
        assert brute_connectivity(w, np.ones(n)) == pytest.approx(n)


def test_disconnected_pair_has_zero_connectivity():
    w = np.array([[0, 1, 0], [1, 0, 0], [0, 0, 0]], float)
    net = OscillatorNetwork.homogeneous(0.1, np.ones(3), np.zeros(3), 1.0, w)
    assert compute_constants(net).connectivity == 0.0


def test_diagonal_weights_are_ignored():
    w = np.ones((3, 3))
    net = OscillatorNetwork.homogeneous(0.1, np.ones(3), np.zeros(3), 1.0, w)
    c = compute_constants(net)
    assert c.connectivity == pytest.approx(3.0)
    assert c.psi_u == 1.0


def test_heterogeneous_ratio_has_no_gamma():
    net = OscillatorNetwork([1e-6, 2e-6], [1.0, 1.0], [0, 0], 1.0, [[0, 1], [1, 0]])
    assert compute_constants(net).gamma is None


def test_scalar_frustration_fills_off_diagonal():
    net = OscillatorNetwork.homogeneous(0.1, np.ones(3), np.zeros(3), 1.0, np.ones((3, 3)), 1e-6)
    assert np.all(np.diag(net.frustration) == 0)
    assert np.all(net.frustration[~np.eye(3, dtype=bool)] == 1e-6)


def test_network_arrays_are_read_only():
    net = OscillatorNetwork.homogeneous(0.1, np.ones(2), np.zeros(2), 1.0, np.ones((2, 2)))
    with pytest.raises(ValueError):
        net.weights[0, 1] = 5.0


def test_shape_mismatch_rejected():
    with pytest.raises(ValueError, match="expected"):
        OscillatorNetwork([1.0, 1.0], [1.0], [0.0, 0.0], 1.0, np.ones((2, 2)))


def test_validate_reports_each_violation():
    net = OscillatorNetwork(
        inertia=[1.0, 1.0, 1.0],
        damping=[1.0, 1.0, 0.0],
        natural_frequency=[0.0, 0.0, 0.0],
        coupling=0.0,
        weights=[[0, -1, 1], [1, 0, 1], [1, 1, 0]],
        frustration=[[0.1, 0, 0], [0, 0, 2.0], [0, 0, 0]],
    )
    msgs = validate(net)
    assert "damping must be strictly positive at 2" in msgs
    assert any(m.startswith("coupling must be strictly positive") for m in msgs)
    assert "weights must be nonnegative at 0,1" in msgs
    assert "frustration must lie in [0, pi/2) at 1,2" in msgs
    assert "diagonal frustration nonzero at 0" in msgs


def test_reference_network_is_valid(ref_net):
    assert validate(ref_net) == []


# -- properties -------------------------------------------------------------

sizes = st.integers(min_value=2, max_value=6)


@st.composite
def weighted(draw):
    n = draw(sizes)
    w = draw(arrays(float, (n, n), elements=st.floats(0.0, 3.0)))
    d = draw(arrays(float, n, elements=st.floats(0.2, 2.0)))
    return w, d


@settings(max_examples=60, deadline=None)
@given(weighted())
def test_connectivity_matches_brute_force(wd):
    w, d = wd
    np.fill_diagonal(w, 0.0)
    assert connectivity(w / d[:, None]) == pytest.approx(brute_connectivity(w, d), abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(weighted(), st.floats(0.1, 10.0))
def test_connectivity_scales_linearly_with_weights(wd, s):
    w, d = wd
    base = connectivity(w / d[:, None])
    assert connectivity(s * w / d[:, None]) == pytest.approx(s * base, rel=1e-12, abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(weighted(), st.randoms(use_true_random=False))
def test_constants_invariant_under_relabeling(wd, rnd):
    w, d = wd
    n = len(d)
    order = list(range(n))
    rnd.shuffle(order)
    net = OscillatorNetwork.homogeneous(0.01, d, np.linspace(-1, 1, n), 1.0, w, 0.01)
    a, b = compute_constants(net), compute_constants(net.permuted(order))
    assert b.connectivity == pytest.approx(a.connectivity, rel=1e-12, abs=1e-12)
    assert b.psi_u == a.psi_u
    assert b.d_omega == pytest.approx(a.d_omega, rel=1e-12, abs=1e-15)
    assert b.alpha_bar == a.alpha_bar


@settings(max_examples=40, deadline=None)
@given(weighted(), st.integers(0, 35), st.floats(0.0, 2.0))
def test_connectivity_monotone_in_weights(wd, idx, extra):
    w, d = wd
    n = len(d)
    i, j = divmod(idx % (n * n), n)
    bigger = w.copy()
    bigger[i, j] += extra
    assert connectivity(bigger / d[:, None]) >= connectivity(w / d[:, None]) - 1e-12


def test_alpha_bar_is_max_frustration():
    alpha = np.array([[0, 0.1, 0.3], [0.2, 0, 0], [0, 0, 0]])
    net = OscillatorNetwork.homogeneous(0.1, np.ones(3), np.zeros(3), 1.0, np.ones((3, 3)), alpha)
    assert compute_constants(net).alpha_bar == 0.3
    assert math.isclose(compute_constants(net).d_omega, 0.0)
