import math

import numpy as np
import pytest

from inertial_kuramoto import (
    EnsembleState,
    OscillatorNetwork,
    acceleration,
    detect_capture,
    jerk,
    rk4_step,
    simulate,
    vector_field,
)
from inertial_kuramoto.diagnostics import DiagnosticsTable
from inertial_kuramoto.dynamics import IntegrationError, InvalidStateError, default_dt, step_count
from inertial_kuramoto.reference import reference_initial_state


def two_oscillators():
    net = OscillatorNetwork([1.0, 1.0], [1.0, 1.0], [0.0, 0.0], 2.0, [[0, 1], [1, 0]])
    return net, EnsembleState(0.0, [0.0, math.pi / 2], [0.0, 0.0])


def test_two_oscillator_hand_example():
    net, state = two_oscillators()
    np.testing.assert_allclose(acceleration(net, state), [1.0, -1.0], atol=1e-15)
    np.testing.assert_allclose(jerk(net, state), [-1.0, 1.0], atol=1e-15)
    dtheta, domega = vector_field(net, state)
    np.testing.assert_array_equal(dtheta, state.frequency)


def test_identical_phases_decouple():
    net = OscillatorNetwork([2.0, 0.5], [1.0, 3.0], [0.3, -0.2], 5.0, [[0, 1], [1, 0]])
    state = EnsembleState(0.0, [1.2, 1.2], [0.1, 0.4])
    expected = (net.natural_frequency - net.damping * state.frequency) / net.inertia
    np.testing.assert_allclose(acceleration(net, state), expected, rtol=1e-15)


def test_equal_frequencies_jerk_is_pure_damping():
    net = OscillatorNetwork([2.0, 0.5, 1.0], [1.0, 3.0, 2.0], [0.3, -0.2, 0.1], 5.0,
                            np.ones((3, 3)), 0.1)
    state = EnsembleState(0.0, [0.1, 0.7, -0.4], [0.25, 0.25, 0.25])
    a = acceleration(net, state)
    np.testing.assert_allclose(jerk(net, state), -net.damping * a / net.inertia, rtol=1e-14)


def test_reference_acceleration_matches_reduced_form(ref_net):
    state = reference_initial_state()
    g = 1e-6
    th, w = state.phase, state.frequency
    d, om, psi, al = ref_net.damping, ref_net.natural_frequency, ref_net.weights, ref_net.frustration
    n = ref_net.n
    expected = np.array([
        (-w[i] + om[i] / d[i]
         + (780.0 / n) * sum(psi[i, k] / d[i] * math.sin(th[k] - th[i] + al[i, k]) for k in range(n))) / g
        for i in range(n)
    ])
    np.testing.assert_allclose(acceleration(ref_net, state), expected, rtol=1e-12)


def test_reference_initial_acceleration_is_stiff(ref_net):
    peak = np.abs(acceleration(ref_net, reference_initial_state())).max()
    assert 1e5 <= peak < 1e9  # order 10^8: K/(N gamma) scaled by O(1) sines


def test_jerk_matches_central_difference_of_acceleration(small_network):
    state = EnsembleState(0.0, [0.3, -0.8, 1.1, 0.2], [0.4, -0.1, 0.0, 0.7])
    errs = []
    for h in (1e-3, 5e-4):
        traj = simulate(small_network, state, h, 0.2)
        fd = (traj.accelerations[2:] - traj.accelerations[:-2]) / (2 * h)
        errs.append(np.abs(fd - traj.jerks[1:-1]).max())
    assert errs[0] < 1e-3 * np.abs(traj.jerks).max()
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.05)  # O(h^2)


def test_single_step_decoupled_relaxation():
    gamma, w0 = 1e-6, 0.07
    net = OscillatorNetwork.homogeneous(gamma, [1.0], [0.0], 0.0, [[0.0]])
    nxt = rk4_step(net, EnsembleState(0.0, [0.0], [w0]), gamma / 10)
    exact = w0 * math.exp(-0.1)
    assert abs(nxt.frequency[0] - exact) / exact < 1e-7


def test_decoupled_relaxation_over_many_steps():
    gamma, d, omega_nat, w0 = 1e-6, 0.9, 0.004, 0.07
    net = OscillatorNetwork.homogeneous(gamma, [d], [omega_nat], 0.0, [[0.0]])
    traj = simulate(net, EnsembleState(0.0, [0.0], [w0]), gamma / 10, 2e-5, 1)
    t = traj.times
    w_inf = omega_nat / d
    exact_w = w_inf + (w0 - w_inf) * np.exp(-t / gamma)
    # per-step relative error of the transient is ~1e-7, so it grows linearly with steps
    transient = np.abs(traj.omegas[:, 0] - w_inf) / np.abs(exact_w - w_inf)
    assert np.abs(transient - 1).max() < 1e-7 * len(t)


def test_zero_field_is_fixed_point():
    net = OscillatorNetwork([1.0, 1.0], [1.0, 1.0], [0.0, 0.0], 0.0, [[0, 1], [1, 0]])
    state = EnsembleState(0.0, [0.4, 1.3], [0.0, 0.0])
    nxt = rk4_step(net, state, 0.1)
    assert nxt.time == 0.1
    np.testing.assert_array_equal(nxt.phase, state.phase)
    np.testing.assert_array_equal(nxt.frequency, state.frequency)


def test_uncoupled_equal_ratio_phases_constant():
    net = OscillatorNetwork.homogeneous(0.1, [1.0, 2.0], [0.0, 0.0], 0.0, [[0, 1], [1, 0]])
    traj = simulate(net, EnsembleState(0.0, [0.5, 2.0], [0.0, 0.0]), 0.01, 1.0)
    assert np.all(traj.thetas == traj.thetas[0])


def convergence_order(network, state, horizon, dt):
    ref = simulate(network, state, dt / 16, horizon, compensated=False)
    ref_end = np.concatenate([ref.thetas[-1], ref.omegas[-1]])
    errs = []
    for h in (dt, dt / 2, dt / 4):
        run = simulate(network, state, h, horizon, compensated=False)
        errs.append(np.abs(np.concatenate([run.thetas[-1], run.omegas[-1]]) - ref_end).max())
    return math.log2(errs[0] / errs[1]), math.log2(errs[1] / errs[2])


def test_rk4_order_on_nonstiff_instance(small_network):
    state = EnsembleState(0.0, [0.0, 1.0, 2.0, 2.5], [0.3, -0.2, 0.1, 0.0])
    p1, p2 = convergence_order(small_network, state, 1.0, 0.05)
    assert abs(p1 - 4.0) <= 0.2 and abs(p2 - 4.0) <= 0.2


def test_simulate_plain_equals_repeated_steps(small_network):
    state = EnsembleState(0.0, [0.0, 1.0, 2.0, 2.5], [0.3, -0.2, 0.1, 0.0])
    traj = simulate(small_network, state, 0.01, 0.5, compensated=False)
    cur = state
    for i in range(1, len(traj)):
        cur = rk4_step(small_network, cur, 0.01)
        np.testing.assert_array_equal(cur.phase, traj.thetas[i])
        np.testing.assert_array_equal(cur.frequency, traj.omegas[i])


def test_rotation_invariance(small_network):
    state = EnsembleState(0.0, [0.0, 1.0, 2.0, 2.5], [0.3, -0.2, 0.1, 0.0])
    shift = 0.625  # dyadic, so the shifted phases are exact
    shifted = EnsembleState(0.0, state.phase + shift, state.frequency)
    a = simulate(small_network, state, 0.01, 100.0, 100)
    b = simulate(small_network, shifted, 0.01, 100.0, 100)
    assert len(a) == 101
    scale = np.abs(a.thetas).max(axis=1, keepdims=True) + shift
    assert np.abs((b.thetas - shift) - a.thetas).max() <= 1e-12 * scale.max()
    assert np.abs(b.omegas - a.omegas).max() <= 1e-12 * max(1.0, np.abs(a.omegas).max())


def test_identical_oscillators_stay_identical():
    n = 5
    w = np.ones((n, n)) - np.eye(n)
    net = OscillatorNetwork.homogeneous(0.1, np.full(n, 0.7), np.full(n, 0.3), 2.0, w, 0.2)
    traj = simulate(net, EnsembleState(0.0, np.full(n, 1.1), np.full(n, -0.4)), 0.01, 100.0, 10)
    assert len(traj) == 1001
    assert np.all(np.ptp(traj.thetas, axis=1) <= 1e-12 * np.abs(traj.thetas).max(axis=1))
    assert np.all(np.ptp(traj.omegas, axis=1) <= 1e-12 * np.maximum(1.0, np.abs(traj.omegas).max(axis=1)))


def test_runs_are_deterministic(small_network):
    state = EnsembleState(0.0, [0.0, 1.0, 2.0, 2.5], [0.3, -0.2, 0.1, 0.0])
    a = simulate(small_network, state, 0.01, 2.0, 3)
    b = simulate(small_network, state, 0.01, 2.0, 3)
    for name in ("thetas", "omegas", "accelerations", "jerks"):
        assert getattr(a, name).tobytes() == getattr(b, name).tobytes()
    assert a.diagnostics.e1.tobytes() == b.diagnostics.e1.tobytes()


def test_compensated_summation_lowers_frequency_floor(ref_trajectory):
    assert ref_trajectory.compensated
    assert ref_trajectory.d_omega[-1] < 1e-12


def test_record_layout(small_network):
    state = EnsembleState(0.0, [0.0, 1.0, 2.0, 2.5], [0.3, -0.2, 0.1, 0.0])
    traj = simulate(small_network, state, 0.01, 1.0, 7)
    assert len(traj) == step_count(1.0, 0.01) // 7 + 1
    np.testing.assert_allclose(np.diff(traj.times), 0.07)
    s, frame = traj[3]
    assert s.time == frame.time == traj.times[3]
    assert frame.e1 is None  # no certificate parameters given
    assert traj.metadata["integrator"] == "rk4"


def test_default_dt_is_tenth_of_gamma(ref_net):
    assert default_dt(ref_net) == pytest.approx(1e-7, rel=1e-12)


def test_blow_up_reports_step():
    net = OscillatorNetwork.homogeneous(1e-6, [1.0, 1.0], [0.0, 0.0], 1.0, [[0, 1], [1, 0]])
    with pytest.raises(IntegrationError, match="blow-up") as info:
        simulate(net, EnsembleState(0.0, [0.0, 1.0], [1.0, 0.0]), 1e-3, 1.0)
    assert info.value.step is not None and info.value.step >= 0


def test_large_step_warns():
    net = OscillatorNetwork.homogeneous(0.1, [1.0, 1.0], [0.0, 0.0], 0.1, [[0, 1], [1, 0]])
    traj = simulate(net, EnsembleState(0.0, [0.0, 0.1], [0.0, 0.0]), 0.25, 0.5)
    assert traj.warnings


def test_invalid_states_rejected(small_network):
    with pytest.raises(InvalidStateError, match="invalid state"):
        EnsembleState(0.0, [0.0, np.nan], [0.0, 0.0])
    with pytest.raises(InvalidStateError, match="invalid state"):
        acceleration(small_network, EnsembleState(0.0, [0.0, 1.0], [0.0, 0.0]))
    with pytest.raises(ValueError):
        rk4_step(small_network, EnsembleState(0.0, np.zeros(4), np.zeros(4)), 0.0)


def _table(times, d_theta):
    z = np.zeros_like(times)
    return DiagnosticsTable(times, d_theta, z, z, z, z, z)


def test_capture_constant_below_threshold():
    t = np.linspace(0, 1, 11)
    assert detect_capture(_table(t, np.full(11, 0.05)), 0.1) == 0.0


def test_capture_after_last_crossing():
    t = np.linspace(0, 6, 61)
    d = 0.2 * np.exp(-t * math.log(2) / 3)  # crosses 0.1 at t = 3
    assert detect_capture(_table(t, d), 0.1) == pytest.approx(3.1)


def test_capture_never():
    t = np.linspace(0, 1, 5)
    assert detect_capture(_table(t, np.full(5, 1.0)), 0.1) is None
    with pytest.raises(ValueError):
        detect_capture(_table(np.array([]), np.array([])), 0.1)
