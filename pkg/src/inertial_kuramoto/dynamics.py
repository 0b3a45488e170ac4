"""Vector field, derived acceleration/jerk fields and fixed-step RK4 integration.

Phases are kept unwrapped on the real line; diameters and energies are
defined there and wrapping would corrupt them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .diagnostics import (
    CertificateParameters,
    DiagnosticsFrame,
    DiagnosticsTable,
    EnergyCoefficients,
    build_table,
)
from .network import OscillatorNetwork, compute_constants

__all__ = [
    "InvalidStateError",
    "IntegrationError",
    "EnsembleState",
    "TrajectoryRecord",
    "vector_field",
    "acceleration",
    "jerk",
    "rk4_step",
    "default_dt",
    "step_count",
    "simulate",
    "detect_capture",
]

INTEGRATOR = "rk4"
BLOW_UP = "blow-up (step too large for stiffness; require dt ≲ γ)"


class InvalidStateError(ValueError):
    pass


class IntegrationError(RuntimeError):
    """Integration produced a non-finite state; ``step`` is the failing step index."""

    def __init__(self, message: str, step: int | None = None):
        super().__init__(message if step is None else f"{message} at step {step}")
        self.step = step


@dataclass(frozen=True, eq=False)
class EnsembleState:
    time: float
    phase: np.ndarray
    frequency: np.ndarray

    def __post_init__(self):
        phase = np.array(self.phase, dtype=float)
        frequency = np.array(self.frequency, dtype=float)
        if phase.ndim != 1 or phase.shape != frequency.shape:
            raise InvalidStateError("invalid state: phase and frequency must be equal-length vectors")
        if not (np.all(np.isfinite(phase)) and np.all(np.isfinite(frequency))
                and math.isfinite(self.time)):
            raise InvalidStateError("invalid state: non-finite entries")
        object.__setattr__(self, "phase", phase)
        object.__setattr__(self, "frequency", frequency)
        object.__setattr__(self, "time", float(self.time))

    @property
    def n(self) -> int:
        return self.phase.shape[0]


def _check_state(network: OscillatorNetwork, state: EnsembleState) -> None:
    if state.n != network.n:
        raise InvalidStateError(f"invalid state: {state.n} oscillators, network has {network.n}")


def _args(network: OscillatorNetwork):
    return (
        network.natural_frequency,
        network.damping,
        network.inertia,
        network.weights,
        network.frustration,
        network.coupling,
    )


def acceleration(network: OscillatorNetwork, state: EnsembleState) -> np.ndarray:
    """``a_i = [Omega_i - d_i w_i + (K/N) sum_k psi_ik sin(theta_k - theta_i + alpha_ik)] / m_i``."""
    _check_state(network, state)
    out = np.empty(network.n)
    _kernels.acceleration_into(state.phase, state.frequency, *_args(network), out)
    return out


def vector_field(network: OscillatorNetwork, state: EnsembleState) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(d theta/dt, d omega/dt)``."""
    return state.frequency.copy(), acceleration(network, state)


def jerk(network: OscillatorNetwork, state: EnsembleState) -> np.ndarray:
    """Time derivative of the acceleration along the flow.

    ``b_i = [-d_i a_i + (K/N) sum_k psi_ik cos(theta_k - theta_i + alpha_ik)(w_k - w_i)] / m_i``
    """
    a = acceleration(network, state)
    out = np.empty(network.n)
    nat, damp, inertia, weights, alpha, coupling = _args(network)
    _kernels.jerk_into(state.phase, state.frequency, a, damp, inertia, weights, alpha, coupling, out)
    return out


def rk4_step(network: OscillatorNetwork, state: EnsembleState, dt: float) -> EnsembleState:
    """One classical RK4 step of the first-order system in (theta, omega)."""
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt!r}")
    _check_state(network, state)
    n = network.n
    d_theta = np.empty(n)
    d_omega = np.empty(n)
    _kernels.rk4_increment(state.phase, state.frequency, dt, *_args(network),
                           d_theta, d_omega, np.empty((6, n)))
    phase = state.phase + d_theta
    frequency = state.frequency + d_omega
    if not (np.all(np.isfinite(phase)) and np.all(np.isfinite(frequency))):
        raise IntegrationError(BLOW_UP)
    return EnsembleState(state.time + dt, phase, frequency)


def default_dt(network: OscillatorNetwork) -> float:
    """A tenth of the fastest frequency relaxation time ``min_i m_i/d_i``."""
    gamma = compute_constants(network).gamma
    if gamma is None:
        gamma = float(network.damping_ratio.min())
    return gamma / 10


def step_count(horizon: float, dt: float) -> int:
    # the tiny slack absorbs horizon/dt landing just below an integer
    return int(math.floor(horizon / dt * (1 + 1e-12)))


@dataclass(frozen=True, eq=False)
class TrajectoryRecord:
    """Recorded samples of one integration run.

    States and diagnostics are stored column-wise; ``record[i]`` or iteration
    gives ``(EnsembleState, DiagnosticsFrame)`` pairs.
    """

    network: OscillatorNetwork
    dt: float
    stride: int
    thetas: np.ndarray
    omegas: np.ndarray
    accelerations: np.ndarray
    jerks: np.ndarray
    diagnostics: DiagnosticsTable
    params: CertificateParameters | None = None
    integrator: str = INTEGRATOR
    compensated: bool = True
    warnings: tuple[str, ...] = field(default=())

    @property
    def times(self) -> np.ndarray:
        return self.diagnostics.times

    @property
    def d_theta(self) -> np.ndarray:
        return self.diagnostics.d_theta

    @property
    def d_omega(self) -> np.ndarray:
        return self.diagnostics.d_omega

    def __len__(self) -> int:
        return self.thetas.shape[0]

    def state(self, i: int) -> EnsembleState:
        return EnsembleState(self.times[i], self.thetas[i], self.omegas[i])

    def frame(self, i: int) -> DiagnosticsFrame:
        return self.diagnostics.frame(i)

    def __getitem__(self, i: int) -> tuple[EnsembleState, DiagnosticsFrame]:
        return self.state(i), self.frame(i)

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]

    @property
    def metadata(self) -> dict:
        return {
            "integrator": self.integrator,
            "compensated_summation": self.compensated,
            "dt": self.dt,
            "stride": self.stride,
            "n": self.network.n,
            "warnings": list(self.warnings),
        }


def simulate(network: OscillatorNetwork, initial: EnsembleState, dt: float | None = None,
             horizon: float = 1.0, stride: int = 1,
             params: CertificateParameters | None = None,
             compensated: bool = True) -> TrajectoryRecord:
    """Integrate from ``initial`` (taken as time 0) to ``horizon`` with fixed-step RK4.

    Every ``stride``-th state is recorded with its diagnostics frame. Energies
    are filled in when ``params`` is given and the network admits them.
    ``compensated`` applies Kahan summation to the state update; with it off,
    the result equals repeated :func:`rk4_step` bit for bit.

    Raises :class:`IntegrationError` carrying the failing step index if the
    state stops being finite.
    """
    _check_state(network, initial)
    if dt is None:
        dt = default_dt(network)
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt!r}")
    if not horizon > 0:
        raise ValueError(f"horizon must be positive, got {horizon!r}")
    if int(stride) != stride or stride < 1:
        raise ValueError(f"stride must be an integer ≥ 1, got {stride!r}")
    stride = int(stride)

    constants = compute_constants(network)
    warnings = []
    relax = constants.gamma if constants.gamma is not None else float(network.damping_ratio.min())
    if dt > 2 * relax:
        warnings.append(f"dt={dt!r} exceeds twice the relaxation time {relax!r}; expect instability")

    nsteps = step_count(horizon, dt)
    if nsteps < 1:
        raise ValueError(f"horizon {horizon!r} is shorter than one step of {dt!r}")
    thetas, omegas, failed = _kernels.integrate(
        initial.phase, initial.frequency, float(dt), nsteps, stride, bool(compensated),
        *_args(network),
    )
    if failed >= 0:
        raise IntegrationError(BLOW_UP, step=int(failed))
    accels, jerks, floors = _kernels.derivatives_batch(thetas, omegas, *_args(network))
    times = (np.arange(thetas.shape[0]) * stride) * dt

    coefficients = None
    if params is not None and constants.gamma is not None and constants.connectivity > 0:
        coefficients = EnergyCoefficients.from_constants(constants, params)
    table = build_table(times, thetas, omegas, accels, jerks, coefficients, floors)
    return TrajectoryRecord(
        network=network,
        dt=float(dt),
        stride=stride,
        thetas=thetas,
        omegas=omegas,
        accelerations=accels,
        jerks=jerks,
        diagnostics=table,
        params=params,
        compensated=bool(compensated),
        warnings=tuple(warnings),
    )


def detect_capture(trajectory, threshold: float) -> float | None:
    """Earliest sample time after which every sample has ``D_theta < threshold``."""
    if not threshold > 0:
        raise ValueError("threshold must be positive")
    table = getattr(trajectory, "diagnostics", trajectory)
    d_theta = np.asarray(table.d_theta)
    if d_theta.size == 0:
        raise ValueError("empty trajectory")
    above = np.flatnonzero(d_theta >= threshold)
    if above.size == 0:
        return float(table.times[0])
    first = above[-1] + 1
    if first >= d_theta.size:
        return None
    return float(table.times[first])
