"""Seeded construction of networks and initial states from a configuration.

Randomness comes from numpy's PCG64 bit generator. The experiment seed feeds
a ``SeedSequence`` spawned into two independent streams, one for the network
and one for the initial state, so changing the initial-state ranges never
perturbs the generated network.
"""

from __future__ import annotations

import numpy as np

from .config import ConfigError, ExperimentConfig
from .dynamics import EnsembleState
from .network import OscillatorNetwork

__all__ = [
    "RNG_ALGORITHM",
    "generate_network",
    "generate_initial",
    "generate_instance",
    "build_network",
    "build_initial",
]

RNG_ALGORITHM = f"numpy.random.PCG64/SeedSequence.spawn(2) (numpy {np.__version__})"


def _streams(seed: int) -> tuple[np.random.Generator, np.random.Generator]:
    net, init = np.random.SeedSequence(seed).spawn(2)
    return np.random.Generator(np.random.PCG64(net)), np.random.Generator(np.random.PCG64(init))


def _uniform(rng: np.random.Generator, bounds, size):
    lo, hi = bounds
    if lo > hi:
        raise ValueError(f"invalid range [{lo}, {hi}]")
    return rng.uniform(lo, hi, size)


def generate_network(spec: dict, coupling: float, rng: np.random.Generator) -> OscillatorNetwork:
    """Draw a network from a ``generate`` spec (see :mod:`inertial_kuramoto.config`)."""
    n = int(spec["n"])
    pattern = spec.get("weights", "all-to-all")
    if pattern == "all-to-all":
        mask = np.ones((n, n), dtype=bool)
    elif "mask" in pattern:
        mask = np.asarray(pattern["mask"], dtype=float) != 0
    elif "edge_probability" in pattern:
        mask = rng.random((n, n)) < pattern["edge_probability"]
    else:
        raise ValueError(f"unknown weight pattern {pattern!r}")
    np.fill_diagonal(mask, False)
    weights = np.where(mask, _uniform(rng, spec.get("weight_range", (1.0, 1.0)), (n, n)), 0.0)
    damping = _uniform(rng, spec["damping_range"], n)
    if np.any(damping <= 0):
        raise ValueError("damping range must be positive")
    natural = _uniform(rng, spec["natural_frequency_range"], n)
    return OscillatorNetwork.homogeneous(
        gamma=spec["gamma"],
        damping=damping,
        natural_frequency=natural,
        coupling=coupling,
        weights=weights,
        frustration=spec.get("frustration", 0.0),
    )


def generate_initial(spec: dict, n: int, rng: np.random.Generator) -> EnsembleState:
    return EnsembleState(
        0.0,
        _uniform(rng, spec["phase_range"], n),
        _uniform(rng, spec["frequency_range"], n),
    )


def generate_instance(network_spec: dict, initial_spec: dict, coupling: float,
                      seed: int) -> tuple[OscillatorNetwork, EnsembleState]:
    """Deterministic ``(network, initial state)`` for a seed."""
    net_rng, init_rng = _streams(seed)
    network = generate_network(network_spec, coupling, net_rng)
    return network, generate_initial(initial_spec, network.n, init_rng)


def build_network(config: ExperimentConfig) -> OscillatorNetwork:
    kind, spec = config.network_kind, config.network[config.network_kind]
    if kind == "generate":
        return generate_network(spec, config.coupling, _streams(config.seed)[0])
    damping = np.asarray(spec["damping"], dtype=float)
    inertia = spec["gamma"] * damping if "gamma" in spec else spec["inertia"]
    try:
        return OscillatorNetwork(
            inertia=inertia,
            damping=damping,
            natural_frequency=spec["natural_frequency"],
            coupling=config.coupling,
            weights=spec["weights"],
            frustration=spec.get("frustration", 0.0),
        )
    except ValueError as exc:
        raise ConfigError(str(exc), "network.inline") from None


def build_initial(config: ExperimentConfig, network: OscillatorNetwork) -> EnsembleState:
    kind, spec = config.initial_kind, config.initial[config.initial_kind]
    if kind == "generate":
        return generate_initial(spec, network.n, _streams(config.seed)[1])
    if len(spec["phase"]) != network.n:
        raise ConfigError(f"expected length {network.n}", "initial.inline.phase")
    return EnsembleState(0.0, spec["phase"], spec["frequency"])
