"""The four-oscillator reference instance and its shipped configuration."""

from __future__ import annotations

import math
from importlib import resources

import numpy as np

from .config import ExperimentConfig, parse_config
from .diagnostics import CertificateParameters
from .dynamics import EnsembleState
from .network import OscillatorNetwork

__all__ = [
    "WEIGHTS",
    "DAMPING",
    "NATURAL_FREQUENCY",
    "GAMMA",
    "FRUSTRATION",
    "COUPLING",
    "PHASE0",
    "FREQUENCY0",
    "BETA",
    "D_INFTY",
    "reference_network",
    "reference_initial_state",
    "reference_params",
    "reference_config_text",
    "reference_config",
]

WEIGHTS = (
    (1.0, 1.0, 0.0, 0.0),
    (1.0, 1.0, 0.0, 0.0),
    (0.0, 1.0, 1.0, 0.0),
    (0.0, 1.0, 1.0, 1.0),
)
DAMPING = (0.9775, 0.9165, 0.9912, 0.9319)
NATURAL_FREQUENCY = (0.0013, -0.0040, -0.0022, 0.0005)
GAMMA = 1e-6
FRUSTRATION = 1e-6
COUPLING = 780.0
PHASE0 = (2.0742, 0.0706, 0.8886, 1.0262)
FREQUENCY0 = (0.0701, 0.0117, 0.0804, -0.0161)
BETA = 5 * math.pi / 6
D_INFTY = 0.1


def reference_network(coupling: float = COUPLING) -> OscillatorNetwork:
    return OscillatorNetwork.homogeneous(
        gamma=GAMMA,
        damping=np.array(DAMPING),
        natural_frequency=NATURAL_FREQUENCY,
        coupling=coupling,
        weights=WEIGHTS,
        frustration=FRUSTRATION,
    )


def reference_initial_state() -> EnsembleState:
    return EnsembleState(0.0, PHASE0, FREQUENCY0)


def reference_params() -> CertificateParameters:
    return CertificateParameters(BETA, D_INFTY)


def reference_config_text() -> str:
    return resources.files("inertial_kuramoto.configs").joinpath("reference.yaml").read_text()


def reference_config() -> ExperimentConfig:
    return parse_config(reference_config_text())
