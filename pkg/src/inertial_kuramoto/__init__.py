"""Simulation and synchronization certificates for inertial Kuramoto networks with frustration."""

__version__ = "0.1.0"

from .network import NetworkConstants, OscillatorNetwork, compute_constants, validate  # noqa: E402
from .diagnostics import CertificateParameters, DiagnosticsFrame, diameter  # noqa: E402
from .dynamics import (  # noqa: E402
    EnsembleState,
    TrajectoryRecord,
    acceleration,
    detect_capture,
    jerk,
    rk4_step,
    simulate,
    vector_field,
)
from .certifier import CertificateReport, certify, envelope, guarantees  # noqa: E402

__all__ = [
    "__version__",
    "OscillatorNetwork",
    "NetworkConstants",
    "compute_constants",
    "validate",
    "CertificateParameters",
    "DiagnosticsFrame",
    "diameter",
    "EnsembleState",
    "TrajectoryRecord",
    "vector_field",
    "acceleration",
    "jerk",
    "rk4_step",
    "simulate",
    "detect_capture",
    "CertificateReport",
    "certify",
    "envelope",
    "guarantees",
]
