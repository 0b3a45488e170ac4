"""Oscillator network instances and the static constants derived from them.

A network is the immutable problem definition of the inertial Kuramoto model
with frustration::

    m_i theta_i'' + d_i theta_i' = Omega_i
        + (K/N) sum_k psi_ik sin(theta_k - theta_i + alpha_ik)

``weights[i, k]`` is the weight of the influence of oscillator ``k`` on
oscillator ``i``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

__all__ = [
    "GAMMA_RTOL",
    "OscillatorNetwork",
    "NetworkConstants",
    "validate",
    "compute_constants",
    "connectivity",
]

# Relative spread of m_i/d_i under which the damping ratio counts as homogeneous.
GAMMA_RTOL = 1e-12


def _as_vector(values, name: str) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {arr.shape}")
    return arr


@dataclass(frozen=True, eq=False)
class OscillatorNetwork:
    """Static description of ``n`` coupled inertial oscillators.

    ``frustration`` may be given as a scalar, in which case it fills every
    off-diagonal entry and the diagonal is zero. Arrays are copied and made
    read-only, so instances can be shared freely.
    """

    inertia: np.ndarray
    damping: np.ndarray
    natural_frequency: np.ndarray
    coupling: float
    weights: np.ndarray
    frustration: np.ndarray = field(default=0.0)

    def __post_init__(self):
        inertia = _as_vector(self.inertia, "inertia")
        n = inertia.shape[0]
        damping = _as_vector(self.damping, "damping")
        natural = _as_vector(self.natural_frequency, "natural_frequency")
        weights = np.array(self.weights, dtype=float)
        frustration = np.array(self.frustration, dtype=float)
        if frustration.ndim == 0:
            frustration = np.full((n, n), float(frustration))
            np.fill_diagonal(frustration, 0.0)
        for name, arr in (("damping", damping), ("natural_frequency", natural)):
            if arr.shape != (n,):
                raise ValueError(f"{name} has length {arr.shape[0]}, expected {n}")
        for name, arr in (("weights", weights), ("frustration", frustration)):
            if arr.shape != (n, n):
                raise ValueError(f"{name} has shape {arr.shape}, expected {(n, n)}")
        for name, arr in (
            ("inertia", inertia),
            ("damping", damping),
            ("natural_frequency", natural),
            ("weights", weights),
            ("frustration", frustration),
        ):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "coupling", float(self.coupling))

    @property
    def n(self) -> int:
        return self.inertia.shape[0]

    @property
    def damping_ratio(self) -> np.ndarray:
        """Per-oscillator ``m_i / d_i``."""
        return self.inertia / self.damping

    @classmethod
    def homogeneous(cls, gamma, damping, natural_frequency, coupling, weights,
                    frustration=0.0) -> "OscillatorNetwork":
        """Build a network whose inertias are ``gamma * damping``."""
        damping = np.asarray(damping, dtype=float)
        return cls(
            inertia=gamma * damping,
            damping=damping,
            natural_frequency=natural_frequency,
            coupling=coupling,
            weights=weights,
            frustration=frustration,
        )

    def with_coupling(self, coupling: float) -> "OscillatorNetwork":
        return replace(self, coupling=coupling)

    def with_inertia_scale(self, scale: float) -> "OscillatorNetwork":
        return replace(self, inertia=self.inertia * scale)

    def with_frustration(self, value) -> "OscillatorNetwork":
        return replace(self, frustration=value)

    def permuted(self, order) -> "OscillatorNetwork":
        """Relabel oscillators so that new index ``i`` is old index ``order[i]``."""
        order = np.asarray(order)
        ix = np.ix_(order, order)
        return OscillatorNetwork(
            inertia=self.inertia[order],
            damping=self.damping[order],
            natural_frequency=self.natural_frequency[order],
            coupling=self.coupling,
            weights=self.weights[ix],
            frustration=self.frustration[ix],
        )

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "inertia": self.inertia.tolist(),
            "damping": self.damping.tolist(),
            "natural_frequency": self.natural_frequency.tolist(),
            "coupling": self.coupling,
            "weights": self.weights.tolist(),
            "frustration": self.frustration.tolist(),
        }


@dataclass(frozen=True)
class NetworkConstants:
    """Scalars the synchronization certificate is built from.

    ``gamma`` is ``None`` when the damping ratios ``m_i/d_i`` are not
    homogeneous; every energy and certificate quantity needs it.
    """

    n: int
    connectivity: float
    psi_u: float
    d_omega: float
    alpha_bar: float
    gamma: float | None

    @property
    def homogeneous(self) -> bool:
        return self.gamma is not None

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "connectivity": self.connectivity,
            "psi_u": self.psi_u,
            "d_omega": self.d_omega,
            "alpha_bar": self.alpha_bar,
            "gamma": self.gamma,
        }


def validate(network: OscillatorNetwork) -> list[str]:
    """Return every violated network invariant; an empty list means valid."""
    violations = []

    def check_all(arr, ok, message):
        bad = np.argwhere(~ok(arr))
        for idx in bad:
            where = ",".join(str(int(i)) for i in idx)
            violations.append(f"{message} at {where}")

    finite = lambda a: np.isfinite(a)  # noqa: E731
    for name in ("inertia", "damping", "natural_frequency", "weights", "frustration"):
        check_all(getattr(network, name), finite, f"{name} must be finite")
    check_all(network.inertia, lambda a: a > 0, "inertia must be strictly positive")
    check_all(network.damping, lambda a: a > 0, "damping must be strictly positive")
    if not (math.isfinite(network.coupling) and network.coupling > 0):
        violations.append(f"coupling must be strictly positive, got {network.coupling!r}")
    check_all(network.weights, lambda a: a >= 0, "weights must be nonnegative")
    off = ~np.eye(network.n, dtype=bool)
    alpha = network.frustration
    out_of_range = off & ~((alpha >= 0) & (alpha < math.pi / 2))
    for i, j in np.argwhere(out_of_range):
        violations.append(f"frustration must lie in [0, pi/2) at {i},{j}")
    for i in np.flatnonzero(np.diag(alpha) != 0):
        violations.append(f"diagonal frustration nonzero at {i}")
    return violations


def connectivity(normalized: np.ndarray) -> float:
    """Pairwise connectivity constant of a damping-normalized weight matrix.

    ``normalized[i, j]`` is ``psi_ij / d_i``. Returns the minimum over pairs
    ``i != j`` of ``r_ij + r_ji + sum_{k != i,j} min(r_ik, r_jk)``. The
    expression is symmetric in ``(i, j)``, so only ``i < j`` is enumerated.
    """
    r = np.asarray(normalized, dtype=float)
    n = r.shape[0]
    if n < 2:
        return 0.0
    best = math.inf
    for i in range(n - 1):
        # min(r_ik, r_jk) for all j > i at once; columns i and j are removed below
        shared = np.minimum(r[i][None, :], r[i + 1:])
        totals = shared.sum(axis=1) - shared[:, i] - shared[np.arange(n - i - 1), np.arange(i + 1, n)]
        totals += r[i, i + 1:] + r[i + 1:, i]
        best = min(best, float(totals.min()))
    return max(best, 0.0)


def compute_constants(network: OscillatorNetwork) -> NetworkConstants:
    """Derive the connectivity, weight, frequency and frustration constants.

    Diagonal weights never enter: the self-coupling term is ``sin(0) = 0``.
    """
    n = network.n
    normalized = network.weights / network.damping[:, None]
    off = ~np.eye(n, dtype=bool)
    psi_u = float(normalized[off].max()) if n > 1 else 0.0
    ratio = network.natural_frequency / network.damping
    d_omega = float(ratio.max() - ratio.min())
    alpha_bar = float(network.frustration.max())
    md = network.damping_ratio
    spread = float(md.max() - md.min())
    gamma = float(md.mean()) if spread <= GAMMA_RTOL * float(md.max()) else None
    return NetworkConstants(
        n=n,
        connectivity=connectivity(normalized),
        psi_u=psi_u,
        d_omega=d_omega,
        alpha_bar=alpha_bar,
        gamma=gamma,
    )
