"""Sufficient-condition certificate for exponential frequency synchronization.

Given the network constants, the coupling ``K`` and free parameters
``beta``/``d_infty``, the certificate checks

* an initial-data condition bounding the initial energy below ``beta``;
* ``d_infty + abar < pi/2``;
* four upper bounds on ``gamma K`` and two lower bounds on ``K``;

and, when all hold, reports the capture-time bound, the post-capture
frequency-diameter bound and the exponential rate
``Lambda = K C cos(d_infty + abar) / (4N)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .diagnostics import CertificateParameters
from .network import NetworkConstants

__all__ = [
    "FRAGILE_RTOL",
    "CertificateError",
    "Condition",
    "CertificateReport",
    "check_a1",
    "check_a2",
    "compute_mu",
    "guarantees",
    "certify",
    "envelope",
    "search_certificate_params",
]

# A pass whose margin is below this fraction of its bound is flagged fragile.
FRAGILE_RTOL = 1e-9


class CertificateError(ValueError):
    pass


@dataclass(frozen=True)
class Condition:
    """One strict inequality ``lhs < bound`` (kind "upper") or ``lhs > bound`` ("lower")."""

    name: str
    lhs: float
    bound: float
    kind: str = "upper"

    @property
    def margin(self) -> float:
        return self.bound - self.lhs if self.kind == "upper" else self.lhs - self.bound

    @property
    def passed(self) -> bool:
        return self.margin > 0

    @property
    def fragile(self) -> bool:
        return self.passed and self.margin < FRAGILE_RTOL * abs(self.bound)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "lhs": self.lhs,
            "bound": self.bound,
            "kind": self.kind,
            "margin": self.margin,
            "pass": self.passed,
            "fragile": self.fragile,
        }


def _require_gamma(constants: NetworkConstants) -> float:
    if constants.gamma is None:
        raise CertificateError("homogeneous damping required (m_i/d_i must be equal)")
    return constants.gamma


def _forcing(constants: NetworkConstants, coupling: float) -> float:
    return constants.d_omega + 2 * coupling * constants.psi_u * math.sin(constants.alpha_bar)


def check_a1(constants: NetworkConstants, coupling: float, d_theta0: float, d_omega0: float,
             beta: float) -> Condition:
    """Initial-data condition ``2g(D_Omega + 2K psi_u sin abar) + (1 + 4gK psi_u) D_theta(0) + 3g D_omega(0) < beta < pi``."""
    gamma = _require_gamma(constants)
    lhs = (2 * gamma * _forcing(constants, coupling)
           + (1 + 4 * gamma * coupling * constants.psi_u) * d_theta0
           + 3 * gamma * d_omega0)
    # beta < pi is enforced by folding it into the bound
    bound = beta if beta < math.pi else -math.inf
    return Condition("initial_energy", lhs, bound)


def compute_mu(constants: NetworkConstants, coupling: float, beta: float, d_infty: float) -> float:
    c = constants
    n, cc, psi_u, abar = c.n, c.connectivity, c.psi_u, c.alpha_bar
    return (64 * n**2 * psi_u**2 * beta**2 * _forcing(c, coupling) * (d_infty + math.sin(abar))
            / (cc**2 * math.cos(abar) ** 2 * math.sin(beta) ** 2))


def check_a2(constants: NetworkConstants, coupling: float, beta: float, d_infty: float):
    """Frustration, ``gamma K`` and ``K`` conditions.

    Returns ``(frustration, gamma_k, k_bounds, mu)`` with ``gamma_k`` a tuple
    of four conditions and ``k_bounds`` a tuple of two.
    """
    gamma = _require_gamma(constants)
    c = constants
    if not c.connectivity > 0:
        raise CertificateError("network connectivity condition violated (C = 0)")
    n, cc, psi_u, abar = c.n, c.connectivity, c.psi_u, c.alpha_bar
    K = coupling
    gk = gamma * K
    cos_a, sin_b = math.cos(abar), math.sin(beta)
    cos_da = math.cos(d_infty + abar)

    frustration = Condition("d_infty_plus_alpha_bar", d_infty + abar, math.pi / 2)
    gamma_k = (
        Condition("gammaK_energy_weight", gk, cc * cos_a * sin_b / (32 * n * psi_u**2 * beta)),
        Condition("gammaK_energy_order", gk, n * beta / (cc * cos_a * sin_b)),
        Condition("gammaK_decay_weight", gk, cc * cos_da / (32 * n * psi_u**2)),
        Condition("gammaK_decay_order", gk, 2 * n / (cc * cos_da)),
    )
    mu = compute_mu(c, K, beta, d_infty)
    k_bounds = (
        Condition("K_capture", K, 8 * n * beta * _forcing(c, K) / (d_infty * cc * cos_a * sin_b),
                  kind="lower"),
        Condition("K_decay", K, 8 * n * mu / (cc * cos_da), kind="lower"),
    )
    return frustration, gamma_k, k_bounds, mu


def guarantees(constants: NetworkConstants, coupling: float, beta: float,
               d_infty: float) -> tuple[float, float, float]:
    """``(t_star_bound, omega_bound, rate)`` for a passing parameter set.

    Raises :class:`CertificateError` naming the first failing condition.
    """
    frustration, gamma_k, k_bounds, _ = check_a2(constants, coupling, beta, d_infty)
    for cond in (frustration, *gamma_k, *k_bounds):
        if not cond.passed:
            raise CertificateError(f"condition {cond.name} fails: {cond.lhs!r} vs {cond.bound!r}")
    return _guarantees(constants, coupling, beta, d_infty)


def _guarantees(constants, coupling, beta, d_infty):
    c = constants
    n, cc, psi_u, abar = c.n, c.connectivity, c.psi_u, c.alpha_bar
    forcing = _forcing(c, coupling)
    t_star = beta / (2 * forcing) if forcing > 0 else 0.0
    omega_bound = (32 * n**2 * psi_u * beta**2 * forcing
                   / (c.gamma * coupling * cc**2 * math.cos(abar) ** 2 * math.sin(beta) ** 2))
    rate = coupling * cc * math.cos(d_infty + abar) / (4 * n)
    return t_star, omega_bound, rate


@dataclass(frozen=True)
class CertificateReport:
    constants: NetworkConstants
    coupling: float
    params: CertificateParameters | None
    a1: Condition | None = None
    a2_frustration: Condition | None = None
    a2_gamma_k: tuple[Condition, ...] = ()
    a2_k: tuple[Condition, ...] = ()
    mu: float | None = None
    t_star_bound: float | None = None
    t_star_estimate: float | None = None
    omega_bound: float | None = None
    rate: float | None = None
    initial_energy: float | None = None
    reasons: tuple[str, ...] = field(default=())

    @property
    def conditions(self) -> tuple[Condition, ...]:
        conds = (self.a1, self.a2_frustration, *self.a2_gamma_k, *self.a2_k)
        return tuple(c for c in conds if c is not None)

    @property
    def verdict(self) -> bool:
        return (not self.reasons and len(self.conditions) == 8
                and all(c.passed for c in self.conditions))

    @property
    def fragile(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.conditions if c.fragile)

    @property
    def binding(self) -> Condition | None:
        """The passing-or-failing condition with the smallest relative margin."""
        conds = [c for c in self.conditions if math.isfinite(c.bound) and c.bound != 0]
        if not conds:
            return None
        return min(conds, key=lambda c: c.margin / abs(c.bound))

    def to_dict(self) -> dict:
        binding = self.binding
        return {
            "verdict": "pass" if self.verdict else "fail",
            "coupling": self.coupling,
            "params": None if self.params is None else self.params.to_dict(),
            "a1": None if self.a1 is None else self.a1.to_dict(),
            "a2_frustration": None if self.a2_frustration is None else self.a2_frustration.to_dict(),
            "a2_gamma_k": [c.to_dict() for c in self.a2_gamma_k],
            "a2_k": [c.to_dict() for c in self.a2_k],
            "mu": self.mu,
            "initial_energy": self.initial_energy,
            "t_star_bound": self.t_star_bound,
            "t_star_estimate": self.t_star_estimate,
            "omega_bound": self.omega_bound,
            "rate": self.rate,
            "binding": None if binding is None else binding.name,
            "fragile": list(self.fragile),
            "reasons": list(self.reasons),
        }


def certify(constants: NetworkConstants, coupling: float, d_theta0: float, d_omega0: float,
            params: CertificateParameters | None, initial_energy: float | None = None
            ) -> CertificateReport:
    """Evaluate every condition and, where defined, the guarantees.

    Never raises for a failing certificate; reasons a check could not be
    evaluated are listed in ``reasons``. ``initial_energy`` (E1 at time 0)
    sharpens the capture-time estimate when supplied.
    """
    if params is None:
        return CertificateReport(constants, coupling, None, reasons=("no certificate parameters",))
    if constants.gamma is None:
        return CertificateReport(constants, coupling, params,
                                 reasons=("homogeneous damping required",))
    reasons = []
    a1 = check_a1(constants, coupling, d_theta0, d_omega0, params.beta)
    if not constants.connectivity > 0:
        return CertificateReport(constants, coupling, params, a1=a1,
                                 reasons=("network connectivity condition violated (C = 0)",))
    if not coupling > 0:
        reasons.append("coupling must be positive")
    frustration, gamma_k, k_bounds, mu = check_a2(constants, coupling, params.beta, params.d_infty)
    t_star = t_est = omega_bound = rate = None
    if coupling > 0:
        t_star, omega_bound, rate = _guarantees(constants, coupling, params.beta, params.d_infty)
        forcing = _forcing(constants, coupling)
        cc, abar, beta = constants.connectivity, constants.alpha_bar, params.beta
        threshold = 8 * constants.n * beta * forcing / (coupling * cc * math.cos(abar) * math.sin(beta))
        if initial_energy is not None:
            if initial_energy <= threshold:
                t_star = t_est = 0.0
            elif forcing > 0:
                t_est = (initial_energy - threshold) / (2 * forcing)
    return CertificateReport(
        constants=constants,
        coupling=coupling,
        params=params,
        a1=a1,
        a2_frustration=frustration,
        a2_gamma_k=gamma_k,
        a2_k=k_bounds,
        mu=mu,
        t_star_bound=t_star,
        t_star_estimate=t_est,
        omega_bound=omega_bound,
        rate=rate,
        initial_energy=initial_energy,
        reasons=tuple(reasons),
    )


def envelope(report: CertificateReport | float, anchor_time: float, anchor_e2: float, t):
    """Decay envelope ``anchor_e2 * exp(-rate (t - anchor_time))``.

    ``report`` may be a report or a bare rate.
    """
    rate = report.rate if isinstance(report, CertificateReport) else float(report)
    if rate is None:
        raise CertificateError("report carries no rate")
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < anchor_time):
        raise ValueError("envelope is only defined for t >= anchor_time")
    out = anchor_e2 * np.exp(-rate * (t_arr - anchor_time))
    return float(out) if out.ndim == 0 else out


def search_certificate_params(constants: NetworkConstants, coupling: float, d_theta0: float,
                              d_omega0: float, resolution: int | tuple[int, int] = 32
                              ) -> CertificateParameters | None:
    """Grid search for a passing ``(beta, d_infty)`` maximizing the rate.

    ``beta`` ranges over interior points of ``(D_theta(0), pi)`` and
    ``d_infty`` over interior points of ``(0, min(beta, pi/2) - abar)``.
    Ties keep the first pair in scan order.
    """
    nb, nd = (resolution, resolution) if isinstance(resolution, int) else resolution
    if nb < 2 or nd < 2:
        raise ValueError("grid resolution must be at least 2 per axis")
    if constants.gamma is None or not constants.connectivity > 0 or not coupling > 0:
        return None
    best, best_rate = None, -math.inf
    lo = max(d_theta0, 0.0)
    for beta in lo + (math.pi - lo) * np.arange(1, nb + 1) / (nb + 1):
        top = min(beta, math.pi / 2) - constants.alpha_bar
        if top <= 0:
            continue
        for d_inf in top * np.arange(1, nd + 1) / (nd + 1):
            beta_f, d_inf_f = float(beta), float(d_inf)
            if not check_a1(constants, coupling, d_theta0, d_omega0, beta_f).passed:
                continue
            frustration, gamma_k, k_bounds, _ = check_a2(constants, coupling, beta_f, d_inf_f)
            if not all(c.passed for c in (frustration, *gamma_k, *k_bounds)):
                continue
            rate = coupling * constants.connectivity * math.cos(d_inf_f + constants.alpha_bar) / (4 * constants.n)
            if rate > best_rate:
                best, best_rate = CertificateParameters(beta_f, d_inf_f), rate
    return best
