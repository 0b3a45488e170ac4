"""Diameter functionals, energy functions and differential-inequality checks.

Diameters are ``max - min`` across oscillators of phase, frequency,
acceleration and jerk. The two energies combine them::

    E1 = D_theta + c1 * gamma * D_omega + 2 gamma^2 D_a
    E2 = D_omega + c2 * gamma * D_a     + 2 gamma^2 D_b

with ``c1 = C cos(abar) sin(beta) / (4 N psi_u beta)`` and
``c2 = C cos(D_inf + abar) / (4 N psi_u)``.

Each ``*_residual`` function returns ``LHS - RHS`` of one differential
inequality, evaluated on the recorded samples with central differences, plus
a per-sample tolerance; an inequality holds at a sample when
``residual <= tolerance``. The tolerance is the sum of

* a discretization part, ``FD_SAFETY * h`` times the local maximum of the
  next-higher difference of each differentiated diameter;
* a roundoff part, ``FP_SAFETY`` times the worst-case floating-point error of
  each undifferentiated diameter as recorded in the table. It only matters
  once the frequency diameter has decayed near machine precision, where
  dividing by a small inertia amplifies evaluation error of a and b.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .network import NetworkConstants

__all__ = [
    "DEFAULT_FLOOR",
    "FD_SAFETY",
    "FP_SAFETY",
    "HomogeneityError",
    "CertificateParameters",
    "DiagnosticsFrame",
    "DiagnosticsTable",
    "EnergyCoefficients",
    "ResidualCheck",
    "diameter",
    "diameters",
    "energy_e1",
    "energy_e2",
    "build_table",
    "gronwall_residual_e1",
    "gronwall_residual_e2",
    "phase_second_order_residual",
    "acceleration_residual",
    "frequency_first_order_residual",
    "frequency_second_order_residual",
    "jerk_residual",
    "residual_suite",
    "fit_decay_rate",
]

DEFAULT_FLOOR = 1e-12
# Multiplier on h * max|f''| in the central-difference tolerance.
FD_SAFETY = 10.0
# Multiplier on the recorded worst-case evaluation error of each diameter.
FP_SAFETY = 2.0


class HomogeneityError(ValueError):
    """Raised when an energy needs gamma but the damping ratio is not homogeneous."""


@dataclass(frozen=True)
class CertificateParameters:
    """Free constants of the certificate: phase bound beta and capture radius d_infty."""

    beta: float
    d_infty: float

    def __post_init__(self):
        if not 0 < self.beta < math.pi:
            raise ValueError(f"beta must lie in (0, pi), got {self.beta!r}")
        if not 0 < self.d_infty < min(self.beta, math.pi / 2):
            raise ValueError(
                f"d_infty must lie in (0, min(beta, pi/2)), got {self.d_infty!r}"
            )

    def to_dict(self) -> dict:
        return {"beta": self.beta, "d_infty": self.d_infty}


@dataclass(frozen=True)
class EnergyCoefficients:
    """Linear coefficients of E1 over (D_theta, D_omega, D_a) and E2 over (D_omega, D_a, D_b)."""

    e1: tuple[float, float, float]
    e2: tuple[float, float, float]

    @classmethod
    def from_constants(cls, constants: NetworkConstants,
                       params: CertificateParameters) -> "EnergyCoefficients":
        gamma = constants.gamma
        if gamma is None:
            raise HomogeneityError("homogeneous damping required")
        if constants.connectivity <= 0 or constants.psi_u <= 0:
            raise ValueError("energies need connectivity > 0 and psi_u > 0")
        n, c, psi_u, abar = constants.n, constants.connectivity, constants.psi_u, constants.alpha_bar
        beta, d_inf = params.beta, params.d_infty
        c1 = c * math.cos(abar) * math.sin(beta) / (4 * n * psi_u * beta)
        c2 = c * math.cos(d_inf + abar) / (4 * n * psi_u)
        quad = 2 * gamma * gamma
        return cls(e1=(1.0, c1 * gamma, quad), e2=(1.0, c2 * gamma, quad))


@dataclass(frozen=True)
class DiagnosticsFrame:
    time: float
    d_theta: float
    d_omega: float
    d_a: float
    d_b: float
    e1: float | None = None
    e2: float | None = None


@dataclass(frozen=True, eq=False)
class DiagnosticsTable:
    """Column store of diagnostics frames at the recorded sample times.

    ``e1``/``e2`` hold NaN where the energies are undefined. ``fp_*`` bound
    the floating-point error of each diameter (zero for exact data).
    """

    times: np.ndarray
    d_theta: np.ndarray
    d_omega: np.ndarray
    d_a: np.ndarray
    d_b: np.ndarray
    e1: np.ndarray
    e2: np.ndarray
    fp_theta: np.ndarray | None = None
    fp_omega: np.ndarray | None = None
    fp_a: np.ndarray | None = None
    fp_b: np.ndarray | None = None

    def __post_init__(self):
        for name in ("fp_theta", "fp_omega", "fp_a", "fp_b"):
            if getattr(self, name) is None:
                object.__setattr__(self, name, np.zeros(len(self.times)))

    def __len__(self) -> int:
        return self.times.shape[0]

    @property
    def has_energies(self) -> bool:
        return bool(len(self)) and not np.isnan(self.e1[0])

    def frame(self, i: int) -> DiagnosticsFrame:
        e1, e2 = float(self.e1[i]), float(self.e2[i])
        return DiagnosticsFrame(
            time=float(self.times[i]),
            d_theta=float(self.d_theta[i]),
            d_omega=float(self.d_omega[i]),
            d_a=float(self.d_a[i]),
            d_b=float(self.d_b[i]),
            e1=None if math.isnan(e1) else e1,
            e2=None if math.isnan(e2) else e2,
        )


def diameter(values) -> float:
    """``max - min`` of a nonempty sequence."""
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        raise ValueError("diameter of an empty sequence")
    return float(arr.max() - arr.min())


def diameters(rows: np.ndarray) -> np.ndarray:
    """Row-wise diameter of a 2-D array (one row per sample)."""
    rows = np.asarray(rows, dtype=float)
    return rows.max(axis=1) - rows.min(axis=1)


def energy_e1(constants: NetworkConstants, params: CertificateParameters,
              d_theta, d_omega, d_a):
    k = EnergyCoefficients.from_constants(constants, params).e1
    return k[0] * d_theta + k[1] * d_omega + k[2] * d_a


def energy_e2(constants: NetworkConstants, params: CertificateParameters,
              d_omega, d_a, d_b):
    k = EnergyCoefficients.from_constants(constants, params).e2
    return k[0] * d_omega + k[1] * d_a + k[2] * d_b


def build_table(times, thetas, omegas, accels, jerks,
                coefficients: EnergyCoefficients | None = None,
                floors: np.ndarray | None = None) -> DiagnosticsTable:
    """Diameters and energies at each recorded sample.

    ``floors`` (samples x 3) holds per-oscillator evaluation error bounds of
    omega, a and b; a diameter's bound is twice that.
    """
    d_theta = diameters(thetas)
    d_omega = diameters(omegas)
    d_a = diameters(accels)
    d_b = diameters(jerks)
    if coefficients is None:
        e1 = np.full_like(d_theta, np.nan)
        e2 = np.full_like(d_theta, np.nan)
    else:
        k1, k2 = coefficients.e1, coefficients.e2
        e1 = k1[0] * d_theta + k1[1] * d_omega + k1[2] * d_a
        e2 = k2[0] * d_omega + k2[1] * d_a + k2[2] * d_b
    fp = {}
    if floors is not None:
        floors = np.asarray(floors, dtype=float)
        fp = dict(
            fp_theta=2 * np.finfo(float).eps * np.abs(np.asarray(thetas)).max(axis=1),
            fp_omega=2 * floors[:, 0],
            fp_a=2 * floors[:, 1],
            fp_b=2 * floors[:, 2],
        )
    return DiagnosticsTable(np.asarray(times, dtype=float), d_theta, d_omega, d_a, d_b,
                            e1, e2, **fp)


# -- finite differences -----------------------------------------------------


def _table(source) -> DiagnosticsTable:
    return getattr(source, "diagnostics", source)


def _spacing(times: np.ndarray) -> float:
    if times.shape[0] < 3:
        raise ValueError("need at least 3 samples for central differences")
    steps = np.diff(times)
    return float(steps.mean())


def _first(f: np.ndarray, h: float) -> np.ndarray:
    out = np.full_like(f, np.nan)
    out[1:-1] = (f[2:] - f[:-2]) / (2 * h)
    return out


def _second(f: np.ndarray, h: float) -> np.ndarray:
    out = np.full_like(f, np.nan)
    out[1:-1] = (f[2:] - 2 * f[1:-1] + f[:-2]) / (h * h)
    return out


def _local_max(f: np.ndarray) -> np.ndarray:
    """Max of |f| over each sample and its two neighbours, ignoring NaN."""
    a = np.abs(f)
    out = a.copy()
    out[1:] = np.fmax(out[1:], a[:-1])
    out[:-1] = np.fmax(out[:-1], a[1:])
    return np.nan_to_num(out, nan=0.0)


def _first_with_tol(f: np.ndarray, h: float) -> tuple[np.ndarray, np.ndarray]:
    """Central first derivative and its tolerance FD_SAFETY * h * max|f''|."""
    return _first(f, h), FD_SAFETY * h * _local_max(_second(f, h))


def _second_with_tol(f: np.ndarray, h: float) -> tuple[np.ndarray, np.ndarray]:
    """Central second derivative and its tolerance FD_SAFETY * h * max|f'''|."""
    f2 = _second(f, h)
    return f2, FD_SAFETY * h * _local_max(_first(f2, h))


@dataclass(frozen=True, eq=False)
class ResidualCheck:
    """Sampled residual ``LHS - RHS`` of an inequality ``LHS <= RHS``."""

    name: str
    times: np.ndarray
    residual: np.ndarray
    tolerance: np.ndarray

    def __len__(self) -> int:
        return self.residual.shape[0]

    @property
    def satisfied(self) -> np.ndarray:
        return self.residual <= self.tolerance

    @property
    def pass_fraction(self) -> float:
        if len(self) == 0:
            return float("nan")
        return float(self.satisfied.mean())

    def holds(self, quantile: float = 0.99) -> bool:
        return len(self) > 0 and self.pass_fraction >= quantile

    def summary(self) -> dict:
        return {
            "name": self.name,
            "samples": len(self),
            "pass_fraction": self.pass_fraction,
            "max_residual": float(self.residual.max()) if len(self) else None,
        }


def _check(name, table, mask, residual, tolerance) -> ResidualCheck:
    interior = np.zeros(len(table), dtype=bool)
    interior[1:-1] = True
    keep = interior & mask
    return ResidualCheck(name, table.times[keep], residual[keep], tolerance[keep])


def _after(table: DiagnosticsTable, anchor_time: float | None) -> np.ndarray:
    if anchor_time is None:
        return np.ones(len(table), dtype=bool)
    return table.times >= anchor_time


def _forcing(constants: NetworkConstants, coupling: float) -> float:
    """D_Omega + 2 K psi_u sin(abar), the drift term shared by several bounds."""
    return constants.d_omega + 2 * coupling * constants.psi_u * math.sin(constants.alpha_bar)


def _phase_contraction(constants, params, coupling) -> float:
    """K C cos(abar) sin(beta) / (N beta)."""
    c = constants
    return coupling * c.connectivity * math.cos(c.alpha_bar) * math.sin(params.beta) / (c.n * params.beta)


def _frequency_contraction(constants, params, coupling) -> float:
    """K C cos(D_inf + abar) / N."""
    c = constants
    return coupling * c.connectivity * math.cos(params.d_infty + c.alpha_bar) / c.n


def _gamma(constants: NetworkConstants) -> float:
    if constants.gamma is None:
        raise HomogeneityError("homogeneous damping required")
    return constants.gamma


def gronwall_residual_e1(trajectory, constants: NetworkConstants,
                         params: CertificateParameters, coupling: float) -> ResidualCheck:
    """``dE1/dt - [2 (D_Omega + 2 K psi_u sin abar) - (K C cos abar sin beta / (2 N beta)) E1]``."""
    table = _table(trajectory)
    h = _spacing(table.times)
    k = EnergyCoefficients.from_constants(constants, params).e1
    e1 = k[0] * table.d_theta + k[1] * table.d_omega + k[2] * table.d_a
    de1, tol = _first_with_tol(e1, h)
    lam = 0.5 * _phase_contraction(constants, params, coupling)
    rhs = 2 * _forcing(constants, coupling) - lam * e1
    fp = k[0] * table.fp_theta + k[1] * table.fp_omega + k[2] * table.fp_a
    return _check("energy_e1", table, np.ones(len(table), bool), de1 - rhs,
                  tol + FP_SAFETY * lam * fp)


def gronwall_residual_e2(trajectory, constants: NetworkConstants,
                         params: CertificateParameters, coupling: float,
                         anchor_time: float | None = None) -> ResidualCheck:
    """``dE2/dt + (K C cos(D_inf + abar) / (4N)) E2`` on samples at or after ``anchor_time``."""
    table = _table(trajectory)
    h = _spacing(table.times)
    k = EnergyCoefficients.from_constants(constants, params).e2
    e2 = k[0] * table.d_omega + k[1] * table.d_a + k[2] * table.d_b
    de2, tol = _first_with_tol(e2, h)
    rate = 0.25 * _frequency_contraction(constants, params, coupling)
    fp = k[0] * table.fp_omega + k[1] * table.fp_a + k[2] * table.fp_b
    return _check("energy_e2", table, _after(table, anchor_time), de2 + rate * e2,
                  tol + FP_SAFETY * rate * fp)


def phase_second_order_residual(trajectory, constants, params, coupling) -> ResidualCheck:
    """``gamma D_theta'' + D_theta' - [forcing - (K C cos abar sin beta/(N beta)) D_theta]`` while D_theta < beta."""
    table = _table(trajectory)
    h = _spacing(table.times)
    gamma = _gamma(constants)
    f = table.d_theta
    f1, tol1 = _first_with_tol(f, h)
    f2, tol2 = _second_with_tol(f, h)
    lam = _phase_contraction(constants, params, coupling)
    rhs = _forcing(constants, coupling) - lam * f
    return _check("phase_second_order", table, f < params.beta, gamma * f2 + f1 - rhs,
                  tol1 + gamma * tol2 + FP_SAFETY * lam * table.fp_theta)


def acceleration_residual(trajectory, constants, params, coupling) -> ResidualCheck:
    """``gamma D_a' + D_a - 2 K psi_u D_omega``."""
    table = _table(trajectory)
    h = _spacing(table.times)
    gamma = _gamma(constants)
    f1, tol = _first_with_tol(table.d_a, h)
    gain = 2 * coupling * constants.psi_u
    rhs = gain * table.d_omega
    fp = table.fp_a + gain * table.fp_omega
    return _check("acceleration_first_order", table, np.ones(len(table), bool),
                  gamma * f1 + table.d_a - rhs, gamma * tol + FP_SAFETY * fp)


def frequency_first_order_residual(trajectory, constants, params, coupling) -> ResidualCheck:
    """``gamma D_omega' + D_omega - [forcing + 2 K psi_u D_theta]``."""
    table = _table(trajectory)
    h = _spacing(table.times)
    gamma = _gamma(constants)
    f1, tol = _first_with_tol(table.d_omega, h)
    gain = 2 * coupling * constants.psi_u
    rhs = _forcing(constants, coupling) + gain * table.d_theta
    fp = table.fp_omega + gain * table.fp_theta
    return _check("frequency_first_order", table, np.ones(len(table), bool),
                  gamma * f1 + table.d_omega - rhs, gamma * tol + FP_SAFETY * fp)


def frequency_second_order_residual(trajectory, constants, params, coupling,
                                    anchor_time: float | None = None) -> ResidualCheck:
    """``gamma D_omega'' + D_omega' + (K C cos(D_inf + abar)/N) D_omega`` after capture."""
    table = _table(trajectory)
    h = _spacing(table.times)
    gamma = _gamma(constants)
    f = table.d_omega
    f1, tol1 = _first_with_tol(f, h)
    f2, tol2 = _second_with_tol(f, h)
    lam = _frequency_contraction(constants, params, coupling)
    return _check("frequency_second_order", table, _after(table, anchor_time),
                  gamma * f2 + f1 + lam * f,
                  tol1 + gamma * tol2 + FP_SAFETY * lam * table.fp_omega)


def jerk_residual(trajectory, constants, params, coupling, mu: float,
                  anchor_time: float | None = None) -> ResidualCheck:
    """``gamma D_b' + D_b - [2 K psi_u D_a + (mu/gamma) D_omega]`` after capture."""
    table = _table(trajectory)
    h = _spacing(table.times)
    gamma = _gamma(constants)
    f1, tol = _first_with_tol(table.d_b, h)
    gain = 2 * coupling * constants.psi_u
    rhs = gain * table.d_a + (mu / gamma) * table.d_omega
    fp = table.fp_b + gain * table.fp_a + (mu / gamma) * table.fp_omega
    return _check("jerk_first_order", table, _after(table, anchor_time),
                  gamma * f1 + table.d_b - rhs, gamma * tol + FP_SAFETY * fp)


def residual_suite(trajectory, constants: NetworkConstants, params: CertificateParameters,
                   coupling: float, mu: float,
                   anchor_time: float | None) -> dict[str, ResidualCheck]:
    """All seven inequality checks, keyed by name.

    The phase-side checks run on the whole trajectory; the frequency-side
    ones (which assume the phases are already within ``d_infty``) only from
    ``anchor_time`` on. With no anchor the frequency-side checks are empty.
    """
    checks = [
        phase_second_order_residual(trajectory, constants, params, coupling),
        acceleration_residual(trajectory, constants, params, coupling),
        frequency_first_order_residual(trajectory, constants, params, coupling),
        gronwall_residual_e1(trajectory, constants, params, coupling),
    ]
    anchor = math.inf if anchor_time is None else anchor_time
    checks += [
        frequency_second_order_residual(trajectory, constants, params, coupling, anchor),
        jerk_residual(trajectory, constants, params, coupling, mu, anchor),
        gronwall_residual_e2(trajectory, constants, params, coupling, anchor),
    ]
    return {c.name: c for c in checks}


def fit_decay_rate(trajectory, window: tuple[float, float] | None = None,
                   floor: float = DEFAULT_FLOOR, min_samples: int = 10) -> tuple[float, float]:
    """Exponential decay rate of D_omega from a log-linear least-squares fit.

    Only samples inside ``window`` (inclusive) with ``D_omega > floor`` are
    used. Returns ``(rate, r_squared)`` where ``rate`` is the negated slope of
    ``ln D_omega`` against time.
    """
    table = _table(trajectory)
    t = table.times
    y = table.d_omega
    mask = y > floor
    if window is not None:
        mask &= (t >= window[0]) & (t <= window[1])
    if int(mask.sum()) < min_samples:
        raise ValueError(
            f"only {int(mask.sum())} samples above floor {floor!r} in window, need {min_samples}"
        )
    x = t[mask]
    z = np.log(y[mask])
    slope, intercept = np.polyfit(x, z, 1)
    fitted = slope * x + intercept
    ss_res = float(np.sum((z - fitted) ** 2))
    ss_tot = float(np.sum((z - z.mean()) ** 2))
    r_squared = 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot
    return float(-slope), r_squared
