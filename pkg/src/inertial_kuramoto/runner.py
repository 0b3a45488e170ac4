"""Experiment orchestration: certify, simulate, diagnose, fit, and write outputs."""

from __future__ import annotations

import json
import logging
import math
import os
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from .certifier import CertificateReport, certify, envelope, search_certificate_params
from .config import ExperimentConfig
from .diagnostics import (
    DEFAULT_FLOOR,
    CertificateParameters,
    EnergyCoefficients,
    fit_decay_rate,
    residual_suite,
)
from .dynamics import TrajectoryRecord, detect_capture, simulate
from .generate import RNG_ALGORITHM, build_initial, build_network
from .network import NetworkConstants, OscillatorNetwork, compute_constants, validate

log = logging.getLogger(__name__)

__all__ = [
    "EXIT_OK",
    "EXIT_ERROR",
    "EXIT_CERTIFICATE",
    "RESIDUAL_QUANTILE",
    "SWEEP_AXES",
    "ExperimentError",
    "SummaryReport",
    "RunResult",
    "SweepEntry",
    "certify_config",
    "run",
    "sweep",
    "apply_axis",
    "csv_header",
    "write_timeseries",
    "envelope_column",
]

EXIT_OK, EXIT_ERROR, EXIT_CERTIFICATE = 0, 1, 2
RESIDUAL_QUANTILE = 0.99
SWEEP_AXES = ("coupling", "gamma-scale", "frustration", "seed")


class ExperimentError(RuntimeError):
    pass


def _clean(value):
    """JSON-safe copy: non-finite floats become strings, tuples become lists."""
    if isinstance(value, dict):
        return {k: _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else repr(value)
    if isinstance(value, np.integer):
        return int(value)
    return value


@dataclass
class SummaryReport:
    constants: NetworkConstants
    certificate: CertificateReport
    initial_d_theta: float
    initial_d_omega: float
    config: dict
    simulated: bool = False
    capture_time: float | None = None
    anchor_e2: float | None = None
    fitted_rate: float | None = None
    fit_r_squared: float | None = None
    fit_window: tuple[float, float] | None = None
    fit_error: str | None = None
    final: dict | None = None
    max_d_theta: float | None = None
    envelope_ratio: float | None = None
    residuals: dict = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)
    version: str = __version__
    rng: str = RNG_ALGORITHM

    @property
    def exit_code(self) -> int:
        return EXIT_OK if self.certificate.verdict else EXIT_CERTIFICATE

    def to_dict(self) -> dict:
        return _clean({
            "version": self.version,
            "rng": self.rng,
            "constants": self.constants.to_dict(),
            "initial": {"d_theta": self.initial_d_theta, "d_omega": self.initial_d_omega},
            "certificate": self.certificate.to_dict(),
            "simulation": None if not self.simulated else {
                "capture_time": self.capture_time,
                "anchor_e2": self.anchor_e2,
                "max_d_theta": self.max_d_theta,
                "final": self.final,
                "fitted_rate": self.fitted_rate,
                "fit_r_squared": self.fit_r_squared,
                "fit_window": self.fit_window,
                "fit_error": self.fit_error,
                "envelope_ratio_max": self.envelope_ratio,
                "residuals": self.residuals,
            },
            "warnings": self.warnings,
            "config": self.config,
        })

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


@dataclass
class RunResult:
    summary: SummaryReport
    trajectory: TrajectoryRecord | None

    @property
    def exit_code(self) -> int:
        return self.summary.exit_code


# -- outputs ----------------------------------------------------------------


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def csv_header(n: int) -> str:
    cols = ["t"]
    cols += [f"theta_{i}" for i in range(1, n + 1)]
    cols += [f"omega_{i}" for i in range(1, n + 1)]
    cols += ["D_theta", "D_omega", "D_a", "D_b", "E1", "E2", "envelope"]
    return ",".join(cols)


def _fmt(x: float) -> str:
    return "" if math.isnan(x) else repr(float(x))


def envelope_column(trajectory: TrajectoryRecord, rate: float | None, anchor_time: float | None,
                    anchor_e2: float | None) -> np.ndarray:
    """Envelope values at each sample; NaN before the anchor or when undefined."""
    times = trajectory.times
    out = np.full(times.shape, np.nan)
    if rate is None or anchor_time is None or anchor_e2 is None:
        return out
    after = times >= anchor_time
    out[after] = envelope(rate, anchor_time, anchor_e2, times[after])
    return out


def timeseries_text(trajectory: TrajectoryRecord, env: np.ndarray) -> str:
    table = trajectory.diagnostics
    cols = np.column_stack([
        table.times, trajectory.thetas, trajectory.omegas,
        table.d_theta, table.d_omega, table.d_a, table.d_b, table.e1, table.e2, env,
    ])
    lines = [csv_header(trajectory.network.n)]
    lines.extend(",".join(map(_fmt, row)) for row in cols.tolist())
    return "\n".join(lines) + "\n"


def write_timeseries(path, trajectory: TrajectoryRecord, env: np.ndarray) -> None:
    _atomic_write(Path(path), timeseries_text(trajectory, env))


# -- single run -------------------------------------------------------------


def _prepare(config: ExperimentConfig):
    network = build_network(config)
    violations = validate(network)
    hard = [v for v in violations if not v.startswith("coupling")]
    if hard:
        raise ExperimentError("invalid network: " + "; ".join(hard))
    initial = build_initial(config, network)
    return network, initial, violations


def _certificate(config: ExperimentConfig, network: OscillatorNetwork, constants, initial):
    d_theta0 = float(np.ptp(initial.phase))
    d_omega0 = float(np.ptp(initial.frequency))
    cert = config.certificate
    if "search" in cert:
        params = search_certificate_params(constants, network.coupling, d_theta0, d_omega0,
                                           cert["search"]["resolution"])
    else:
        params = CertificateParameters(cert["beta"], cert["d_infty"])
    e1_0 = None
    if params is not None and constants.gamma is not None and constants.connectivity > 0:
        from .dynamics import acceleration

        k = EnergyCoefficients.from_constants(constants, params).e1
        d_a0 = float(np.ptp(acceleration(network, initial)))
        e1_0 = k[0] * d_theta0 + k[1] * d_omega0 + k[2] * d_a0
    report = certify(constants, network.coupling, d_theta0, d_omega0, params, initial_energy=e1_0)
    return report, d_theta0, d_omega0


def certify_config(config: ExperimentConfig) -> SummaryReport:
    """Constants and certificate only; no simulation."""
    network, initial, violations = _prepare(config)
    constants = compute_constants(network)
    report, d_theta0, d_omega0 = _certificate(config, network, constants, initial)
    return SummaryReport(constants, report, d_theta0, d_omega0, config=config.to_dict(),
                         warnings=list(violations))


def run(config: ExperimentConfig, out_dir=None, write: bool = True) -> RunResult:
    """Execute one experiment end to end and, if ``write``, emit its files.

    Output paths in the config are taken relative to ``out_dir`` when given.
    A failing certificate does not stop the simulation; it only changes the
    exit code to 2.
    """
    network, initial, violations = _prepare(config)
    constants = compute_constants(network)
    report, d_theta0, d_omega0 = _certificate(config, network, constants, initial)
    summary = SummaryReport(constants, report, d_theta0, d_omega0, config=config.to_dict(),
                            warnings=list(violations))
    params = report.params

    trajectory = simulate(network, initial, config.dt, config.horizon, config.stride,
                          params=params, compensated=config.compensated)
    summary.simulated = True
    summary.warnings.extend(trajectory.warnings)
    table = trajectory.diagnostics
    summary.max_d_theta = float(table.d_theta.max())
    last = table.frame(len(table) - 1)
    summary.final = {"time": last.time, "d_theta": last.d_theta, "d_omega": last.d_omega,
                     "d_a": last.d_a, "d_b": last.d_b}

    anchor = anchor_e2 = None
    if params is not None:
        anchor = detect_capture(trajectory, params.d_infty)
        summary.capture_time = anchor
        if anchor is not None and table.has_energies:
            anchor_e2 = float(table.e2[np.searchsorted(table.times, anchor)])
            summary.anchor_e2 = anchor_e2

    window = (anchor if anchor is not None else 0.0, float(table.times[-1]))
    summary.fit_window = window
    try:
        summary.fitted_rate, summary.fit_r_squared = fit_decay_rate(trajectory, window, DEFAULT_FLOOR)
    except ValueError as exc:
        summary.fit_error = str(exc)

    env = np.full(table.times.shape, np.nan)
    if report.verdict and anchor_e2 is not None:
        env = envelope_column(trajectory, report.rate, anchor, anchor_e2)
        ok = ~np.isnan(env)
        ratio = table.d_omega[ok] / env[ok]
        summary.envelope_ratio = float(ratio.max())

    if params is not None and table.has_energies and len(table) >= 3 and report.mu is not None:
        checks = residual_suite(trajectory, constants, params, network.coupling, report.mu, anchor)
        summary.residuals = {
            name: {**chk.summary(), "holds": chk.holds(RESIDUAL_QUANTILE)}
            for name, chk in checks.items()
        }

    if write:
        base = Path(out_dir) if out_dir is not None else Path(".")
        if config.timeseries_path:
            write_timeseries(base / config.timeseries_path, trajectory, env)
        if config.report_path:
            _atomic_write(base / config.report_path, summary.to_json())
    return RunResult(summary, trajectory)


# -- sweeps -----------------------------------------------------------------


def apply_axis(config: ExperimentConfig, axis: str, value) -> ExperimentConfig:
    """Copy of ``config`` with one sweep parameter set.

    ``gamma-scale`` multiplies every inertia (and therefore gamma) by ``value``
    and switches the step to automatic, since a fixed dt tuned for the
    original gamma would be unstable for a smaller one.
    """
    if axis == "coupling":
        cfg = replace(config, coupling=float(value))
    elif axis == "seed":
        cfg = replace(config, seed=int(value))
    elif axis in ("gamma-scale", "frustration"):
        kind = config.network_kind
        spec = dict(config.network[kind])
        if axis == "frustration":
            spec["frustration"] = float(value)
        elif "gamma" in spec:
            spec["gamma"] = spec["gamma"] * float(value)
        else:
            spec["inertia"] = [m * float(value) for m in spec["inertia"]]
        cfg = replace(config, network={kind: spec})
        if axis == "gamma-scale":
            cfg = replace(cfg, dt_auto=True)
    else:
        raise ValueError(f"unknown sweep axis {axis!r}; choose from {', '.join(SWEEP_AXES)}")
    return cfg.rederive_dt()


def _suffixed(path: str | None, tag: str) -> str | None:
    if not path:
        return path
    p = Path(path)
    return str(p.with_name(f"{p.stem}_{tag}{p.suffix}"))


@dataclass
class SweepEntry:
    value: object
    summary: SummaryReport | None
    error: str | None = None

    @property
    def exit_code(self) -> int:
        return EXIT_ERROR if self.summary is None else self.summary.exit_code


def _sweep_member(args):
    config, out_dir, write, do_simulate = args
    try:
        if do_simulate:
            return run(config, out_dir, write).summary, None
        return certify_config(config), None
    except Exception as exc:  # recorded per member; the sweep goes on
        return None, f"{type(exc).__name__}: {exc}"


def sweep(config: ExperimentConfig, axis: str, values, out_dir=None, write: bool = True,
          simulate: bool = True, workers: int | None = None) -> list[SweepEntry]:
    """Independent runs over ``values`` of ``axis``, in input order.

    Members run in separate processes when ``workers`` exceeds 1. Output
    files get a ``_<axis>_<index>`` suffix.
    """
    values = list(values)
    jobs = []
    for i, value in enumerate(values):
        cfg = apply_axis(config, axis, value)
        tag = f"{axis}_{i}"
        cfg = replace(cfg, timeseries_path=_suffixed(cfg.timeseries_path, tag),
                      report_path=_suffixed(cfg.report_path, tag))
        jobs.append((cfg, out_dir, write, simulate))
    if workers is None:
        workers = min(len(jobs), os.cpu_count() or 1)
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_member, jobs))
    else:
        results = [_sweep_member(job) for job in jobs]
    entries = [SweepEntry(v, s, e) for v, (s, e) in zip(values, results)]
    for entry in entries:
        if entry.error:
            log.warning("sweep %s=%r failed: %s", axis, entry.value, entry.error)
    return entries
