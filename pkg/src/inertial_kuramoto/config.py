"""Experiment configuration: strict YAML parsing with materialized defaults.

Layout (every key optional unless noted)::

    seed: 0                       # unsigned 64-bit
    network:                      # required; exactly one of inline / generate
      coupling: 780               # required
      inline:
        weights: [[...]]          # n x n
        damping: [...]
        natural_frequency: [...]
        gamma: 1.0e-6             # exactly one of gamma / inertia
        inertia: [...]
        frustration: 1.0e-6       # scalar fills the off-diagonal, or an n x n matrix
      generate:
        n: 4
        weights: all-to-all       # or {mask: [[0/1 ...]]} or {edge_probability: p}
        weight_range: [1.0, 1.0]
        damping_range: [0.9, 1.0]
        natural_frequency_range: [-0.005, 0.005]
        gamma: 1.0e-6
        frustration: 1.0e-6
    initial:                      # required; exactly one of inline / generate
      inline: {phase: [...], frequency: [...]}
      generate: {phase_range: [0, 2.094], frequency_range: [-0.1, 0.1]}
    integration: {dt: auto, horizon: 0.2, stride: 100, compensated: true}
    certificate: {beta: 2.618, d_infty: 0.1}      # or: search, or {search: {resolution: 32}}
    outputs: {timeseries: run.csv, report: run.json}
"""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass, replace
from pathlib import Path

import yaml

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "parse_config",
    "load_config",
]

MAX_SEED = 2**64 - 1


class ConfigError(ValueError):
    """Configuration problem; ``path`` locates the offending field, ``line`` the YAML line."""

    def __init__(self, message: str, path: str | None = None, line: int | None = None):
        where = []
        if path:
            where.append(path)
        if line is not None:
            where.append(f"line {line}")
        super().__init__(f"{': '.join(where + [message]) if where else message}")
        self.path = path
        self.line = line


class _Node:
    """Mapping wrapper that tracks its path and refuses unknown keys."""

    def __init__(self, data, path: str):
        if not isinstance(data, dict):
            raise ConfigError("expected a mapping", path)
        self.data = data
        self.path = path
        self.used: set[str] = set()

    def child_path(self, key: str) -> str:
        return f"{self.path}.{key}" if self.path else key

    def has(self, key: str) -> bool:
        return key in self.data

    def raw(self, key: str, default=...):
        if key not in self.data:
            if default is ...:
                raise ConfigError("missing required field", self.child_path(key))
            return default
        self.used.add(key)
        return self.data[key]

    def node(self, key: str) -> "_Node":
        return _Node(self.raw(key), self.child_path(key))

    def number(self, key: str, default=..., positive=False, nonnegative=False) -> float:
        value = self.raw(key, default)
        path = self.child_path(key)
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"expected a number, got {value!r}", path)
        value = float(value)
        if not math.isfinite(value):
            raise ConfigError("must be finite", path)
        if positive and not value > 0:
            raise ConfigError("must be > 0", path)
        if nonnegative and value < 0:
            raise ConfigError("must be ≥ 0", path)
        return value

    def integer(self, key: str, default=..., minimum: int | None = None) -> int:
        value = self.raw(key, default)
        path = self.child_path(key)
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"expected an integer, got {value!r}", path)
        if minimum is not None and value < minimum:
            raise ConfigError(f"must be ≥ {minimum}", path)
        return value

    def vector(self, key: str, length: int | None = None) -> list[float]:
        value = self.raw(key)
        path = self.child_path(key)
        if not isinstance(value, list) or not value:
            raise ConfigError("expected a nonempty list of numbers", path)
        out = []
        for i, v in enumerate(value):
            if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
                raise ConfigError(f"expected a finite number, got {v!r}", f"{path}[{i}]")
            out.append(float(v))
        if length is not None and len(out) != length:
            raise ConfigError(f"expected length {length}, got {len(out)}", path)
        return out

    def matrix(self, key: str, n: int | None = None, value=...) -> list[list[float]]:
        if value is ...:
            value = self.raw(key)
        path = self.child_path(key)
        if not isinstance(value, list) or not value:
            raise ConfigError("expected a square matrix (list of rows)", path)
        size = n if n is not None else len(value)
        if len(value) != size:
            raise ConfigError(f"expected {size} rows, got {len(value)}", path)
        rows = []
        for i, row in enumerate(value):
            if not isinstance(row, list) or len(row) != size:
                raise ConfigError(f"expected a row of length {size}", f"{path}[{i}]")
            out = []
            for j, v in enumerate(row):
                if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
                    raise ConfigError(f"expected a finite number, got {v!r}", f"{path}[{i}][{j}]")
                out.append(float(v))
            rows.append(out)
        return rows

    def interval(self, key: str, default=...) -> tuple[float, float]:
        value = self.raw(key, default)
        path = self.child_path(key)
        if (not isinstance(value, (list, tuple)) or len(value) != 2
                or any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in value)):
            raise ConfigError("expected [low, high]", path)
        lo, hi = float(value[0]), float(value[1])
        if not (math.isfinite(lo) and math.isfinite(hi)) or lo > hi:
            raise ConfigError(f"invalid range [{lo!r}, {hi!r}]", path)
        return lo, hi

    def finish(self) -> None:
        unknown = sorted(set(self.data) - self.used)
        if unknown:
            raise ConfigError(f"unknown key {unknown[0]!r}", self.child_path(unknown[0]))


def _exactly_one(node: _Node, *keys: str) -> str:
    present = [k for k in keys if node.has(k)]
    if len(present) != 1:
        raise ConfigError(f"exactly one of {', '.join(keys)} is required", node.path)
    return present[0]


@dataclass(frozen=True)
class ExperimentConfig:
    """Fully materialized experiment description.

    ``network`` and ``initial`` are tagged dicts: ``{"inline": {...}}`` or
    ``{"generate": {...}}``. ``certificate`` is ``{"beta", "d_infty"}`` or
    ``{"search": {"resolution": r}}``.
    """

    seed: int
    coupling: float
    network: dict
    initial: dict
    dt: float
    dt_auto: bool
    horizon: float
    stride: int
    compensated: bool
    certificate: dict
    timeseries_path: str | None
    report_path: str | None

    @property
    def network_kind(self) -> str:
        return next(iter(self.network))

    @property
    def initial_kind(self) -> str:
        return next(iter(self.initial))

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "network": {"coupling": self.coupling, **copy.deepcopy(self.network)},
            "initial": copy.deepcopy(self.initial),
            "integration": {
                "dt": self.dt,
                "dt_auto": self.dt_auto,
                "horizon": self.horizon,
                "stride": self.stride,
                "compensated": self.compensated,
            },
            "certificate": copy.deepcopy(self.certificate),
            "outputs": {"timeseries": self.timeseries_path, "report": self.report_path},
        }

    def to_yaml(self) -> str:
        """Configuration text that parses back to an equal config."""
        data = self.to_dict()
        integ = data["integration"]
        if integ.pop("dt_auto"):
            integ["dt"] = "auto"
        return yaml.safe_dump(data, sort_keys=False)

    def with_overrides(self, *, dt: float | None = None, horizon: float | None = None,
                       seed: int | None = None) -> "ExperimentConfig":
        """Apply command-line style overrides, re-deriving an automatic dt."""
        cfg = self
        if seed is not None:
            _check_seed(seed, "seed")
            cfg = replace(cfg, seed=int(seed))
        if horizon is not None:
            if not horizon > 0:
                raise ConfigError("must be > 0", "integration.horizon")
            cfg = replace(cfg, horizon=float(horizon))
        if dt is not None:
            if not dt > 0:
                raise ConfigError("must be > 0", "integration.dt")
            cfg = replace(cfg, dt=float(dt), dt_auto=False)
        elif cfg.dt_auto:
            cfg = cfg.rederive_dt()
        return cfg

    def rederive_dt(self) -> "ExperimentConfig":
        if not self.dt_auto:
            return self
        from .generate import build_network
        from .dynamics import default_dt

        return replace(self, dt=default_dt(build_network(self)))


def _check_seed(seed, path):
    if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed <= MAX_SEED:
        raise ConfigError("seed must be an unsigned 64-bit integer", path)


def _parse_network(node: _Node) -> tuple[float, dict]:
    coupling = node.number("coupling", nonnegative=True)
    kind = _exactly_one(node, "inline", "generate")
    sub = node.node(kind)
    if kind == "inline":
        damping = sub.vector("damping")
        n = len(damping)
        spec = {
            "weights": sub.matrix("weights", n),
            "damping": damping,
            "natural_frequency": sub.vector("natural_frequency", n),
        }
        which = _exactly_one(sub, "gamma", "inertia")
        if which == "gamma":
            spec["gamma"] = sub.number("gamma", positive=True)
        else:
            spec["inertia"] = sub.vector("inertia", n)
        spec["frustration"] = _frustration(sub, n)
    else:
        n = sub.integer("n", minimum=2)
        spec = {"n": n, "weights": _weight_pattern(sub, n)}
        spec["weight_range"] = list(sub.interval("weight_range", [1.0, 1.0]))
        spec["damping_range"] = list(sub.interval("damping_range", [0.9, 1.0]))
        if spec["damping_range"][0] <= 0:
            raise ConfigError("damping must be positive", sub.child_path("damping_range"))
        if spec["weight_range"][0] < 0:
            raise ConfigError("weights must be nonnegative", sub.child_path("weight_range"))
        spec["natural_frequency_range"] = list(sub.interval("natural_frequency_range", [-0.005, 0.005]))
        spec["gamma"] = sub.number("gamma", positive=True)
        spec["frustration"] = sub.number("frustration", 0.0, nonnegative=True)
    sub.finish()
    return coupling, {kind: spec}


def _frustration(sub: _Node, n: int):
    value = sub.raw("frustration", 0.0)
    if isinstance(value, list):
        return sub.matrix("frustration", n, value=value)
    return sub.number("frustration", 0.0, nonnegative=True)


def _weight_pattern(sub: _Node, n: int):
    value = sub.raw("weights", "all-to-all")
    path = sub.child_path("weights")
    if value == "all-to-all":
        return "all-to-all"
    if not isinstance(value, dict):
        raise ConfigError("expected 'all-to-all', {mask: ...} or {edge_probability: p}", path)
    pat = _Node(value, path)
    which = _exactly_one(pat, "mask", "edge_probability")
    if which == "mask":
        out = {"mask": pat.matrix("mask", n)}
    else:
        p = pat.number("edge_probability", nonnegative=True)
        if p > 1:
            raise ConfigError("must be ≤ 1", pat.child_path("edge_probability"))
        out = {"edge_probability": p}
    pat.finish()
    return out


def _parse_initial(node: _Node, n: int | None) -> dict:
    kind = _exactly_one(node, "inline", "generate")
    sub = node.node(kind)
    if kind == "inline":
        spec = {"phase": sub.vector("phase", n)}
        spec["frequency"] = sub.vector("frequency", len(spec["phase"]))
    else:
        spec = {
            "phase_range": list(sub.interval("phase_range", [0.0, 2 * math.pi / 3])),
            "frequency_range": list(sub.interval("frequency_range", [-0.1, 0.1])),
        }
    sub.finish()
    return {kind: spec}


def _parse_certificate(value, path: str) -> dict:
    if value == "search":
        return {"search": {"resolution": 32}}
    node = _Node(value, path)
    if node.has("search"):
        search = node.raw("search")
        if search is True:
            res = 32
        else:
            snode = _Node(search, node.child_path("search"))
            res = snode.integer("resolution", 32, minimum=2)
            snode.finish()
        node.finish()
        return {"search": {"resolution": res}}
    beta = node.number("beta", positive=True)
    d_infty = node.number("d_infty", positive=True)
    if not beta < math.pi:
        raise ConfigError("must be < pi", node.child_path("beta"))
    if not d_infty < min(beta, math.pi / 2):
        raise ConfigError("must be < min(beta, pi/2)", node.child_path("d_infty"))
    node.finish()
    return {"beta": beta, "d_infty": d_infty}


def _optional_path(node: _Node, key: str) -> str | None:
    value = node.raw(key, None)
    if value is not None and not isinstance(value, str):
        raise ConfigError("expected a path string or null", node.child_path(key))
    return value


def parse_config(text: str) -> ExperimentConfig:
    """Parse configuration text; raises :class:`ConfigError` on any problem."""
    try:
        data = yaml.safe_load(text)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark or exc.context_mark
        line = mark.line + 1 if mark is not None else None
        raise ConfigError(f"syntax error: {exc.problem or exc}", line=line) from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"syntax error: {exc}") from None
    if data is None:
        data = {}
    root = _Node(data, "")

    seed = root.raw("seed", 0)
    _check_seed(seed, "seed")
    coupling, network = _parse_network(root.node("network"))
    n = None
    if "inline" in network:
        n = len(network["inline"]["damping"])
    elif "generate" in network:
        n = network["generate"]["n"]
    initial = _parse_initial(root.node("initial"), n)

    integ = root.node("integration") if root.has("integration") else _Node({}, "integration")
    dt_raw = integ.raw("dt", "auto")
    if dt_raw == "auto":
        dt, dt_auto = math.nan, True
    else:
        dt, dt_auto = integ.number("dt", positive=True), False
    horizon = integ.number("horizon", 1.0, positive=True)
    stride_raw = integ.raw("stride", 1)
    if isinstance(stride_raw, bool) or not isinstance(stride_raw, int) or stride_raw < 1:
        raise ConfigError("stride ≥ 1", integ.child_path("stride"))
    compensated = integ.raw("compensated", True)
    if not isinstance(compensated, bool):
        raise ConfigError("expected true or false", integ.child_path("compensated"))
    integ.finish()

    certificate = _parse_certificate(root.raw("certificate", "search"), "certificate")

    outputs = root.node("outputs") if root.has("outputs") else _Node({}, "outputs")
    timeseries = _optional_path(outputs, "timeseries")
    report = _optional_path(outputs, "report")
    outputs.finish()
    root.finish()

    cfg = ExperimentConfig(
        seed=seed,
        coupling=coupling,
        network=network,
        initial=initial,
        dt=dt,
        dt_auto=dt_auto,
        horizon=horizon,
        stride=stride_raw,
        compensated=compensated,
        certificate=certificate,
        timeseries_path=timeseries,
        report_path=report,
    )
    return cfg.rederive_dt()


def load_config(path) -> ExperimentConfig:
    return parse_config(Path(path).read_text())
