import json
import math

import numpy as np
import pytest

from inertial_kuramoto.cli import main
from inertial_kuramoto.config import parse_config
from inertial_kuramoto.reference import reference_config
from inertial_kuramoto.runner import (
    EXIT_CERTIFICATE, EXIT_ERROR, EXIT_OK, apply_axis, certify_config, csv_header, run, sweep,
)

SMALL = """
seed: {seed}
network:
  coupling: {coupling}
  generate:
    n: 4
    weights: all-to-all
    gamma: 0.01
    frustration: 0.001
initial:
  generate: {{phase_range: [0.0, 1.0], frequency_range: [-0.1, 0.1]}}
integration: {{dt: 0.001, horizon: 0.5, stride: {stride}}}
certificate: {{beta: 2.0, d_infty: 0.1}}
outputs: {{timeseries: run.csv, report: run.json}}
"""


def small(seed=0, coupling=5.0, stride=7):
    return parse_config(SMALL.format(seed=seed, coupling=coupling, stride=stride))


def test_zero_coupling_fails_certificate_but_simulates(tmp_path):
    result = run(small(coupling=0), tmp_path)
    assert result.exit_code == EXIT_CERTIFICATE == 2
    assert result.trajectory is not None and len(result.trajectory) > 1
    assert any("coupling" in w for w in result.summary.warnings)
    report = json.loads((tmp_path / "run.json").read_text())
    assert report["certificate"]["verdict"] == "fail"
    assert report["simulation"]["final"]["d_theta"] > 0


def test_csv_layout(tmp_path):
    cfg = small(stride=7)
    run(cfg, tmp_path)
    lines = (tmp_path / "run.csv").read_text().splitlines()
    assert lines[0] == csv_header(4)
    assert lines[0].split(",")[:2] == ["t", "theta_1"]
    assert len(lines) - 1 == math.floor(0.5 / (0.001 * 7)) + 1
    row = lines[1].split(",")
    assert len(row) == 1 + 8 + 7
    assert row[0] == "0.0"


def test_reruns_are_byte_identical(tmp_path):
    run(small(seed=11), tmp_path / "a")
    run(small(seed=11), tmp_path / "b")
    for name in ("run.csv", "run.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_no_temporary_files_left(tmp_path):
    run(small(), tmp_path)
    assert sorted(p.name for p in tmp_path.iterdir()) == ["run.csv", "run.json"]


def test_invalid_network_is_hard_error(tmp_path):
    text = SMALL.format(seed=0, coupling=5, stride=1).replace(
        "  generate:\n    n: 4", "  generate:\n    damping_range: [0.0, 1.0]\n    n: 4")
    cfg_path = tmp_path / "bad.yaml"
    cfg_path.write_text(text)
    assert main(["run", str(cfg_path), "--out", str(tmp_path)]) == EXIT_ERROR


def test_coupling_sweep_flips_verdict():
    entries = sweep(reference_config(), "coupling", [700, 780], write=False, simulate=False, workers=1)
    verdicts = [e.summary.certificate.verdict for e in entries]
    assert verdicts == [False, True]
    failing = [c.name for c in entries[0].summary.certificate.conditions if not c.passed]
    assert failing == ["K_decay"]


def test_single_member_sweep_matches_run():
    cfg = small(seed=4)
    entry, = sweep(cfg, "coupling", [5.0], write=False, workers=1)
    direct = run(cfg, write=False).summary
    assert entry.summary.to_json() == direct.to_json().replace('"run.csv"', '"run_coupling_0.csv"') \
        .replace('"run.json"', '"run_coupling_0.json"')


def test_gamma_scale_sweep_all_certify():
    entries = sweep(reference_config(), "gamma-scale", [1e-6, 1e-5, 1e-4], write=False,
                    simulate=False, workers=1)
    assert all(e.summary.certificate.verdict for e in entries)
    cfgs = [apply_axis(reference_config(), "gamma-scale", s) for s in (1e-6, 1e-5, 1e-4)]
    assert [c.dt for c in cfgs] == pytest.approx([1e-13, 1e-12, 1e-11], rel=1e-9)


def test_gamma_scale_short_run_passes(tmp_path):
    cfg = apply_axis(reference_config(), "gamma-scale", 1e-2).with_overrides(horizon=1e-6)
    result = run(cfg, write=False)
    assert result.summary.certificate.verdict
    assert result.trajectory.dt == pytest.approx(1e-9)


def test_seed_sweep_is_reproducible(tmp_path):
    seeds = list(range(16))
    a = sweep(small(), "seed", seeds, tmp_path / "a", workers=2)
    b = sweep(small(), "seed", seeds, tmp_path / "b", workers=1)
    assert len(a) == 16 and all(e.summary is not None for e in a)
    for ea, eb in zip(a, b):
        assert ea.summary.to_json() == eb.summary.to_json()
    files = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert len(files) == 32
    for name in files:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_certify_config_reports_ref_constants():
    s = certify_config(reference_config())
    assert s.certificate.verdict and not s.simulated
    assert s.constants.connectivity == pytest.approx(1.0089, abs=5e-4)
    assert s.exit_code == EXIT_OK


def test_cli_exit_codes(tmp_path, capsys):
    good = tmp_path / "good.yaml"
    good.write_text(SMALL.format(seed=0, coupling=5, stride=10))
    zero = tmp_path / "zero.yaml"
    zero.write_text(SMALL.format(seed=0, coupling=0, stride=10))
    broken = tmp_path / "broken.yaml"
    broken.write_text("network: [\n")
    ref = tmp_path / "reference.yaml"
    ref.write_text(reference_config().to_yaml())
    assert main(["certify", str(ref)]) == EXIT_OK
    assert main(["certify", str(good)]) == EXIT_CERTIFICATE  # gamma*K too large here
    assert main(["run", str(zero), "--out", str(tmp_path / "z")]) == EXIT_CERTIFICATE
    assert (tmp_path / "z" / "run.csv").exists()
    assert main(["run", str(broken)]) == EXIT_ERROR
    assert main(["run", str(tmp_path / "missing.yaml")]) == EXIT_ERROR
    code = main(["sweep", str(ref), "--axis", "coupling", "--values", "700,780",
                 "--certify-only", "--workers", "1"])
    assert code == EXIT_CERTIFICATE
    out = capsys.readouterr().out
    assert "coupling=700" in out and "coupling=780" in out


def test_reference_repro_end_to_end(tmp_path):
    result = run(reference_config(), tmp_path)
    s = result.summary
    assert result.exit_code == EXIT_OK
    assert s.final["d_omega"] <= 1e-6 * s.initial_d_omega
    assert s.fitted_rate >= s.certificate.rate
    assert all(r["holds"] for r in s.residuals.values())
    report = json.loads((tmp_path / "reference_report.json").read_text())
    assert report["certificate"]["binding"] == "K_decay"
    lines = (tmp_path / "reference_timeseries.csv").read_text().splitlines()
    assert len(lines) - 1 == math.floor(0.2 / (1e-7 * 100)) + 1
    env = [ln.split(",")[-1] for ln in lines[1:]]
    assert env[0] == "" and env[-1] != ""
