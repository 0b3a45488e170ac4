"""Command-line entry point.

Exit codes: 0 success, 2 certificate failed (the simulation still ran),
1 hard error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .config import ConfigError, load_config
from .reference import reference_config
from .runner import (
    EXIT_CERTIFICATE,
    EXIT_ERROR,
    EXIT_OK,
    SWEEP_AXES,
    certify_config,
    run,
    sweep,
)

log = logging.getLogger("inertial_kuramoto")


def _overrides(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--dt", type=float, help="fixed step size (overrides config)")
    parser.add_argument("--horizon", type=float, help="integration horizon (overrides config)")
    parser.add_argument("--seed", type=int, help="random seed (overrides config)")


def _parse_values(text: str) -> list:
    out = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        try:
            out.append(int(item))
        except ValueError:
            out.append(float(item))
    if not out:
        raise argparse.ArgumentTypeError("empty value list")
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="inertial-kuramoto",
        description="Simulate and certify synchronization of inertial Kuramoto networks.",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one experiment from a config file")
    p.add_argument("config")
    p.add_argument("--out", help="directory for output files (default: current directory)")
    _overrides(p)

    p = sub.add_parser("repro-paper", help="run the shipped four-oscillator reference experiment")
    p.add_argument("--out", default="reference_run", help="output directory (default: reference_run)")
    _overrides(p)

    p = sub.add_parser("sweep", help="run a config over several values of one parameter")
    p.add_argument("config")
    p.add_argument("--axis", required=True, choices=SWEEP_AXES)
    p.add_argument("--values", required=True, type=_parse_values,
                   help="comma-separated values, e.g. 700,780")
    p.add_argument("--out")
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--certify-only", action="store_true", help="skip simulation")
    _overrides(p)

    p = sub.add_parser("certify", help="print constants and certificate, no simulation")
    p.add_argument("config")
    _overrides(p)
    return parser


def _print_summary(summary, stream=sys.stdout) -> None:
    c = summary.constants
    cert = summary.certificate
    print(f"connectivity={c.connectivity:.6g} psi_u={c.psi_u:.6g} d_omega={c.d_omega:.6g} "
          f"alpha_bar={c.alpha_bar:.6g} gamma={c.gamma!r}", file=stream)
    print(f"certificate={'pass' if cert.verdict else 'fail'} mu={cert.mu!r} rate={cert.rate!r} "
          f"t_star_bound={cert.t_star_bound!r}", file=stream)
    for cond in cert.conditions:
        flag = "ok  " if cond.passed else "FAIL"
        print(f"  {flag} {cond.name}: {cond.lhs:.6g} {'<' if cond.kind == 'upper' else '>'} "
              f"{cond.bound:.6g}", file=stream)
    for reason in cert.reasons:
        print(f"  reason: {reason}", file=stream)
    if summary.simulated:
        print(f"capture_time={summary.capture_time!r} fitted_rate={summary.fitted_rate!r} "
              f"final_d_omega={summary.final['d_omega']!r}", file=stream)
    for w in summary.warnings:
        print(f"warning: {w}", file=stream)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "repro-paper":
            config = reference_config()
        else:
            config = load_config(args.config)
        config = config.with_overrides(dt=args.dt, horizon=args.horizon, seed=args.seed)

        if args.command == "certify":
            summary = certify_config(config)
            _print_summary(summary)
            print(json.dumps(summary.to_dict()["certificate"], indent=2))
            return summary.exit_code
        if args.command in ("run", "repro-paper"):
            result = run(config, out_dir=args.out)
            _print_summary(result.summary)
            if args.out:
                print(f"outputs written under {Path(args.out).resolve()}")
            return result.exit_code
        entries = sweep(config, args.axis, args.values, out_dir=args.out,
                        simulate=not args.certify_only, workers=args.workers)
        codes = []
        for entry in entries:
            codes.append(entry.exit_code)
            if entry.summary is None:
                print(f"{args.axis}={entry.value!r}: error {entry.error}")
            else:
                s = entry.summary
                verdict = "pass" if s.certificate.verdict else "fail"
                print(f"{args.axis}={entry.value!r}: certificate={verdict} rate={s.certificate.rate!r}"
                      f" fitted_rate={s.fitted_rate!r}")
        if EXIT_ERROR in codes:
            return EXIT_ERROR
        return EXIT_CERTIFICATE if EXIT_CERTIFICATE in codes else EXIT_OK
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except Exception as exc:
        log.debug("hard error", exc_info=True)
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
