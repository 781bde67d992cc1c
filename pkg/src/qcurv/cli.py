"""``qcurv <scenario> --config PATH --out DIR [--threads N] [--strict]``."""
from __future__ import annotations

import argparse
import sys

from .config import SCENARIOS, ConfigError, load_config
from .model import DomainError
from .scenarios import EXIT_CONFIG, EXIT_IO, run_scenario


def build_parser():
    parser = argparse.ArgumentParser(prog="qcurv", description=__doc__)
    parser.add_argument("scenario", choices=SCENARIOS)
    parser.add_argument("--config", required=True, help="INI scenario file")
    parser.add_argument("--out", default="out", help="output directory")
    parser.add_argument("--threads", type=int, default=None,
                        help="worker processes for scans (default: $QCURV_THREADS or 1)")
    parser.add_argument("--strict", action="store_true", help="failed checks give exit status 1")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, args.scenario)
    except OSError as exc:
        print(f"qcurv: cannot read config: {exc}", file=sys.stderr)
        return EXIT_IO
    except ConfigError as exc:
        print(f"qcurv: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        status, report = run_scenario(cfg, args.out, args.threads, args.strict or None)
    except (ConfigError, DomainError) as exc:
        print(f"qcurv: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if "error" in report:
        print(f"qcurv: output error: {report['error']}", file=sys.stderr)
    for line in report.get("lines", []):
        print(line)
    return status


if __name__ == "__main__":
    sys.exit(main())
