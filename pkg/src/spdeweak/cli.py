"""Command-line entry point: ``spdeweak <subcommand> --config file.json``."""

import argparse
import json
import logging
import sys

from .errors import ConfigError, FitError, IntegrationError
from .experiments import ExperimentPlan, run, write_outputs

EXIT_OK, EXIT_USAGE, EXIT_FAILED = 0, 1, 2

SUBCOMMANDS = {
    "simulate": "simulate",
    "weak-rate-time": "weak_rate_time",
    "weak-rate-spatial": "weak_rate_spatial",
    "verify-representation": "representation_check",
    "moment-diagnostics": "moment_diagnostics",
    "check-assumptions": "assumption_check",
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def build_parser():
    parser = _Parser(prog="spdeweak", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON experiment config")
        p.add_argument("--seed", type=int, default=None, help="u64 seed (overrides config)")
        p.add_argument("--out", default=None, help="output prefix (default: config stem)")
        p.add_argument("--threads", type=int, default=1, help="worker threads for MC blocks")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        with open(args.config) as fh:
            cfg = json.load(fh)
    except OSError as exc:
        print(f"spdeweak: cannot read config: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except json.JSONDecodeError as exc:
        print(f"spdeweak: config is not valid JSON: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if isinstance(cfg, dict):
        cfg.setdefault("experiment", SUBCOMMANDS[args.command])
    try:
        if not isinstance(cfg, dict) or cfg["experiment"] != SUBCOMMANDS[args.command]:
            raise ConfigError(
                f"config describes experiment {cfg.get('experiment') if isinstance(cfg, dict) else cfg!r},"
                f" not {SUBCOMMANDS[args.command]!r}"
            )
        if args.seed is not None and not 0 <= args.seed < 2 ** 64:
            raise ConfigError("--seed must be an unsigned 64-bit integer")
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        plan = ExperimentPlan.from_config(cfg, seed=args.seed)
        result = run(plan, threads=args.threads)
    except ConfigError as exc:
        print(f"spdeweak: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (IntegrationError, FitError) as exc:
        print(f"spdeweak: run failed: {exc}", file=sys.stderr)
        return EXIT_FAILED
    prefix = args.out or args.config.rsplit(".", 1)[0]
    csv_path, json_path = write_outputs(result, prefix, plan.seed, cfg)
    status = "PASS" if result.passed else "FAIL"
    print(f"{status} {plan.experiment}: {csv_path} {json_path}")
    for name, ok in result.checks.items():
        print(f"  {'ok  ' if ok else 'FAIL'} {name}")
    return EXIT_OK if result.passed else EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
