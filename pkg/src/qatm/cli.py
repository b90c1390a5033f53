"""Command-line interface.

Verbs: ``run`` (one scenario), ``sweep`` (one-parameter family),
``figures`` (the five canned datasets), ``validate`` (configuration check).
Exit codes: 0 success, 2 validation error, 3 integration failure, 4 I/O error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .dynamics import IntegrationFailure
from .model import ConfigError, ScenarioConfig, parse_overrides
from .runner import DEFAULT_MEASURES, SweepSpec, run_figures, run_single, run_sweep
from .thermo import classify_cycle

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_INTEGRATION = 3
EXIT_IO = 4


def _add_config_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", metavar="PATH", help="scenario file (key = value lines)")
    parser.add_argument("--set", metavar="KEY=VALUE", action="append", default=[],
                        dest="overrides", help="override one scenario key (repeatable)")


def _add_output_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--out", metavar="DIR",
                        help="output directory (default: $QATM_OUT or ./qatm-out)")
    parser.add_argument("--workers", type=int, default=None,
                        help="worker threads for sweep points (default: available parallelism)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qatm", description=__doc__)
    sub = parser.add_subparsers(dest="verb", required=True)

    p_run = sub.add_parser("run", help="evolve one scenario and write measure CSVs")
    _add_config_arguments(p_run)
    _add_output_arguments(p_run)
    p_run.add_argument("--measures", default=",".join(DEFAULT_MEASURES),
                       help="comma-separated measures or groups (default: %(default)s)")

    p_sweep = sub.add_parser("sweep", help="sweep one parameter, long-format CSV")
    _add_config_arguments(p_sweep)
    _add_output_arguments(p_sweep)
    p_sweep.add_argument("--param", required=True, help="scenario key to sweep")
    p_sweep.add_argument("--values", required=True,
                         help="comma-separated values, strictly monotone")
    p_sweep.add_argument("--measures", default="heat",
                         help="comma-separated measures or groups (default: %(default)s)")

    p_fig = sub.add_parser("figures", help="run the five canned figure datasets")
    _add_config_arguments(p_fig)
    _add_output_arguments(p_fig)

    p_val = sub.add_parser("validate", help="validate a configuration and report the cycle")
    _add_config_arguments(p_val)
    return parser


def _resolve_config(args) -> ScenarioConfig:
    overrides = parse_overrides(args.overrides)
    if args.config:
        return ScenarioConfig.from_file(args.config, overrides)
    return ScenarioConfig().with_overrides(overrides).validate()


def _resolve_out(args) -> str:
    return args.out or os.environ.get("QATM_OUT") or "qatm-out"


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = _resolve_config(args)
        if args.verb == "validate":
            print(json.dumps({"config": config.as_dict(),
                              "cycle": classify_cycle(config).value}, indent=2, sort_keys=True))
            return EXIT_OK
        out_dir = _resolve_out(args)
        if args.verb == "run":
            manifest = run_single(config, args.measures.split(","), out_dir)
            print(f"wrote {len(manifest['outputs'])} files to {out_dir} (cycle {manifest['cycle']})")
            return EXIT_OK
        if args.verb == "sweep":
            values = [float(v) for v in args.values.split(",") if v.strip()]
            spec = SweepSpec(parameter=args.param, values=values, base=config,
                             out_dir=out_dir, measures=args.measures.split(","),
                             workers=args.workers)
            manifest = run_sweep(spec)
            if manifest["failures"]:
                print(f"{len(manifest['failures'])} sweep points failed", file=sys.stderr)
                return EXIT_INTEGRATION
            print(f"swept {args.param} over {len(values)} values into {out_dir}")
            return EXIT_OK
        if args.verb == "figures":
            manifest = run_figures(config, out_dir, workers=args.workers)
            print(f"wrote {len(manifest['outputs'])} dataset files to {out_dir}")
            return EXIT_OK
        raise AssertionError(f"unhandled verb {args.verb}")
    except ConfigError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except IntegrationFailure as exc:
        print(f"integration failure: {exc}", file=sys.stderr)
        return EXIT_INTEGRATION
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
