"""Command-line entry point.

    hehcnoma <subcommand> [--config FILE] [--out FILE] [--seed N] [--workers N]

Results go to ``--out`` as CSV with a ``.manifest.json`` sidecar, or to stdout
without a manifest. Optimiser subcommands also print their argmin as one JSON
line per case on stderr. Failures print one JSON object on stderr and exit
nonzero.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time

from . import harness
from .harness import RunManifest
from .protocol import PowerAllocation

log = logging.getLogger("hehcnoma")

EXIT_USAGE = 2
EXIT_FAILURE = 1

# subcommand -> (axis, forced mode or None to read the config)
COMMANDS = {
    "analytic": ("snr", "analytic"),
    "simulate": ("snr", "simulate"),
    "compare": ("snr", "both"),
    "sweep-alpha": ("alpha2", None),
    "sweep-eh": ("eh_grid", None),
    "optimize-eh": ("eh_grid", "analytic"),
    "optimize-alpha": ("alpha2", "analytic"),
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _u64(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 1 << 64:
        raise argparse.ArgumentTypeError(f"seed must fit in 64 unsigned bits: {text}")
    return value


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer: {text}")
    return value


def _add_common(parser: argparse.ArgumentParser, suppress: bool) -> None:
    # flags may come before or after the subcommand; the copy on the
    # subcommand must not reset values given before it
    default = (lambda value: argparse.SUPPRESS) if suppress else (lambda value: value)
    parser.add_argument("--config", default=default(None), help="experiment JSON document")
    parser.add_argument("--out", default=default(None), help="CSV destination (default: stdout)")
    parser.add_argument("--seed", type=_u64, default=default(None), help="master seed, overrides the config")
    parser.add_argument("--workers", type=_positive, default=default(1), help="simulation worker processes")
    parser.add_argument("-v", "--verbose", action="store_true", default=default(False))


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hehcnoma", description=__doc__.splitlines()[0])
    _add_common(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        _add_common(sub.add_parser(name), suppress=True)
    return parser


def _spec(args, config: dict) -> harness.SweepSpec:
    axis, mode = COMMANDS[args.command]
    if axis == "eh_grid":
        betas, rhos = harness.eh_grid_defaults()
        config = {"beta": list(betas), "rho": list(rhos), **config}
    return harness.spec_from_config(config, axis=axis, mode=mode, seed=args.seed)


def _optimize(args, spec: harness.SweepSpec, config: dict) -> list[dict]:
    objective = config.get("objective", "max_user")
    results = []
    (snr,) = spec.snr_db
    for scenario in spec.scenarios:
        if args.command == "optimize-eh":
            (alpha2,) = spec.alpha2
            beta, rho, value = harness.optimize_eh(
                scenario, PowerAllocation.from_alpha2(alpha2), snr, spec.beta_grid, spec.rho_grid,
                objective, spec.eta)
            results.append(dict(scenario=scenario.name, objective=objective, snr_db=snr, alpha2=alpha2,
                                beta=beta, rho=rho, value=value))
        else:
            for protocol in spec.protocols:
                alpha2, value = harness.optimize_alpha(scenario, protocol, snr, spec.alpha2, objective)
                results.append(dict(scenario=scenario.name, protocol=protocol.label, beta=protocol.beta,
                                    rho=protocol.rho, objective=objective, snr_db=snr, alpha2=alpha2,
                                    value=value))
    return results


def run(args) -> int:
    config = harness.load_config(args.config) if args.config else {}
    spec = _spec(args, config)
    manifest = RunManifest(config_digest=harness.config_digest(config), master_seed=spec.seed)
    t0 = time.perf_counter()
    rows = harness.run_sweep(spec, workers=args.workers, manifest=manifest)
    if args.command.startswith("optimize"):
        optima = _optimize(args, spec, config)
        manifest.extra["optima"] = optima
        for item in optima:
            print(json.dumps(item, sort_keys=True), file=sys.stderr)
    manifest.wall_clock_s = time.perf_counter() - t0
    if args.out:
        harness.write_results(rows, manifest, args.out)
    else:
        harness.write_csv(rows, sys.stdout)
    return 0


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(json.dumps({"error": "usage", "message": str(exc)}), file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return run(args)
    except BrokenPipeError:
        # reader closed stdout early (e.g. piped into head); not an error
        sys.stdout = open(os.devnull, "w")
        return 0
    except Exception as exc:  # noqa: BLE001 - reported as one machine-readable line
        log.debug("failure", exc_info=True)
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    raise SystemExit(main())
