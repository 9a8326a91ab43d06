from __future__ import annotations

import argparse
import logging
import logging.config
import sys
from dataclasses import dataclass
from enum import IntEnum
from pathlib import Path
from typing import Any

import argcomplete

# Local imports
from secroute import __about__
from secroute.custom_exceptions import InvalidModel, ScenarioError, SecRouteException
from secroute.experiments import (
    cmd_lemma1_check,
    cmd_route,
    cmd_route_study,
    cmd_scp_eval,
    cmd_selftest,
    scp_eval_table,
    study_table,
)
from secroute.model import EavesdropperMode, ScpMethod
from secroute.reporting import CsvTable, config_hash, render, write_sidecar, write_text
from secroute.scenario import ALL_METHODS, ALL_MODES, HASH_NEUTRAL_KEYS, ScenarioConfig, parse_scenario
from secroute.utils.cli_suggestions import SmartParser


# -----------------------------
# Exit codes (bash-friendly)
# -----------------------------
class ExitCode(IntEnum):
    OK = 0
    BAD_USAGE = 2
    CONFIG = 10
    RUNTIME = 1
    INTERRUPTED = 130


# -----------------------------
# Logging config helper
# -----------------------------


def _generate_logging_config(level: str = "INFO") -> dict:
    return {
        "version": 1,
        "disable_existing_loggers": False,
        "formatters": {
            "std": {
                "format": "%(levelname)s: %(message)s",
            }
        },
        "handlers": {
            "stderr": {
                "class": "logging.StreamHandler",
                "level": level,
                "formatter": "std",
                "stream": "ext://sys.stderr",
            }
        },
        "root": {"handlers": ["stderr"], "level": level},
    }


# -----------------------------
# Dataclasses for shared options
# -----------------------------
@dataclass
class GlobalOpts:
    verbose: bool
    quiet: bool
    dry_run: bool


# -----------------------------
# Handlers
# -----------------------------


def _modes(value: str | None) -> tuple[EavesdropperMode, ...] | None:
    if value is None:
        return None
    return ALL_MODES if value == "both" else (EavesdropperMode(value),)


def _methods(value: str | None) -> tuple[ScpMethod, ...] | None:
    if value is None:
        return None
    return ALL_METHODS if value == "all" else (ScpMethod(value),)


def _load_config(args: argparse.Namespace) -> ScenarioConfig:
    config = parse_scenario(args.config)
    # route-study counts placements, not Monte-Carlo draws
    study = args.command == "route-study"
    return config.with_overrides(
        seed=args.seed,
        trials=None if study else args.trials,
        study_trials=args.trials if study else None,
        out=args.out,
        modes=_modes(getattr(args, "mode", None)),
        methods=_methods(getattr(args, "method", None)),
        workers=args.workers,
    )


def _emit(
    table: CsvTable, seed: int, resolved: dict[str, Any], out: str | None, g: GlobalOpts, sidecar: dict[str, Any]
) -> None:
    """CSV to ``<out>.csv`` (or STDOUT) and the JSON sidecar to ``<out>.json``."""
    digest = config_hash({k: v for k, v in resolved.items() if k not in HASH_NEUTRAL_KEYS})
    text = table.format(seed=seed, digest=digest)
    if out:
        write_text(Path(f"{out}.csv"), text, dry_run=g.dry_run)
        write_sidecar(
            Path(f"{out}.json"),
            {"command": table.command, "config": resolved, "config_hash": digest, "rows": table.records(), **sidecar},
            dry_run=g.dry_run,
        )
    else:
        # Print to STDOUT (so users can pipe into other tools)
        sys.stdout.write(text)


def handle_scp_eval(args: argparse.Namespace, g: GlobalOpts) -> int:
    config = _load_config(args)
    records = cmd_scp_eval(config)
    sidecar = {
        "records": [
            {
                "scenario": r.scenario,
                "lambda_e": r.lambda_e,
                "mode": r.mode,
                "method": r.method,
                "path": list(r.path.node_indices),
                "scp": r.scp,
                "ci_halfwidth": r.ci_halfwidth,
                "wall_time": r.wall_time,
            }
            for r in records
        ]
    }
    _emit(scp_eval_table(records), config.seed, config.as_dict(), config.out, g, sidecar)
    return int(ExitCode.OK)


def handle_route(args: argparse.Namespace, g: GlobalOpts) -> int:
    config = _load_config(args)
    report = cmd_route(config)
    if not g.quiet:
        print(render("route_report.txt.j2", report.template_data()), file=sys.stderr)
    sidecar = {"timings": report.timings, "skipped": report.skipped}
    _emit(report.table(), config.seed, config.as_dict(), config.out, g, sidecar)
    return int(ExitCode.OK)


def handle_route_study(args: argparse.Namespace, g: GlobalOpts) -> int:
    config = _load_config(args)
    rows = cmd_route_study(config)
    _emit(study_table(rows), config.seed, config.as_dict(), config.out, g, {})
    return int(ExitCode.OK)


def handle_lemma1_check(args: argparse.Namespace, g: GlobalOpts) -> int:
    seed = 0 if args.seed is None else args.seed
    table, ok = cmd_lemma1_check(seed, instances=args.instances)
    _emit(table, seed, {"seed": seed, "instances": args.instances}, args.out, g, {})
    if not ok:
        logging.error("f_n >= g_n failed on at least one instance")
        return int(ExitCode.RUNTIME)
    return int(ExitCode.OK)


def handle_selftest(args: argparse.Namespace, g: GlobalOpts) -> int:
    checks = cmd_selftest()
    passed = sum(c.passed for c in checks)
    print(render("selftest.txt.j2", {"version": __about__.__version__, "checks": checks, "passed": passed}))
    return int(ExitCode.OK) if passed == len(checks) else int(ExitCode.RUNTIME)


# -----------------------------
# Parser wiring
# -----------------------------


def add_common_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("-v", "--verbose", action="store_true", help="Enable verbose logging")
    p.add_argument("-q", "--quiet", action="store_true", help="Silence non-error logs")
    p.add_argument("--dry-run", action="store_true", help="Do not write files; describe what would happen")


def add_run_flags(p: argparse.ArgumentParser, *, config: bool = True) -> None:
    if config:
        p.add_argument("--config", required=True, help="Scenario file, or builtin:<name>")
        p.add_argument("--trials", type=int, help="Monte-Carlo trials; placements per size for route-study (overrides the scenario)")
        p.add_argument("--workers", type=int, help="Worker threads (never changes results)")
    p.add_argument("--seed", type=int, help="Random seed (overrides the scenario)")
    p.add_argument("-o", "--out", help="Output prefix for <out>.csv and <out>.json; CSV goes to STDOUT if omitted")


def build_parser() -> SmartParser:
    parser = SmartParser(
        prog=__about__.__title__,
        description=__about__.__description__,
        formatter_class=argparse.RawTextHelpFormatter,
    )

    parser.add_argument("--version", action="version", version=f"%(prog)s {__about__.__version__}")

    sub = parser.add_subparsers(dest="command", required=True)

    mode_choices = ["colluding", "noncolluding", "both"]

    # scp-eval
    p_eval = sub.add_parser(
        "scp-eval",
        help="Secure connection probability of a fixed path across a density sweep",
        description="Evaluate the scenario's path with Monte-Carlo, exact and approximate engines.",
    )
    add_run_flags(p_eval)
    p_eval.add_argument("--mode", choices=mode_choices, help="Eavesdropper mode(s)")
    p_eval.add_argument("--method", choices=["mc", "exact", "approx", "all"], help="Evaluation method(s)")
    add_common_flags(p_eval)
    p_eval.set_defaults(func=handle_scp_eval)

    # route
    p_route = sub.add_parser(
        "route",
        help="Highest-SCP route against the exhaustive benchmarks",
        description=(
            "Select the route with the revised Bellman-Ford search and score it, and any benchmark\n"
            "routes, by exact SCP at every density of the sweep."
        ),
    )
    add_run_flags(p_route)
    p_route.add_argument("--mode", choices=mode_choices, help="Eavesdropper mode(s)")
    add_common_flags(p_route)
    p_route.set_defaults(func=handle_route)

    # route-study
    p_study = sub.add_parser(
        "route-study",
        help="Proposed vs. benchmark route over random placements",
        description="Mean exact SCP and coincidence rate of the proposed and exact-SCP benchmark routes.",
    )
    add_run_flags(p_study)
    p_study.add_argument("--mode", choices=mode_choices, help="Eavesdropper mode(s)")
    add_common_flags(p_study)
    p_study.set_defaults(func=handle_route_study)

    # lemma1-check
    p_lemma = sub.add_parser(
        "lemma1-check",
        help="Numerically check the common-anchor inequality",
        description="Compare the distinct-anchor and common-anchor line integrals on random instances.",
    )
    add_run_flags(p_lemma, config=False)
    p_lemma.add_argument("--instances", type=int, default=200, help="Random instances to check")
    add_common_flags(p_lemma)
    p_lemma.set_defaults(func=handle_lemma1_check)

    # selftest
    p_self = sub.add_parser("selftest", help="Run a fast battery of known-value checks")
    add_common_flags(p_self)
    p_self.set_defaults(func=handle_selftest)

    return parser


# -----------------------------
# Main entry point
# -----------------------------


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    argcomplete.autocomplete(parser)

    args = parser.parse_args(argv)

    # logging level
    if getattr(args, "verbose", False):
        level = "DEBUG"
    elif getattr(args, "quiet", False):
        level = "CRITICAL"
    else:
        level = "INFO"
    logging.config.dictConfig(_generate_logging_config(level=level))

    g = GlobalOpts(verbose=args.verbose, quiet=args.quiet, dry_run=getattr(args, "dry_run", False))

    try:
        rc = args.func(args, g)  # type: ignore[arg-type]
        return int(rc)
    except (ScenarioError, InvalidModel) as e:
        logging.error(str(e))
        return int(ExitCode.CONFIG)
    except SecRouteException as e:
        logging.error(str(e))
        return int(ExitCode.RUNTIME)
    except ValueError as e:
        logging.error(str(e))
        return int(ExitCode.BAD_USAGE)
    except KeyboardInterrupt:
        print("Interrupted.", file=sys.stderr)
        return int(ExitCode.INTERRUPTED)
    except SystemExit as e:
        # Let argparse/SystemExit codes flow through (e.g., --help)
        try:
            return int(e.code)  # type: ignore[arg-type]
        except Exception:
            return int(ExitCode.BAD_USAGE)
    except Exception as e:  # pragma: no cover - unexpected bug
        logging.exception("unexpected error: %s", e)
        return int(ExitCode.RUNTIME)


if __name__ == "__main__":
    sys.exit(main())
