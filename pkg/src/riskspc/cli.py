"""Command-line entry point.

Standard output carries exactly one JSON status line (or the resolved config
for ``validate-config``); progress goes to standard error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import config as cfgmod
from .harness import TrialFailed, record_name, run_sweep, run_trial, write_record
from .landscape import run_lab
from .risk import RiskOperator

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_CONFIG_MISSING = 3
EXIT_CONFIG_PARSE = 4
EXIT_BAD_OVERRIDE = 5
EXIT_BAD_CONFIG = 6
EXIT_TRIAL_FAILED = 7

log = logging.getLogger("riskspc")


def _status(**fields) -> None:
    print(json.dumps(fields, sort_keys=True), flush=True)


def _fail(code: int, kind: str, message: str) -> int:
    _status(status="error", error=kind, message=" ".join(str(message).split()))
    return code


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, default=None, help="JSON config file (overrides defaults)")
    common.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    common.add_argument("--workers", type=int, default=1, help="parallel workers")
    common.add_argument("--overrides", nargs="*", default=[], metavar="KEY=VALUE",
                        help="dot-path overrides, e.g. controller.K=64 sweep.seeds=[0,1]")

    parser = argparse.ArgumentParser(prog="riskspc", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    trial = sub.add_parser("trial", parents=[common], help="run one seeded trial")
    trial.add_argument("--seed", type=int, default=None, help="default: first of sweep.seeds")
    trial.add_argument("--R", type=int, default=None, help="default: first of sweep.R_values")
    trial.add_argument("--risk", default=None, help="default: first of sweep.risks")
    sub.add_parser("sweep", parents=[common], help="run the (R x risk x seed) grid")
    sub.add_parser("landscape", parents=[common], help="scalar landscape lab")
    sub.add_parser("validate-config", parents=[common], help="print the resolved config")
    return parser


def _resolve(args) -> dict:
    cfg = cfgmod.load_config(args.config)
    return cfgmod.apply_overrides(cfg, args.overrides)


def _cmd_trial(args, cfg) -> int:
    R_values, risks, seeds = cfgmod.sweep_axes(cfg)
    seed = seeds[0] if args.seed is None else args.seed
    R = R_values[0] if args.R is None else args.R
    risk = risks[0] if args.risk is None else RiskOperator.parse(args.risk)
    tc = cfgmod.build_trial_config(cfg, seed=seed, R=R, risk=risk)

    def progress(i, n):
        if i % 10 == 0 or i == n:
            log.info("plan %d/%d", i, n)

    rec = run_trial(tc, workers=args.workers, progress=progress)
    path = args.out / "records" / record_name(tc.R, tc.risk, tc.seed)
    write_record(rec, path)
    _status(status="ok", command="trial", outputs=[str(path)], time_avg_cost=rec.time_avg_cost)
    return EXIT_OK


def _cmd_sweep(args, cfg) -> int:
    R_values, risks, seeds = cfgmod.sweep_axes(cfg)
    base = cfgmod.build_trial_config(cfg)
    summary = run_sweep(R_values, risks, seeds, base, out_dir=args.out, workers=args.workers)
    _status(status="ok", command="sweep", trials=len(R_values) * len(risks) * len(seeds),
            outputs=[str(args.out / "summary.csv"), str(args.out / "pos_err_curves.csv")],
            rows=len(summary.costs))
    return EXIT_OK


def _cmd_landscape(args, cfg) -> int:
    lab = cfg["landscape"]
    try:
        deltas = [float(d) for d in lab["deltas"]]
        grid = tuple(float(v) for v in lab["grid"])
        interval = tuple(float(v) for v in lab["interval"])
        spacing = float(lab["spacing"])
    except (TypeError, ValueError) as exc:
        raise cfgmod.ConfigError(f"invalid landscape section: {exc}") from exc
    paths = run_lab(args.out, deltas, interval, grid, spacing)
    _status(status="ok", command="landscape", outputs=[str(p) for p in paths])
    return EXIT_OK


def _cmd_validate(args, cfg) -> int:
    # type-check every section before echoing
    cfgmod.build_trial_config(cfg)
    cfgmod.sweep_axes(cfg)
    print(json.dumps(cfg, indent=2, sort_keys=True))
    return EXIT_OK


COMMANDS = {
    "trial": _cmd_trial,
    "sweep": _cmd_sweep,
    "landscape": _cmd_landscape,
    "validate-config": _cmd_validate,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO, stream=sys.stderr, format="%(name)s: %(message)s")
    if args.workers < 1:
        return _fail(EXIT_USAGE, "usage", "--workers must be >= 1")
    try:
        cfg = _resolve(args)
    except FileNotFoundError as exc:
        return _fail(EXIT_CONFIG_MISSING, "config_not_found", exc)
    except json.JSONDecodeError as exc:
        return _fail(EXIT_CONFIG_PARSE, "config_parse", exc)
    except cfgmod.OverrideError as exc:
        return _fail(EXIT_BAD_OVERRIDE, "invalid_override", exc)
    except cfgmod.ConfigError as exc:
        return _fail(EXIT_BAD_CONFIG, "invalid_config", exc)
    try:
        return COMMANDS[args.command](args, cfg)
    except cfgmod.ConfigError as exc:
        return _fail(EXIT_BAD_CONFIG, "invalid_config", exc)
    except TrialFailed as exc:
        return _fail(EXIT_TRIAL_FAILED, "trial_failed", exc)


if __name__ == "__main__":
    sys.exit(main())
