"""Command line entry point ``ris-zf``."""

from __future__ import annotations

import argparse
import sys
from importlib import resources
from pathlib import Path

from .alloc import ALGORITHMS
from .errors import ConfigError
from .harness import AXES, SweepSpec, emit, load_config, run_sweep

BUILTIN_CONFIGS = ("k4", "k12")


def _config_path(name: str) -> Path:
    if name in BUILTIN_CONFIGS:
        return Path(str(resources.files("ris_zf") / "configs" / f"{name}.json"))
    return Path(name)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ris-zf", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a Monte-Carlo sweep")
    run.add_argument("--config", required=True,
                     help=f"JSON scenario file or a built-in name {BUILTIN_CONFIGS}")
    run.add_argument("--sweep", choices=sorted(AXES), default="power")
    run.add_argument("--trials", type=int, default=100)
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--algorithms", default=",".join(ALGORITHMS),
                     help="comma-separated subset of " + ",".join(ALGORITHMS))
    run.add_argument("--out", required=True)
    run.add_argument("--format", choices=("csv", "json"), default="csv")
    run.add_argument("--workers", type=int, default=1)
    run.add_argument("--timing", action="store_true",
                     help="report wall time in mean_ms (output is then not reproducible)")

    check = sub.add_parser("check", help="run the invariant/oracle checks")
    check.add_argument("--seed", type=int, default=0)
    return parser


def _run(args) -> int:
    try:
        base, sweeps = load_config(_config_path(args.config))
        if args.sweep not in sweeps:
            raise ConfigError(f"config has no values for the {args.sweep} sweep")
        algorithms = [a for a in args.algorithms.split(",") if a]
        spec = SweepSpec(AXES[args.sweep], tuple(sweeps[args.sweep]), args.trials,
                         tuple(algorithms), base, args.seed)
        for value in spec.values:
            spec.scenario_at(value)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    result = run_sweep(spec, workers=args.workers)
    try:
        emit(result, args.format, args.out, timing=args.timing)
    except OSError as exc:
        print(f"cannot write {args.out}: {exc}", file=sys.stderr)
        return 1
    if result.failures:
        print(f"{result.failures} trial runs failed; output is partial", file=sys.stderr)
        return 1
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "run":
        return _run(args)
    from .checks import run_checks

    return 0 if run_checks(args.seed) else 1


if __name__ == "__main__":
    sys.exit(main())
