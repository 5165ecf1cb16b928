"""Command-line entry point: run, validate, and list desk-scale experiments.

Exit codes: 0 success, 2 configuration error, 3 Monte Carlo convergence
failure, 4 output I/O failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .errors import ConvergenceError
from .experiments import (
    EXPERIMENTS,
    ConfigError,
    ExperimentConfig,
    run,
    validate,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CONVERGENCE = 3
EXIT_IO = 4


def _parse_set(pairs: list[str]) -> dict[str, str]:
    overrides: dict[str, str] = {}
    for pair in pairs:
        key, sep, value = pair.partition("=")
        key = key.strip()
        if not sep or not key:
            raise ConfigError(f"--set expects key=value, got {pair!r}")
        overrides[key] = value.strip()
    return overrides


def _read_config_file(path: Path) -> tuple[str, dict[str, str], int]:
    """Parse a flat key=value config file into (experiment, overrides, seed)."""
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    experiment = None
    seed = 0
    overrides: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key or not value:
            raise ConfigError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        if key == "experiment":
            experiment = value
        elif key == "seed":
            try:
                seed = int(value)
            except ValueError as exc:
                raise ConfigError(f"{path}:{lineno}: seed must be an integer") from exc
        else:
            overrides[key] = value
    if experiment is None:
        raise ConfigError(f"{path}: missing required key 'experiment'")
    return experiment, overrides, seed


def _cmd_run(args) -> int:
    out_dir = Path(args.out) if args.out else Path(args.experiment)
    config = ExperimentConfig(
        experiment=args.experiment,
        overrides=_parse_set(args.set),
        seed=args.seed,
        out_dir=out_dir,
    )
    for line in validate(config):
        if line.startswith("warning"):
            print(line, file=sys.stderr)
    manifest = run(config)
    for record in manifest.outputs:
        print(f"wrote {config.out_dir / record.file} ({record.rows} rows)")
    print(f"wrote {config.out_dir / 'manifest.json'}")
    print(f"completed {config.experiment} in {manifest.wall_time_s:.1f} s")
    return EXIT_OK


def _cmd_validate(args) -> int:
    experiment, overrides, seed = _read_config_file(Path(args.config))
    config = ExperimentConfig(experiment=experiment, overrides=overrides, seed=seed)
    diagnostics = validate(config)
    for line in diagnostics:
        print(line)
    if not diagnostics:
        print("ok: no diagnostics")
    return EXIT_OK


def _cmd_list(_args) -> int:
    for name in sorted(EXPERIMENTS):
        exp = EXPERIMENTS[name]
        print(f"{name}: {exp.summary}")
        for key in sorted(exp.defaults):
            value = exp.defaults[key]
            if isinstance(value, tuple):
                text = ",".join(f"{v:g}" for v in value)
            elif isinstance(value, float):
                text = f"{value:g}"
            else:
                text = str(value)
            print(f"    {key}={text}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mcvd",
        description=(
            "Desk-scale experiments for a diffusion-based molecular "
            "communication link with molecule degradation. Experiments write "
            "CSV artifacts plus a manifest.json; see 'mcvd list' for the "
            "catalog and per-experiment defaults."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one experiment and write its CSV artifacts")
    p_run.add_argument("experiment", help="experiment name (see 'mcvd list')")
    p_run.add_argument(
        "--set",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override one default parameter (repeatable)",
    )
    p_run.add_argument("--out", default=None, metavar="DIR",
                       help="output directory (default: ./<experiment>)")
    p_run.add_argument("--seed", type=int, default=0, help="root RNG seed (default 0)")
    p_run.set_defaults(func=_cmd_run)

    p_val = sub.add_parser(
        "validate", help="check a key=value config file without running it"
    )
    p_val.add_argument("config", help="path to a flat key=value config file")
    p_val.set_defaults(func=_cmd_validate)

    p_list = sub.add_parser(
        "list", help="enumerate experiments with their default parameters"
    )
    p_list.set_defaults(func=_cmd_list)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConvergenceError as exc:
        print(f"error: Monte Carlo budget exhausted: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
