"""Command-line entry point: ``dcoupler run | list-presets | validate``."""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from .dynamics import DimensionCapError, EvolutionError
from .model import DispersiveValidityError, SingularDenominatorError
from .scenarios import ConfigError, get_preset, list_presets, load_config, run_scenario, validate_config, write_outputs

OUTPUT_ENV = "DCOUPLER_OUTPUT_DIR"
DEFAULT_OUTPUT = "dcoupler-output"

EXIT_CONFIG = 2
EXIT_DISPERSIVE = 3
EXIT_NUMERICAL = 4


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dcoupler", description="Collective-qubit coupler simulations")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a preset or a config file")
    src = run.add_mutually_exclusive_group(required=True)
    src.add_argument("--preset", help="named preset (see list-presets)")
    src.add_argument("--config", type=Path, help="JSON scenario file")
    run.add_argument("--output-dir", type=Path,
                     help=f"where to write outputs (default: ${OUTPUT_ENV} or ./{DEFAULT_OUTPUT})")
    run.add_argument("--jobs", type=int, default=1, help="worker processes for sweeps")
    run.add_argument("--plot", action="store_true", help="also write a PNG of the populations")
    run.add_argument("--points", type=int, help="override the number of sweep points")

    sub.add_parser("list-presets", help="print preset names and descriptions")

    val = sub.add_parser("validate", help="check a config file against the schema")
    val.add_argument("--config", type=Path, required=True)
    return p


def _output_dir(flag: Path | None) -> Path:
    if flag is not None:
        return flag
    return Path(os.environ.get(OUTPUT_ENV) or DEFAULT_OUTPUT)


def _run(args) -> int:
    config = get_preset(args.preset) if args.preset else load_config(args.config)
    if args.points is not None:
        if config.get("kind") != "sweep":
            raise ConfigError("--points only applies to sweep scenarios")
        config["sweep"]["points"] = args.points
    if args.jobs < 1:
        raise ConfigError("--jobs must be at least 1")
    config.setdefault("name", args.preset or args.config.stem)
    validate_config(config)
    result = run_scenario(config, jobs=args.jobs)
    paths = write_outputs(result, _output_dir(args.output_dir), plot=args.plot)
    for key, value in result.summary.items():
        print(f"{key}={value}")
    for kind, path in paths.items():
        print(f"wrote {kind}: {path}")
    return 0


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.command == "list-presets":
            for name, desc in list_presets():
                print(f"{name}\t{desc}")
            return 0
        if args.command == "validate":
            load_config(args.config)
            print(f"{args.config}: ok")
            return 0
        return _run(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DispersiveValidityError as exc:
        print(f"dispersive approximation invalid: {exc}", file=sys.stderr)
        return EXIT_DISPERSIVE
    except (EvolutionError, DimensionCapError, SingularDenominatorError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
