"""``rrcollapse`` command-line entry point."""

from __future__ import annotations

import argparse
import math
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

from .. import __version__
from ..exceptions import ConfigError, RRCollapseError
from ..experiments import EXPERIMENT_NAMES, run_experiment
from ..plotting import FIGURE_PANELS, plot_observables, render_figure
from .config import parse_config
from .output import RunManifest, emit_plot_data, write_trace

OUT_ENV = "RR_COLLAPSE_OUT"
DEFAULT_OUT = "rrcollapse_out"

EXIT_OK, EXIT_FAILURE, EXIT_USAGE = 0, 1, 2


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _json_safe(value):
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def _one_line(exc) -> str:
    return " ".join(str(exc).split())


def output_dir(cli_out: str | None, experiment: str) -> Path:
    """--out wins, then $RR_COLLAPSE_OUT, then ./rrcollapse_out/<experiment>."""
    if cli_out:
        return Path(cli_out)
    env = os.environ.get(OUT_ENV)
    if env:
        return Path(env)
    return Path(DEFAULT_OUT) / experiment


def run_command(config_path, overrides, out) -> list[Path]:
    config = parse_config(config_path, overrides)
    out_dir = output_dir(out, config.name)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise RRCollapseError(f"cannot create output directory {out_dir}: {exc.strerror or exc}") from None
    started = _now()
    result = run_experiment(config)
    files = [write_trace(result.trace, out_dir / "trace.csv")]
    plot = emit_plot_data(result.trace, plot_observables(config.name), out_dir)
    files += [*plot.data_files, plot.script]
    files.append(render_figure(result.trace, FIGURE_PANELS[config.name], out_dir / "figure.png", config.name))
    manifest = RunManifest(
        config_echo=config.to_dict(),
        artifact_version=__version__,
        started=started,
        finished=_now(),
        files=[p.name for p in files],
        summary={k: _json_safe(v) for k, v in result.summary.items()},
    )
    files.append(manifest.write(out_dir / "manifest.json"))
    return files


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rrcollapse", description="Radiation-reaction collapse simulator.")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run an experiment from a JSON config")
    run.add_argument("config", help="JSON file with experiment, parameters, seed, sample_interval")
    run.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                     help="override a parameter or top-level key (repeatable)")
    run.add_argument("--out", help=f"output directory (default: ${OUT_ENV} or ./{DEFAULT_OUT}/<experiment>)")
    sub.add_parser("list-experiments", help="print the available experiment names")
    sub.add_parser("version", help="print the package version")
    return parser




def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.command == "version":
        print(__version__)
        return EXIT_OK
    if args.command == "list-experiments":
        print("\n".join(EXPERIMENT_NAMES))
        return EXIT_OK
    try:
        files = run_command(args.config, args.overrides, args.out)
    except ConfigError as exc:
        print(f"rrcollapse: usage error: {_one_line(exc)}", file=sys.stderr)
        return EXIT_USAGE
    except (RRCollapseError, OSError, ValueError) as exc:
        print(f"rrcollapse: error: {_one_line(exc)}", file=sys.stderr)
        return EXIT_FAILURE
    print(f"wrote {len(files)} files to {files[0].parent}")
    return EXIT_OK
