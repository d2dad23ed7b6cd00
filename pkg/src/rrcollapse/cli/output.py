"""Trace CSV, gnuplot data files and the run manifest."""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

from ..exceptions import OutputError, UnknownObservableError
from ..trace import TraceRecord, column, observable_names


def _fmt(value: float) -> str:
    # repr of a float is the shortest string that round-trips exactly
    return repr(float(value))


def write_trace(trace: Sequence[TraceRecord], path) -> Path:
    """CSV with header ``t,<observables...>``, one row per record, LF endings."""
    path = Path(path)
    names = observable_names(trace)
    try:
        with path.open("w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["t", *names])
            for rec in trace:
                writer.writerow([_fmt(rec.t), *(_fmt(rec.observables[n]) for n in names)])
    except OSError as exc:
        raise OutputError(f"cannot write trace {path}: {exc.strerror or exc}") from None
    return path


def read_trace(path) -> list[TraceRecord]:
    path = Path(path)
    with path.open(encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0][:1] != ["t"]:
        raise ValueError(f"{path}: not a trace file (header must start with 't')")
    names = rows[0][1:]
    return [
        TraceRecord(float(row[0]), {n: float(v) for n, v in zip(names, row[1:])})
        for row in rows[1:]
    ]


@dataclass
class PlotData:
    data_files: list[Path]
    script: Path


def emit_plot_data(trace: Sequence[TraceRecord], observables: Sequence[str], out_dir, stem: str = "plot") -> PlotData:
    """One two-column ``t value`` file per observable plus a gnuplot script
    that plots them together."""
    available = observable_names(trace)
    missing = [o for o in observables if o not in available]
    if missing:
        raise UnknownObservableError(
            f"unknown observable(s) {', '.join(missing)}; available: {', '.join(available)}"
        )
    if not observables:
        raise ValueError("no observables requested")
    out_dir = Path(out_dir)
    t = column(trace, "t")
    files = []
    try:
        for name in observables:
            path = out_dir / f"{stem}_{name}.dat"
            y = column(trace, name)
            with path.open("w", encoding="utf-8", newline="\n") as fh:
                fh.write(f"# t {name}\n")
                for ti, yi in zip(t, y):
                    fh.write(f"{_fmt(ti)} {_fmt(yi)}\n")
            files.append(path)
        script = out_dir / f"{stem}.gp"
        lines = [
            'set xlabel "t"',
            "set key outside",
            "plot " + ", \\\n     ".join(
                f"'{p.name}' using 1:2 with lines title '{name}'" for p, name in zip(files, observables)
            ),
        ]
        script.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")
    except OSError as exc:
        raise OutputError(f"cannot write plot data in {out_dir}: {exc.strerror or exc}") from None
    return PlotData(files, script)


@dataclass
class RunManifest:
    config_echo: dict
    artifact_version: str
    started: str
    finished: str
    files: list[str] = field(default_factory=list)
    summary: dict = field(default_factory=dict)

    def write(self, path) -> Path:
        path = Path(path)
        try:
            path.write_text(
                json.dumps(asdict(self), indent=2, allow_nan=False) + "\n", encoding="utf-8", newline="\n"
            )
        except OSError as exc:
            raise OutputError(f"cannot write manifest {path}: {exc.strerror or exc}") from None
        return path
