"""Command-line front end: config parsing, dispatch and file output."""

from .config import parse_config
from .main import main
from .output import PlotData, RunManifest, emit_plot_data, read_trace, write_trace

__all__ = ["PlotData", "RunManifest", "emit_plot_data", "main", "parse_config", "read_trace", "write_trace"]
