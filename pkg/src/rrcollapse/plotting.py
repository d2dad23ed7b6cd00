"""Static figures of experiment traces (matplotlib, Agg backend)."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .exceptions import UnknownObservableError  # noqa: E402
from .trace import TraceRecord, column, observable_names  # noqa: E402

STYLE = {
    "font.size": 9,
    "axes.labelsize": 9,
    "legend.fontsize": 8,
    "lines.linewidth": 1.2,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "savefig.dpi": 150,
}


@dataclass(frozen=True)
class Panel:
    columns: tuple[str, ...]
    ylabel: str
    logy: bool = False


FIGURE_PANELS: dict[str, tuple[Panel, ...]] = {
    "fermi_decay": (
        Panel(("p2_closed", "p2_ode"), "excited population"),
        Panel(("p2_ode",), "excited population (log)", logy=True),
    ),
    "three_level_cascade": (Panel(("p_1", "p_2", "p_3"), "population"),),
    "two_well_localization": (
        Panel(("p_0", "p_1", "p_2", "p_3"), "population"),
        Panel(("localization_left", "participation_ratio"), "localization"),
    ),
    "ehrenfest_check": (
        Panel(("accel", "force_mean"), "m d2<x>/dt2, <F>"),
        Panel(("residual",), "residual", logy=True),
    ),
    "runaway_demo": (Panel(("a_class", "a_analytic"), "acceleration", logy=True),),
    "preacceleration_demo": (
        Panel(("force", "a_reduced"), "force, acceleration"),
        Panel(("kinetic", "radiated", "work"), "energy"),
    ),
}


def plot_observables(name: str) -> list[str]:
    """Observables shown in the figure of experiment ``name``, in order."""
    seen: list[str] = []
    for panel in FIGURE_PANELS[name]:
        seen.extend(c for c in panel.columns if c not in seen)
    return seen


def render_figure(
    trace: Sequence[TraceRecord], panels: Sequence[Panel], path, title: str = ""
) -> Path:
    """Stack one axes per panel, sharing the time axis, and save to ``path``."""
    available = observable_names(trace)
    for panel in panels:
        missing = [c for c in panel.columns if c not in available]
        if missing:
            raise UnknownObservableError(
                f"cannot plot {', '.join(missing)}; trace has {', '.join(available)}"
            )
    path = Path(path)
    t = column(trace, "t")
    with plt.rc_context(STYLE):
        fig, axes = plt.subplots(len(panels), 1, sharex=True, figsize=(6.0, 2.4 * len(panels)), squeeze=False)
        for ax, panel in zip(axes[:, 0], panels):
            for name in panel.columns:
                y = column(trace, name)
                if panel.logy:
                    keep = y > 0
                    ax.semilogy(t[keep], y[keep], label=name)
                else:
                    ax.plot(t, y, label=name)
            ax.set_ylabel(panel.ylabel)
            ax.legend(loc="best", frameon=False)
        axes[-1, 0].set_xlabel("t")
        if title:
            axes[0, 0].set_title(title)
        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)
    return path
