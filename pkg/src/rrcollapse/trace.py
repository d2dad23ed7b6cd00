"""Time-stamped observable records shared by all experiments."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class TraceRecord:
    t: float
    observables: dict[str, float] = field(default_factory=dict)

    def __getitem__(self, name: str) -> float:
        return self.observables[name]


def observable_names(trace: Sequence[TraceRecord]) -> list[str]:
    """Observable names in emission order, taken from the first record."""
    return list(trace[0].observables) if trace else []


def column(trace: Sequence[TraceRecord], name: str) -> np.ndarray:
    if name == "t":
        return np.array([r.t for r in trace])
    return np.array([r.observables[name] for r in trace])


def validate_trace(trace: Sequence[TraceRecord]) -> None:
    """Raise ValueError unless times are non-decreasing, columns agree and
    every value is finite."""
    names = observable_names(trace)
    last = -np.inf
    for i, rec in enumerate(trace):
        if rec.t < last:
            raise ValueError(f"trace time goes backwards at record {i}")
        last = rec.t
        if list(rec.observables) != names:
            raise ValueError(f"record {i} has columns {list(rec.observables)}, expected {names}")
        if not np.isfinite(rec.t) or not all(np.isfinite(v) for v in rec.observables.values()):
            raise ValueError(f"record {i} holds a non-finite value")
