"""Radiation-reaction-augmented quantum dynamics in one dimension.

Finite-difference eigenproblems, Crank-Nicolson propagation, semiclassical
decay of eigenbasis populations, the classical Abraham-Lorentz equation and
a set of reproducible experiments combining them.
"""

__version__ = "0.1.0"

from .exceptions import RRCollapseError  # noqa: E402

__all__ = ["RRCollapseError", "__version__"]
