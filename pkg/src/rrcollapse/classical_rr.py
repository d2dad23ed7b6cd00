"""Classical Abraham-Lorentz dynamics in one dimension.

    m_eff x'' = F(t) + m_eff tau x'''      tau = 2 e^2 / (3 m_eff c^3)

Integrated directly as the first-order system (x, v, a) the equation admits
the runaway mode a ~ exp(t/tau). Demanding a -> 0 as t -> infinity selects
the reduced-order solution

    a(t) = 1/(m_eff tau) int_t^inf exp((t - s)/tau) F(s) ds

which never runs away but responds to the force before it acts.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .exceptions import RunawayOverflowError, TimestepTooLargeError

RUNAWAY_FACTOR = 1e12
TAIL_TAUS = 40.0


class TailTruncationWarning(RuntimeWarning):
    """A tabulated force does not decay before the end of its table."""


def _exp_weighted_linear(s, f) -> float:
    """int exp(-u) g(u) du over [s[0], s[-1]] for g linear between the knots."""
    h = np.diff(s)
    slope = np.diff(f) / h
    em = -np.expm1(-h)  # 1 - e^-h
    seg = np.exp(-s[:-1]) * (f[:-1] * em + slope * (em - h * np.exp(-h)))
    return float(np.sum(seg))


# ---------------------------------------------------------------------------
# Force profiles
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ZeroForce:
    def __call__(self, t):
        return np.zeros_like(np.asarray(t, dtype=float))

    def reduced_acceleration(self, t, m_eff, tau):
        return np.zeros_like(np.asarray(t, dtype=float))

    @property
    def scale(self) -> float:
        return 0.0


@dataclass(frozen=True)
class StepForce:
    F0: float
    t_on: float = 0.0

    def __post_init__(self):
        if not math.isfinite(self.t_on):
            raise ValueError("step onset time must be finite")

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        return np.where(t >= self.t_on, self.F0, 0.0)

    def reduced_acceleration(self, t, m_eff, tau):
        t = np.asarray(t, dtype=float)
        before = np.exp(np.minimum(t - self.t_on, 0.0) / tau)
        return self.F0 / m_eff * np.where(t < self.t_on, before, 1.0)

    @property
    def scale(self) -> float:
        return abs(self.F0)


@dataclass(frozen=True)
class PulseForce:
    F0: float
    t_on: float = 0.0
    t_off: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.t_on) and math.isfinite(self.t_off)):
            raise ValueError("pulse times must be finite")
        if self.t_off <= self.t_on:
            raise ValueError("pulse must switch off after it switches on")

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        return np.where((t >= self.t_on) & (t < self.t_off), self.F0, 0.0)

    def reduced_acceleration(self, t, m_eff, tau):
        t = np.asarray(t, dtype=float)
        e_on = np.exp(np.minimum(t - self.t_on, 0.0) / tau)
        e_off = np.exp(np.minimum(t - self.t_off, 0.0) / tau)
        a = np.where(
            t < self.t_on,
            e_on - e_off,
            np.where(t < self.t_off, 1.0 - e_off, 0.0),
        )
        return self.F0 / m_eff * a

    @property
    def scale(self) -> float:
        return abs(self.F0)


@dataclass(frozen=True)
class TabulatedForce:
    """Piecewise-linear force through ``(times, values)``, held constant
    beyond either end of the table."""

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        f = np.asarray(self.values, dtype=float)
        if t.ndim != 1 or t.shape != f.shape or t.size < 2:
            raise ValueError("tabulated force needs matching 1-D times and values (>= 2 samples)")
        if np.any(np.diff(t) <= 0):
            raise ValueError("tabulated force times must increase strictly")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(f))):
            raise ValueError("tabulated force must be finite")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", f)

    def __call__(self, t):
        return np.interp(t, self.times, self.values)

    def reduced_acceleration(self, t, m_eff, tau):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        scale = np.max(np.abs(self.values))
        if scale > 0 and abs(self.values[-1]) > 1e-12 * scale:
            warnings.warn(
                f"tabulated force ends at {self.values[-1]:.3g} (not decayed); the "
                f"future integral is truncated at {TAIL_TAUS:g} tau",
                TailTruncationWarning,
                stacklevel=3,
            )
        out = np.empty_like(t)
        for i, ti in enumerate(t):
            # s = (t' - t)/tau: a = (1/m) int_0^40 exp(-s) F(t + s tau) ds, exact
            # for the piecewise-linear interpolant segment by segment.
            knots = (self.times - ti) / tau
            keep = (knots > 0) & (knots < TAIL_TAUS)
            s = np.concatenate(([0.0], knots[keep], [TAIL_TAUS]))
            ends = np.interp([ti, ti + TAIL_TAUS * tau], self.times, self.values)
            f = np.concatenate(([ends[0]], self.values[keep], [ends[1]]))
            out[i] = _exp_weighted_linear(s, f) / m_eff
        return out

    @property
    def scale(self) -> float:
        return float(np.max(np.abs(self.values)))


ForceProfile = ZeroForce | StepForce | PulseForce | TabulatedForce


def force_from_dict(spec: dict):
    spec = dict(spec)
    kind = spec.pop("kind", "zero")
    kinds = {"zero": ZeroForce, "step": StepForce, "pulse": PulseForce, "tabulated": TabulatedForce}
    if kind not in kinds:
        raise ValueError(f"unknown force kind {kind!r}; expected one of {sorted(kinds)}")
    return kinds[kind](**spec)


# ---------------------------------------------------------------------------
# Parameters and state
# ---------------------------------------------------------------------------


def radiation_time(charge: float, m_eff: float, c: float) -> float:
    """tau = 2 e^2 / (3 m_eff c^3)."""
    return 2.0 * charge**2 / (3.0 * m_eff * c**3)


@dataclass(frozen=True)
class ALParams:
    m_eff: float = 1.0
    tau: float = 1.0
    force: ForceProfile = ZeroForce()

    def __post_init__(self):
        if not (self.m_eff > 0 and math.isfinite(self.m_eff)):
            raise ValueError("m_eff must be positive")
        if not (self.tau > 0 and math.isfinite(self.tau)):
            raise ValueError("tau must be positive")


@dataclass(frozen=True)
class ALState:
    t: float
    x: float
    v: float
    a: float

    def __post_init__(self):
        if not all(math.isfinite(getattr(self, f)) for f in ("t", "x", "v", "a")):
            raise ValueError("ALState components must be finite")


@dataclass
class ALTrajectory:
    t: np.ndarray
    x: np.ndarray
    v: np.ndarray
    a: np.ndarray
    runaway: bool = False
    runaway_time: float | None = None

    def state(self, i: int) -> ALState:
        return ALState(float(self.t[i]), float(self.x[i]), float(self.v[i]), float(self.a[i]))

    def __len__(self):
        return self.t.size


def integrate_direct(initial: ALState, params: ALParams, dt: float, n_steps: int) -> ALTrajectory:
    """RK4 on x' = v, v' = a, a' = (m a - F(t)) / (m tau).

    The trajectory is flagged as a runaway once |a| exceeds 1e12 times the
    initial acceleration scale, max(|a(0)|, max|F|/m), or 1 if both vanish.
    """
    m, tau = params.m_eff, params.tau
    if not dt > 0:
        raise ValueError("dt must be positive")
    if dt >= tau / 10:
        raise TimestepTooLargeError(f"dt={dt:g} must be below tau/10 = {tau / 10:g}")
    force = params.force
    scale = max(abs(initial.a), getattr(force, "scale", 0.0) / m) or 1.0
    limit = RUNAWAY_FACTOR * scale

    def rhs(t, y):
        f = float(force(t))
        return np.array([y[1], y[2], (m * y[2] - f) / (m * tau)])

    out = np.empty((n_steps + 1, 3))
    times = initial.t + dt * np.arange(n_steps + 1)
    y = np.array([initial.x, initial.v, initial.a], dtype=float)
    out[0] = y
    runaway_time = None
    with np.errstate(over="ignore", invalid="ignore"):
        for n in range(n_steps):
            t = times[n]
            k1 = rhs(t, y)
            k2 = rhs(t + 0.5 * dt, y + 0.5 * dt * k1)
            k3 = rhs(t + 0.5 * dt, y + 0.5 * dt * k2)
            k4 = rhs(t + dt, y + dt * k3)
            y_new = y + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            if not np.all(np.isfinite(y_new)):
                last = ALState(float(t), *map(float, y))
                raise RunawayOverflowError(
                    f"Abraham-Lorentz state overflowed after t={t:g} (runaway)", last
                )
            y = y_new
            out[n + 1] = y
            if runaway_time is None and abs(y[2]) > limit:
                runaway_time = float(times[n + 1])
    return ALTrajectory(times, out[:, 0], out[:, 1], out[:, 2], runaway_time is not None, runaway_time)


def integrate_reduced(params: ALParams, t_grid) -> np.ndarray:
    """Runaway-free acceleration on ``t_grid`` (closed form for step/pulse,
    exact quadrature of the interpolant, truncated at 40 tau, for tabulated forces)."""
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1:
        raise ValueError("t_grid must be one-dimensional")
    if t_grid.size > 2:
        steps = np.diff(t_grid)
        if not np.allclose(steps, steps[0], rtol=1e-9, atol=0):
            raise ValueError("t_grid must be uniform")
    return np.asarray(params.force.reduced_acceleration(t_grid, params.m_eff, params.tau), dtype=float)


def reduced_trajectory(params: ALParams, t_grid, x0: float = 0.0, v0: float = 0.0) -> ALTrajectory:
    """Reduced-order acceleration integrated (trapezoid) to velocity and position."""
    t_grid = np.asarray(t_grid, dtype=float)
    a = integrate_reduced(params, t_grid)
    v = v0 + cumulative_trapezoid(a, t_grid, initial=0.0)
    x = x0 + cumulative_trapezoid(v, t_grid, initial=0.0)
    return ALTrajectory(t_grid, x, v, a)


@dataclass
class EnergyAudit:
    t: np.ndarray
    kinetic: np.ndarray
    radiated: np.ndarray
    work: np.ndarray

    @property
    def drift(self) -> np.ndarray:
        """kinetic change + radiated - work; equals the Schott term m tau a v
        (up to its initial value) in exact arithmetic."""
        return self.kinetic - self.kinetic[0] + self.radiated - self.work


def energy_audit(trajectory: ALTrajectory, params: ALParams) -> EnergyAudit:
    """Kinetic energy m v^2/2 and cumulative Larmor loss int m tau a^2 dt."""
    t = trajectory.t
    m, tau = params.m_eff, params.tau
    kinetic = 0.5 * m * trajectory.v**2
    radiated = cumulative_trapezoid(m * tau * trajectory.a**2, t, initial=0.0)
    power = np.asarray(params.force(t), dtype=float) * trajectory.v
    work = cumulative_trapezoid(power, t, initial=0.0)
    return EnergyAudit(t, kinetic, radiated, work)


def fit_growth_rate(t, a) -> float:
    """Least-squares slope of log|a| against t."""
    t = np.asarray(t, dtype=float)
    a = np.abs(np.asarray(a, dtype=float))
    keep = a > 0
    slope, _ = np.polyfit(t[keep], np.log(a[keep]), 1)
    return float(slope)
