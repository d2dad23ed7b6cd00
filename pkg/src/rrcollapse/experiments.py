"""Named, reproducible experiments built from the simulation modules.

Every experiment takes an :class:`ExperimentConfig` and returns an
:class:`ExperimentResult` holding one trace and a flat summary. Configs are
fully resolved on construction: unknown parameter names are rejected and
omitted ones take the defaults in :data:`DEFAULT_PARAMETERS`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping

import numpy as np

from .classical_rr import (
    ALParams,
    ALState,
    StepForce,
    ZeroForce,
    energy_audit,
    fit_growth_rate,
    integrate_direct,
    reduced_trajectory,
)
from .dissipative import (
    DecayRateMatrix,
    DissipativeState,
    NoiseSpec,
    PhysicalConstants,
    decay_rates,
    evolve_combined,
    evolve_dissipative,
    fermi_closed_form,
    participation_ratio,
    two_level_rates,
)
from .exceptions import ConfigError
from .spectral import Box, DoubleWell, Grid1D, Harmonic, dipole_matrix, solve_eigenproblem
from .trace import TraceRecord, column
from .unitary import CrankNicolson, WaveFunction, gaussian_packet, mean_force

MAX_SEED = 2**64 - 1

DEFAULT_PARAMETERS: dict[str, dict[str, Any]] = {
    "fermi_decay": {
        "p2_initial": 0.99,
        "A": 1.0,
        "t_max": 20.0,
        "dt": 0.01,
    },
    "three_level_cascade": {
        "p1_initial": 1e-4,
        "p2_initial": 1e-2,
        "A21": 1.0,
        "A31": 1.0,
        "A32": 1.0,
        "E1": 0.0,
        "E2": 1.0,
        "E3": 2.0,
        "t_max": 60.0,
        "dt": 0.005,
        "cascade_threshold": 0.5,
        "direct_threshold": 0.1,
    },
    "two_well_localization": {
        "separation": 3.0,
        "width": 1.0,
        "depth": 10.0,
        "delta": 0.5,
        "n_states": 32,
        "x_min": -8.0,
        "x_max": 8.0,
        "n_points": 400,
        "packet_offset": 0.0,
        "packet_width": 1.5,
        "dt": 0.5,
        "t_max": 5e5,
        "max_rate": 0.1,
        "rate_scale": 1.0,
        "sigma_E": 0.0,
        "gate_epsilon": 1e-6,
        "localization_threshold": 0.99,
    },
    "ehrenfest_check": {
        "potential": "harmonic",
        "omega": 1.0,
        "x_min": -8.0,
        "x_max": 8.0,
        "n_points": 6399,
        "x0": 0.1,
        "packet_width": 1.0 / math.sqrt(2.0),
        "k0": 0.0,
        "dt": 1e-3,
        "n_steps": 1000,
    },
    "runaway_demo": {
        "m_eff": 1.0,
        "tau": 1.0,
        "a0": 1.0,
        "dt": 0.01,
        "t_max": 20.0,
    },
    "preacceleration_demo": {
        "m_eff": 1.0,
        "tau": 1.0,
        "F0": 1.0,
        "t_on": 0.0,
        "t_min": -10.0,
        "t_max": 10.0,
        "dt": 0.01,
    },
}

DEFAULT_SAMPLE_INTERVAL = {
    "fermi_decay": 10,
    "three_level_cascade": 20,
    "two_well_localization": 500,
    "ehrenfest_check": 10,
    "runaway_demo": 10,
    "preacceleration_demo": 10,
}

EXPERIMENT_NAMES = tuple(DEFAULT_PARAMETERS)


def _coerce(name: str, key: str, value, default):
    if isinstance(default, str):
        if not isinstance(value, str):
            raise ConfigError(f"{name}: parameter {key!r} must be a string, got {value!r}")
        return value
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{name}: parameter {key!r} must be numeric, got {value!r}")
    if isinstance(default, int):
        if float(value) != int(value):
            raise ConfigError(f"{name}: parameter {key!r} must be an integer, got {value!r}")
        return int(value)
    value = float(value)
    if not math.isfinite(value):
        raise ConfigError(f"{name}: parameter {key!r} must be finite")
    return value


@dataclass(frozen=True)
class ExperimentConfig:
    """A fully resolved experiment request.

    ``parameters`` may be partial on construction; the stored mapping
    always holds every parameter of the experiment.
    """

    name: str
    parameters: Mapping[str, Any] = field(default_factory=dict)
    seed: int = 0
    sample_interval: int | None = None

    def __post_init__(self):
        if self.name not in DEFAULT_PARAMETERS:
            raise ConfigError(
                f"unknown experiment {self.name!r}; valid names: {', '.join(EXPERIMENT_NAMES)}"
            )
        defaults = DEFAULT_PARAMETERS[self.name]
        unknown = sorted(set(self.parameters) - set(defaults))
        if unknown:
            raise ConfigError(
                f"{self.name}: unknown parameter(s) {', '.join(unknown)}; "
                f"accepted: {', '.join(defaults)}"
            )
        resolved = dict(defaults)
        for key, value in self.parameters.items():
            resolved[key] = _coerce(self.name, key, value, defaults[key])
        object.__setattr__(self, "parameters", resolved)

        if isinstance(self.seed, bool) or not isinstance(self.seed, int) or not 0 <= self.seed <= MAX_SEED:
            raise ConfigError(f"seed must be an integer in [0, 2^64 - 1], got {self.seed!r}")
        interval = self.sample_interval
        if interval is None:
            interval = DEFAULT_SAMPLE_INTERVAL[self.name]
        if isinstance(interval, bool) or not isinstance(interval, int) or interval < 1:
            raise ConfigError(f"sample_interval must be a positive integer, got {interval!r}")
        object.__setattr__(self, "sample_interval", interval)

    def to_dict(self) -> dict:
        return {
            "experiment": self.name,
            "parameters": dict(self.parameters),
            "seed": self.seed,
            "sample_interval": self.sample_interval,
        }


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    trace: list[TraceRecord]
    summary: dict[str, Any]


@dataclass(frozen=True)
class LocalizationMetrics:
    prob_left: float
    participation_ratio: float
    dominant_state: int

    def __post_init__(self):
        if not -1e-9 <= self.prob_left <= 1 + 1e-9:
            raise ValueError(f"prob_left {self.prob_left} outside [0, 1]")
        if self.participation_ratio < 1 - 1e-9:
            raise ValueError(f"participation ratio {self.participation_ratio} below 1")

    @classmethod
    def from_populations(cls, p, prob_left: float) -> "LocalizationMetrics":
        p = np.asarray(p, dtype=float)
        return cls(float(prob_left), participation_ratio(p), int(np.argmax(p)))

    def to_dict(self, prefix: str = "") -> dict:
        return {
            f"{prefix}prob_left": self.prob_left,
            f"{prefix}participation_ratio": self.participation_ratio,
            f"{prefix}dominant_state": self.dominant_state,
        }


def _steps(t_max: float, dt: float) -> int:
    if not dt > 0:
        raise ConfigError(f"dt must be positive, got {dt}")
    if not t_max > 0:
        raise ConfigError(f"t_max must be positive, got {t_max}")
    return int(round(t_max / dt))


# ---------------------------------------------------------------------------
# Fermi two-level decay
# ---------------------------------------------------------------------------


def _crossing_time(t: np.ndarray, y: np.ndarray, level: float) -> float | None:
    """First downward crossing of ``level``, linearly interpolated."""
    below = np.flatnonzero(y <= level)
    if below.size == 0:
        return None
    i = int(below[0])
    if i == 0:
        return float(t[0])
    y0, y1 = y[i - 1], y[i]
    return float(t[i - 1] + (y0 - level) / (y0 - y1) * (t[i] - t[i - 1]))


def tail_rate_fit(t, y, fraction: float = 0.2) -> float:
    """Log-slope of the last ``fraction`` of a positive curve."""
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    start = int(math.floor((1.0 - fraction) * t.size))
    tail_t, tail_y = t[start:], y[start:]
    keep = tail_y > 0
    if keep.sum() < 2:
        return float("nan")
    slope, _ = np.polyfit(tail_t[keep], np.log(tail_y[keep]), 1)
    return float(slope)


def run_fermi_decay(config: ExperimentConfig) -> ExperimentResult:
    """Two-level decay by RK4 alongside the closed-form logistic law."""
    prm = config.parameters
    p2, A, dt = prm["p2_initial"], prm["A"], prm["dt"]
    n = _steps(prm["t_max"], dt)
    state = DissipativeState.from_populations([1.0 - p2, p2], [0.0, 1.0])
    _, ode = evolve_dissipative(state, two_level_rates(A), dt, n, config.sample_interval)
    t = column(ode, "t")
    closed = fermi_closed_form(p2, A, t)
    trace = [
        TraceRecord(
            float(ti),
            {
                "p2_closed": float(pc),
                "p2_ode": rec["p_1"],
                "p1_ode": rec["p_0"],
                "abs_error": abs(rec["p_1"] - float(pc)),
            },
        )
        for ti, pc, rec in zip(t, closed, ode)
    ]
    p2_ode = column(trace, "p2_ode")
    summary = {
        "turning_point_t": _crossing_time(t, p2_ode, 0.5),
        "tail_rate_fit": tail_rate_fit(t, p2_ode),
        "max_abs_error": float(column(trace, "abs_error").max()),
    }
    return ExperimentResult(config, trace, summary)


# ---------------------------------------------------------------------------
# Three-level cascade
# ---------------------------------------------------------------------------


def classify_path(p2_max: float, p1_growth: float, cascade_threshold=0.5, direct_threshold=0.1) -> str:
    if p2_max > cascade_threshold:
        return "cascade"
    if p2_max < direct_threshold and p1_growth > 0:
        return "direct"
    return "mixed"


def run_cascade(config: ExperimentConfig) -> ExperimentResult:
    """Three levels seeded mostly in |3>; classify how |1> gets populated."""
    prm = config.parameters
    p1, p2 = prm["p1_initial"], prm["p2_initial"]
    p3 = 1.0 - p1 - p2
    if min(p1, p2, p3) < 0:
        raise ConfigError("initial populations must be non-negative and sum to at most 1")
    energies = [prm["E1"], prm["E2"], prm["E3"]]
    if not energies[0] < energies[1] < energies[2]:
        raise ConfigError("cascade levels need E1 < E2 < E3")
    rates = np.zeros((3, 3))
    rates[1, 0], rates[2, 0], rates[2, 1] = prm["A21"], prm["A31"], prm["A32"]
    state = DissipativeState.from_populations([p1, p2, p3], energies)
    n = _steps(prm["t_max"], prm["dt"])
    # Classify on every step; thin the trace afterwards.
    _, full = evolve_dissipative(
        state, DecayRateMatrix(rates, np.array(energies)), prm["dt"], n, 1,
        names=["p_1", "p_2", "p_3"],
    )
    p2 = column(full, "p_2")
    k = int(np.argmax(p2))
    p1_final = full[-1]["p_1"]
    summary = {
        "path": classify_path(
            float(p2[k]), p1_final - p1, prm["cascade_threshold"], prm["direct_threshold"]
        ),
        "p2_max": float(p2[k]),
        "t_p2_max": full[k].t,
        "p1_final": p1_final,
    }
    return ExperimentResult(config, _thin(full, config.sample_interval), summary)


def _thin(trace: list[TraceRecord], every: int) -> list[TraceRecord]:
    """Every ``every``-th record, always keeping the last."""
    out = trace[::every]
    if (len(trace) - 1) % every:
        out.append(trace[-1])
    return out


# ---------------------------------------------------------------------------
# Two-center localization
# ---------------------------------------------------------------------------


@dataclass
class TwoWellSetup:
    """Potential, basis and rates of a two-well configuration, before any
    time evolution."""

    potential: DoubleWell
    grid: Grid1D
    basis: Any
    rates: DecayRateMatrix
    light_speed: float
    psi: WaveFunction


def two_well_setup(parameters: Mapping[str, Any]) -> TwoWellSetup:
    """Wells at midpoint -/+ separation/2 with depths depth +/- delta/2
    (well A, on the left, is deeper for delta > 0).

    The light speed is chosen so the fastest rate equals ``max_rate``;
    rates scale as c^-3, so one trial evaluation fixes it.
    """
    prm = parameters
    grid = Grid1D(prm["x_min"], prm["x_max"], prm["n_points"])
    mid, half = grid.midpoint, 0.5 * prm["separation"]
    if prm["depth"] - 0.5 * abs(prm["delta"]) < 0:
        raise ConfigError("delta/2 may not exceed depth")
    pot = DoubleWell(
        mid - half, mid + half,
        prm["depth"] + 0.5 * prm["delta"], prm["depth"] - 0.5 * prm["delta"],
        prm["width"],
    )
    basis = solve_eigenproblem(grid, pot, prm["n_states"])
    d = dipole_matrix(basis)
    trial = decay_rates(basis, d, PhysicalConstants(c=1.0))
    if not trial.max_rate > 0:
        raise ConfigError("the two-well basis has no radiative transitions")
    if not prm["max_rate"] > 0:
        raise ConfigError("max_rate must be positive")
    c = (trial.max_rate / prm["max_rate"]) ** (1.0 / 3.0)
    rates = decay_rates(basis, d, PhysicalConstants(c=c))
    if prm["rate_scale"] != 1.0:
        if prm["rate_scale"] < 0:
            raise ConfigError("rate_scale must be non-negative")
        if prm["sigma_E"] > 0:
            raise ConfigError("rate_scale cannot be combined with energy noise")
        rates = rates.scaled(prm["rate_scale"])
    psi = gaussian_packet(grid, mid + prm["packet_offset"], prm["packet_width"])
    return TwoWellSetup(pot, grid, basis, rates, c, psi)


def run_two_well(config: ExperimentConfig) -> ExperimentResult:
    """Broad packet over two attractive centers under combined evolution."""
    prm = config.parameters
    setup = two_well_setup(prm)
    noise = NoiseSpec(prm["sigma_E"], config.seed) if prm["sigma_E"] > 0 else None
    n = _steps(prm["t_max"], prm["dt"])
    split = setup.potential.separation_midpoint
    result = evolve_combined(
        setup.psi, setup.basis, setup.rates, prm["dt"], n,
        noise=noise, sample_interval=config.sample_interval,
        gate_epsilon=prm["gate_epsilon"], split_point=split,
    )
    trace = result.trace
    names = [f"p_{k}" for k in range(setup.basis.n_states)]
    pops = np.array([[rec[k] for k in names] for rec in trace])
    t = column(trace, "t")

    def metrics(i):
        return LocalizationMetrics.from_populations(pops[i], trace[i]["localization_left"])

    initial, final = metrics(0), metrics(-1)
    hit = np.flatnonzero(pops.max(axis=1) > prm["localization_threshold"])
    t_loc = float(t[hit[0]]) if hit.size else None

    # Residence of the final dominant state: how long it has led without
    # interruption at the end of the run.
    leader = pops.argmax(axis=1)
    changed = np.flatnonzero(leader != leader[-1])
    since = t[changed[-1] + 1] if changed.size else t[0]

    ground_left = float(np.sum(setup.basis.states[:, 0] ** 2 * (setup.grid.x < split)) * setup.grid.dx)
    summary = {
        **initial.to_dict("initial_"),
        **final.to_dict("final_"),
        "final_max_population": float(pops[-1].max()),
        "final_ground_population": float(pops[-1, 0]),
        "ground_state_prob_left": ground_left,
        "time_to_localization": t_loc,
        "dominant_residence_time": float(t[-1] - since),
        "min_participation_ratio": float(column(trace, "participation_ratio").min()),
        "light_speed": setup.light_speed,
        "max_rate": setup.rates.max_rate,
        "energy_gap_01": float(setup.basis.energies[1] - setup.basis.energies[0]),
    }
    return ExperimentResult(config, trace, summary)


# ---------------------------------------------------------------------------
# Ehrenfest check
# ---------------------------------------------------------------------------


def run_ehrenfest_check(config: ExperimentConfig) -> ExperimentResult:
    """Compare m d^2<x>/dt^2 with <-dV/dx> along a Crank-Nicolson run.

    The second derivative is a central difference over consecutive steps,
    so the trace starts at the first step and ends one step early.
    """
    prm = config.parameters
    kinds = {"harmonic": lambda: Harmonic(prm["omega"]), "free": Box}
    if prm["potential"] not in kinds:
        raise ConfigError(f"potential must be one of {sorted(kinds)}, got {prm['potential']!r}")
    pot = kinds[prm["potential"]]()
    grid = Grid1D(prm["x_min"], prm["x_max"], prm["n_points"])
    psi = gaussian_packet(grid, prm["x0"], prm["packet_width"], prm["k0"])
    dt, n = prm["dt"], prm["n_steps"]
    if n < 2:
        raise ConfigError("n_steps must be at least 2")
    cn = CrankNicolson(grid, pot, dt)
    amps = psi.amplitudes.copy()
    x = grid.x
    xs, forces = np.empty(n + 1), np.empty(n + 1)
    for i in range(n + 1):
        wf = WaveFunction(grid, amps)
        xs[i] = float(np.sum(wf.density() * x) * grid.dx)
        forces[i] = mean_force(wf, pot)
        if i < n:
            amps = cn.step(amps)
    accel = (xs[2:] - 2.0 * xs[1:-1] + xs[:-2]) / dt**2
    residual = np.abs(accel - forces[1:-1])
    trace = [
        TraceRecord(
            float(i * dt),
            {
                "x_mean": float(xs[i]),
                "accel": float(accel[i - 1]),
                "force_mean": float(forces[i]),
                "residual": float(residual[i - 1]),
            },
        )
        for i in range(1, n)
    ]
    summary = {"max_residual": float(residual.max()), "mean_residual": float(residual.mean())}
    return ExperimentResult(config, _thin(trace, config.sample_interval), summary)


# ---------------------------------------------------------------------------
# Classical Abraham-Lorentz demos
# ---------------------------------------------------------------------------


def _al_params(prm, force) -> ALParams:
    try:
        return ALParams(prm["m_eff"], prm["tau"], force)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _runaway_demo(config: ExperimentConfig) -> ExperimentResult:
    prm = config.parameters
    params = _al_params(prm, ZeroForce())
    n = _steps(prm["t_max"], prm["dt"])
    traj = integrate_direct(ALState(0.0, 0.0, 0.0, prm["a0"]), params, prm["dt"], n)
    analytic = prm["a0"] * np.exp(traj.t / params.tau)
    audit = energy_audit(traj, params)
    trace = [
        TraceRecord(
            float(traj.t[i]),
            {
                "a_class": float(traj.a[i]),
                "a_analytic": float(analytic[i]),
                "v": float(traj.v[i]),
                "x": float(traj.x[i]),
                "radiated": float(audit.radiated[i]),
            },
        )
        for i in range(len(traj))
    ]
    rate = fit_growth_rate(traj.t, traj.a) if prm["a0"] != 0 else 0.0
    summary = {
        "growth_rate_fit": rate,
        "expected_rate": 1.0 / params.tau,
        "growth_rate_error": abs(rate - 1.0 / params.tau) if prm["a0"] != 0 else None,
        "runaway": traj.runaway,
        "runaway_time": traj.runaway_time,
        "max_abs_accel": float(np.max(np.abs(traj.a))),
    }
    return ExperimentResult(config, _thin(trace, config.sample_interval), summary)


def _preacceleration_demo(config: ExperimentConfig) -> ExperimentResult:
    prm = config.parameters
    force = StepForce(prm["F0"], prm["t_on"])
    params = _al_params(prm, force)
    if not prm["t_min"] < prm["t_on"] < prm["t_max"]:
        raise ConfigError("preacceleration demo needs t_min < t_on < t_max")
    dt = prm["dt"]
    n = _steps(prm["t_max"] - prm["t_min"], dt)
    t_grid = prm["t_min"] + dt * np.arange(n + 1)
    reduced = reduced_trajectory(params, t_grid)
    audit = energy_audit(reduced, params)
    # Direct integration started on the reduced solution: it tracks it until
    # the kink at t_on seeds the homogeneous e^{t/tau} mode.
    start = ALState(float(t_grid[0]), 0.0, float(reduced.v[0]), float(reduced.a[0]))
    direct = integrate_direct(start, params, dt, n)
    trace = [
        TraceRecord(
            float(t_grid[i]),
            {
                "force": float(force(t_grid[i])),
                "a_reduced": float(reduced.a[i]),
                "a_direct": float(direct.a[i]),
                "v_reduced": float(reduced.v[i]),
                "kinetic": float(audit.kinetic[i]),
                "radiated": float(audit.radiated[i]),
                "work": float(audit.work[i]),
            },
        )
        for i in range(n + 1)
    ]
    probe = force.reduced_acceleration(
        np.array([prm["t_on"] - params.tau, prm["t_on"] + 50.0 * params.tau]), params.m_eff, params.tau
    )
    scale = abs(prm["F0"]) / params.m_eff
    off = np.flatnonzero(np.abs(direct.a - reduced.a) > 1e-4 * max(scale, 1e-300))
    work = audit.work[-1]
    summary = {
        "preacceleration_ratio": float(probe[0] / probe[1]) if probe[1] != 0 else None,
        "expected_ratio": math.exp(-1.0),
        "direct_departure_time": float(t_grid[off[0]]) if off.size else None,
        "direct_runaway": direct.runaway,
        "energy_drift_fraction": float(abs(audit.drift[-1]) / abs(work)) if work != 0 else None,
    }
    return ExperimentResult(config, _thin(trace, config.sample_interval), summary)


def run_classical_demos(config: ExperimentConfig) -> ExperimentResult:
    if config.name == "runaway_demo":
        return _runaway_demo(config)
    if config.name == "preacceleration_demo":
        return _preacceleration_demo(config)
    raise ConfigError(f"{config.name!r} is not a classical demo")


RUNNERS: dict[str, Callable[[ExperimentConfig], ExperimentResult]] = {
    "fermi_decay": run_fermi_decay,
    "three_level_cascade": run_cascade,
    "two_well_localization": run_two_well,
    "ehrenfest_check": run_ehrenfest_check,
    "runaway_demo": run_classical_demos,
    "preacceleration_demo": run_classical_demos,
}


def run_experiment(config: ExperimentConfig) -> ExperimentResult:
    return RUNNERS[config.name](config)
