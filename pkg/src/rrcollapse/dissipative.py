"""Semiclassical radiation-reaction decay of eigenbasis populations.

Two-level systems follow Fermi's logistic law

    p2(t) = (1 - q) / (1 - q + q exp(A t)),    q = |a_1(0)|^2,

which is the exact solution of dp2/dt = -A p2 p1. The multi-level model
applies this pairwise transfer to every downward pair (j -> k, E_j > E_k):

    dp_j/dt = -sum_{k below j} A_jk p_j p_k + sum_{k above j} A_kj p_k p_j

i.e. dp/dt = p * ((A^T - A) p). The bracket is antisymmetric, so the total
population is a linear invariant of the flow and survives RK4 unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from . import _kernels
from .exceptions import (
    IntegratorInstabilityError,
    ProbabilityDomainError,
    TimestepTooLargeError,
)
from .spectral import EigenBasis
from .trace import TraceRecord
from .unitary import NORM_TOL, WaveFunction, project

RATE_RESOLUTION_LIMIT = 0.1
NEGATIVE_POPULATION_TOL = 1e-12
DEFAULT_GATE_EPSILON = 1e-6
_LOG_SPACE_THRESHOLD = 700.0


@dataclass(frozen=True)
class PhysicalConstants:
    e: float = 1.0
    eps0: float = 1.0
    c: float = 1.0
    hbar: float = 1.0
    mass: float = 1.0

    def __post_init__(self):
        for name in ("e", "eps0", "c", "hbar", "mass"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise ValueError(f"physical constant {name} must be finite and positive, got {v}")

    @property
    def rate_prefactor(self) -> float:
        """e^2 / (3 pi eps0 c^3 hbar)."""
        return self.e**2 / (3.0 * np.pi * self.eps0 * self.c**3 * self.hbar)


@dataclass(frozen=True)
class DecayRateMatrix:
    """rates[j, k] is the j -> k transfer rate, nonzero only when E_j > E_k.

    The dipole matrix, energies and constants used to build the rates are
    kept so the matrix can be rebuilt for perturbed energies.
    """

    rates: np.ndarray
    energies: np.ndarray | None = None
    dipole: np.ndarray | None = None
    constants: PhysicalConstants | None = None

    def __post_init__(self):
        r = np.asarray(self.rates, dtype=float)
        if r.ndim != 2 or r.shape[0] != r.shape[1]:
            raise ValueError(f"rate matrix must be square, got shape {r.shape}")
        if np.any(r < 0) or not np.all(np.isfinite(r)):
            raise ValueError("rates must be finite and non-negative")
        if np.any(np.diag(r) != 0):
            raise ValueError("diagonal rates must be zero")
        if np.any((r > 0) & (r.T > 0)):
            raise ValueError("rate matrix allows transfer in both directions for a pair")
        object.__setattr__(self, "rates", r)

    @property
    def size(self) -> int:
        return self.rates.shape[0]

    @property
    def max_rate(self) -> float:
        return float(self.rates.max(initial=0.0))

    def with_energies(self, energies: np.ndarray) -> "DecayRateMatrix":
        if self.dipole is None or self.constants is None:
            raise ValueError("rate matrix was not built from a dipole matrix; cannot recompute")
        return _rates_from(np.asarray(energies, dtype=float), self.dipole, self.constants)

    def scaled(self, factor: float) -> "DecayRateMatrix":
        """Uniformly rescaled rates; the result no longer tracks its dipole
        provenance, so noise cannot rebuild the unscaled values."""
        return DecayRateMatrix(self.rates * factor, self.energies)


def _rates_from(energies, d, constants):
    gap = energies[:, None] - energies[None, :]
    pos = np.where(gap > 0, gap, 0.0)
    rates = constants.rate_prefactor * (pos / constants.hbar) ** 3 * d**2
    return DecayRateMatrix(rates, energies.copy(), d, constants)


def decay_rates(basis: EigenBasis, d: np.ndarray, constants: PhysicalConstants) -> DecayRateMatrix:
    """Fermi/Dirac rates A_jk = e^2/(3 pi eps0 c^3 hbar) (E_j-E_k)^3/hbar^3 d_jk^2."""
    d = np.asarray(d, dtype=float)
    if d.shape != (basis.n_states, basis.n_states):
        raise ValueError(f"dipole matrix shape {d.shape} does not match basis size {basis.n_states}")
    return _rates_from(np.asarray(basis.energies, dtype=float), d, constants)


def two_level_rates(rate: float) -> DecayRateMatrix:
    """Rate matrix for levels (lower, upper) = (0, 1) decaying at ``rate``."""
    return DecayRateMatrix(np.array([[0.0, 0.0], [rate, 0.0]]))


def fermi_closed_form(p2_initial, A, t):
    """Excited-state weight |a_2(t)|^2 of a decaying two-level system.

    Vectorized over ``t``. Beyond ``A t = 700`` the logistic is evaluated
    through its logit to avoid overflowing ``exp(A t)``.
    """
    p2 = float(p2_initial)
    if not (0.0 <= p2 <= 1.0):
        raise ProbabilityDomainError(f"p2_initial must lie in [0, 1], got {p2_initial}")
    if A < 0:
        raise ValueError(f"decay rate must be non-negative, got {A}")
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0):
        raise ValueError("time must be non-negative")
    scalar = t_arr.ndim == 0
    t_arr = np.atleast_1d(t_arr)
    q = 1.0 - p2
    x = A * t_arr
    out = np.empty_like(t_arr)
    if p2 == 0.0 or q == 0.0:
        out[:] = p2
    else:
        small = x <= _LOG_SPACE_THRESHOLD
        out[small] = p2 / (p2 + q * np.exp(x[small]))
        out[~small] = expit(np.log(p2) - np.log(q) - x[~small])
        out[x == 0] = p2
    return float(out[0]) if scalar else out


def fermi_half_time(p2_initial: float, A: float) -> float:
    """Time at which the closed form crosses p2 = 1/2."""
    return float(np.log(p2_initial / (1.0 - p2_initial)) / A)


@dataclass(frozen=True)
class DissipativeState:
    populations: np.ndarray
    phases: np.ndarray
    energies: np.ndarray
    t: float = 0.0
    basis: EigenBasis | None = field(default=None, compare=False)

    def __post_init__(self):
        p = np.asarray(self.populations, dtype=float)
        object.__setattr__(self, "populations", p)
        object.__setattr__(self, "phases", np.asarray(self.phases, dtype=float))
        object.__setattr__(self, "energies", np.asarray(self.energies, dtype=float))
        if not (p.shape == self.phases.shape == self.energies.shape):
            raise ValueError("populations, phases and energies must have the same length")
        if abs(p.sum() - 1.0) > NORM_TOL:
            raise ValueError(f"populations sum to {p.sum():.12g}, not 1")
        if np.any(p < -NEGATIVE_POPULATION_TOL) or np.any(p > 1 + NORM_TOL):
            raise ValueError("populations must lie in [0, 1]")

    @classmethod
    def from_populations(cls, populations, energies, t=0.0, basis=None):
        p = np.asarray(populations, dtype=float)
        return cls(p, np.zeros_like(p), np.asarray(energies, dtype=float), t, basis)

    @classmethod
    def from_coefficients(cls, coeffs, basis: EigenBasis, t=0.0):
        c = np.asarray(coeffs, dtype=complex)
        return cls(np.abs(c) ** 2, np.angle(c), basis.energies, t, basis)

    @property
    def coefficients(self) -> np.ndarray:
        return np.sqrt(np.clip(self.populations, 0.0, None)) * np.exp(1j * self.phases)

    @property
    def mean_energy(self) -> float:
        return float(np.dot(self.populations, self.energies))


def transfer_matrix(rates: np.ndarray) -> np.ndarray:
    """Antisymmetric net-gain matrix A^T - A of the population flow."""
    return rates.T - rates


def population_derivative(p: np.ndarray, transfer: np.ndarray) -> np.ndarray:
    return p * (transfer @ p)


def rk4_population_step(p: np.ndarray, transfer: np.ndarray, dt: float) -> np.ndarray:
    """One classical RK4 step of dp/dt = p * (transfer @ p)."""
    k1 = population_derivative(p, transfer)
    k2 = population_derivative(p + 0.5 * dt * k1, transfer)
    k3 = population_derivative(p + 0.5 * dt * k2, transfer)
    k4 = population_derivative(p + dt * k3, transfer)
    return p + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def participation_ratio(p: np.ndarray) -> float:
    return float(1.0 / np.sum(np.asarray(p) ** 2))


def _check_rate_resolution(dt, max_rate):
    if dt * max_rate >= RATE_RESOLUTION_LIMIT:
        raise TimestepTooLargeError(
            f"dt={dt:g} does not resolve the fastest rate {max_rate:.4g}: "
            f"dt*A = {dt * max_rate:.3g} >= {RATE_RESOLUTION_LIMIT}"
        )


def _population_record(t, p, energies, names):
    obs = {name: float(v) for name, v in zip(names, p)}
    obs["E_mean"] = float(np.dot(p, energies))
    obs["participation_ratio"] = participation_ratio(p)
    return TraceRecord(float(t), obs)


def evolve_dissipative(
    state: DissipativeState,
    rates: DecayRateMatrix,
    dt: float,
    n_steps: int,
    sample_interval: int = 1,
    names: list[str] | None = None,
) -> tuple[DissipativeState, list[TraceRecord]]:
    """Integrate the pairwise logistic transfer with fixed-step RK4.

    Phases advance freely, phi_k -= E_k dt / hbar (hbar taken from the basis
    when present, else 1). Returns the final state and a trace sampled every
    ``sample_interval`` steps, including t0 and the final step.
    """
    if rates.size != state.populations.size:
        raise ValueError(f"rate matrix size {rates.size} does not match {state.populations.size} levels")
    if dt <= 0:
        raise ValueError("dt must be positive")
    _check_rate_resolution(dt, rates.max_rate)
    hbar = state.basis.hbar if state.basis is not None else 1.0
    names = names or [f"p_{k}" for k in range(state.populations.size)]
    m = np.ascontiguousarray(transfer_matrix(rates.rates))
    p = state.populations.copy()
    t0 = state.t
    trace = [_population_record(t0, p, state.energies, names)]
    done = 0
    while done < n_steps:
        chunk = min(sample_interval, n_steps - done)
        status, steps = _kernels.population_steps(p, m, dt, NEGATIVE_POPULATION_TOL, chunk)
        if status == _kernels.NEGATIVE_POPULATION:
            raise IntegratorInstabilityError(
                f"population fell below -{NEGATIVE_POPULATION_TOL:g} at t={t0 + (done + steps + 1) * dt:g}; reduce dt"
            )
        done += chunk
        trace.append(_population_record(t0 + done * dt, p, state.energies, names))
    phases = state.phases - state.energies * (n_steps * dt) / hbar
    final = DissipativeState(p, phases, state.energies, t0 + n_steps * dt, state.basis)
    return final, trace


# ---------------------------------------------------------------------------
# Combined unitary + dissipative evolution
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NoiseSpec:
    """Zero-mean Gaussian jitter of standard deviation ``sigma_E`` on every
    level energy, redrawn each step before the rates are evaluated."""

    sigma_E: float
    seed: int = 0

    def __post_init__(self):
        if self.sigma_E < 0:
            raise ValueError("sigma_E must be non-negative")


@dataclass
class CombinedResult:
    final: DissipativeState
    trace: list[TraceRecord]


def evolve_combined(
    psi: WaveFunction,
    basis: EigenBasis,
    rates: DecayRateMatrix,
    dt: float,
    n_steps: int,
    noise: NoiseSpec | None = None,
    sample_interval: int = 1,
    gate_epsilon: float = DEFAULT_GATE_EPSILON,
    split_point: float | None = None,
    truncation_threshold: float = 0.01,
) -> CombinedResult:
    """Strang-split evolution: half phase step, RK4 population step, half
    phase step.

    Transfer is scaled each step by the free-packet gate
    ``g = min(1, |<-dV/dx>| / gate_epsilon)``, so a packet feeling no net
    force does not radiate. With ``noise`` set, rates are rebuilt every
    step from jittered energies. ``split_point`` (default: the grid
    midpoint) defines ``localization_left``, the probability with x below it.
    """
    if rates.size != basis.n_states:
        raise ValueError(f"rate matrix size {rates.size} does not match basis size {basis.n_states}")
    if dt <= 0:
        raise ValueError("dt must be positive")
    if gate_epsilon <= 0:
        raise ValueError("gate_epsilon must be positive")
    _check_rate_resolution(dt, rates.max_rate)
    state = project(psi, basis, truncation_threshold)

    x = basis.grid.x
    split = basis.grid.midpoint if split_point is None else split_point
    x_mat = basis.operator_matrix(x)
    left_mat = basis.operator_matrix((x < split).astype(float))
    force_mat = basis.force_matrix()
    energies = np.asarray(basis.energies, dtype=float)
    half_phase = np.exp(-0.5j * energies * dt / basis.hbar)
    rng = np.random.default_rng(noise.seed) if noise is not None and noise.sigma_E > 0 else None
    names = [f"p_{k}" for k in range(basis.n_states)]

    def record(t, c, p, gate):
        obs = {name: float(v) for name, v in zip(names, p)}
        obs["x_mean"] = float(np.real(np.vdot(c, x_mat @ c)))
        obs["E_mean"] = float(np.dot(p, energies))
        obs["localization_left"] = float(np.real(np.vdot(c, left_mat @ c)))
        obs["participation_ratio"] = participation_ratio(p)
        obs["force_mean"] = float(np.real(np.vdot(c, force_mat @ c)))
        obs["gate"] = float(gate)
        return TraceRecord(float(t), obs)

    def gate_of(c):
        f = abs(float(np.real(np.vdot(c, force_mat @ c))))
        return min(1.0, f / gate_epsilon)

    c = state.coeffs.copy()
    p = np.abs(c) ** 2
    trace = [record(0.0, c, p, gate_of(c))]
    transfer = transfer_matrix(rates.rates)
    if rates.dipole is not None and rates.constants is not None:
        k = rates.constants
        rate_coeff = k.rate_prefactor * rates.dipole**2 / k.hbar**3
    elif rng is not None:
        raise ValueError("energy noise needs a rate matrix built by decay_rates")
    else:
        rate_coeff = np.zeros_like(transfer)
    done = 0
    while done < n_steps:
        chunk = min(sample_interval, n_steps - done)
        if rng is not None:
            jitter = rng.normal(0.0, noise.sigma_E, size=(chunk, energies.size))
        else:
            jitter = np.zeros((1, energies.size))
        status, steps, gate = _kernels.combined_steps(
            c, p, energies, half_phase, transfer, force_mat, rate_coeff, jitter,
            rng is not None, dt, gate_epsilon, RATE_RESOLUTION_LIMIT,
            NEGATIVE_POPULATION_TOL, chunk,
        )
        if status == _kernels.NEGATIVE_POPULATION:
            raise IntegratorInstabilityError(
                f"population fell below -{NEGATIVE_POPULATION_TOL:g} at t={(done + steps + 1) * dt:g}; reduce dt"
            )
        if status == _kernels.RATE_UNRESOLVED:
            raise TimestepTooLargeError(
                f"dt={dt:g} does not resolve the noise-perturbed rates at t={(done + steps + 1) * dt:g}"
            )
        done += chunk
        trace.append(record(done * dt, c, p, gate))
    final = DissipativeState(p, np.angle(c), energies, n_steps * dt, basis)
    return CombinedResult(final, trace)
