"""Dissipation-free dynamics: grid wave functions, eigenbasis superpositions,
Crank-Nicolson propagation and Ehrenfest diagnostics."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np
from scipy.linalg import lapack

from .exceptions import (
    BasisTruncationError,
    InsufficientDataError,
    TimestepTooLargeError,
)
from .spectral import EigenBasis, Grid1D, PotentialSpec, build_hamiltonian

NORM_TOL = 1e-9
DEFAULT_TRUNCATION_THRESHOLD = 0.01
PHASE_RESOLUTION_LIMIT = 0.5


@dataclass(frozen=True)
class WaveFunction:
    grid: Grid1D
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.shape != (self.grid.n_points,):
            raise ValueError(f"amplitudes shape {amps.shape} does not match grid ({self.grid.n_points},)")
        object.__setattr__(self, "amplitudes", amps)
        if abs(self.norm() - 1.0) > NORM_TOL:
            raise ValueError(f"wave function norm {self.norm():.12g} differs from 1")

    @classmethod
    def normalized(cls, grid: Grid1D, amplitudes) -> "WaveFunction":
        amps = np.asarray(amplitudes, dtype=complex)
        n = np.sqrt(np.sum(np.abs(amps) ** 2) * grid.dx)
        if not n > 0:
            raise ValueError("cannot normalize a zero wave function")
        return cls(grid, amps / n)

    def norm(self) -> float:
        return float(np.sum(np.abs(self.amplitudes) ** 2) * self.grid.dx)

    def density(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def inner(self, other: "WaveFunction") -> complex:
        """<self|other> on the shared grid."""
        return complex(np.vdot(self.amplitudes, other.amplitudes) * self.grid.dx)

    def fidelity(self, other: "WaveFunction") -> float:
        return abs(self.inner(other))


def gaussian_packet(grid: Grid1D, center: float, width: float, k0: float = 0.0) -> WaveFunction:
    """Gaussian with |psi|^2 standard deviation ``width`` and mean wavenumber ``k0``."""
    x = grid.x
    amps = np.exp(-((x - center) ** 2) / (4.0 * width**2) + 1j * k0 * x)
    return WaveFunction.normalized(grid, amps)


@dataclass(frozen=True)
class SuperpositionState:
    """Coefficients a_k over an eigenbasis, sum |a_k|^2 = 1.

    ``residual`` is the norm that fell outside the basis when the state was
    obtained by projection (0 for states built directly).
    """

    basis: EigenBasis
    coeffs: np.ndarray
    residual: float = 0.0

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.shape != (self.basis.n_states,):
            raise ValueError(f"expected {self.basis.n_states} coefficients, got {c.shape}")
        object.__setattr__(self, "coeffs", c)
        total = float(np.sum(np.abs(c) ** 2))
        if abs(total - 1.0) > NORM_TOL:
            raise ValueError(f"coefficient weights sum to {total:.12g}, not 1")

    @classmethod
    def from_weights(cls, basis: EigenBasis, coeffs) -> "SuperpositionState":
        c = np.asarray(coeffs, dtype=complex)
        return cls(basis, c / np.sqrt(np.sum(np.abs(c) ** 2)))

    @property
    def populations(self) -> np.ndarray:
        return np.abs(self.coeffs) ** 2


def project(
    psi: WaveFunction,
    basis: EigenBasis,
    threshold: float = DEFAULT_TRUNCATION_THRESHOLD,
) -> SuperpositionState:
    """Expand ``psi`` in ``basis``; raise if more than ``threshold`` of the
    norm is lost to truncation."""
    if psi.grid != basis.grid:
        raise ValueError("wave function and basis live on different grids")
    a = basis.states.T @ psi.amplitudes * basis.grid.dx
    captured = float(np.sum(np.abs(a) ** 2))
    residual = max(0.0, psi.norm() - captured)
    if residual > threshold:
        raise BasisTruncationError(
            f"basis of {basis.n_states} states misses {residual:.3g} of the norm "
            f"(threshold {threshold:g})",
            residual,
        )
    return SuperpositionState(basis, a / np.sqrt(captured), residual)


def phased_coefficients(state: SuperpositionState, t: float) -> np.ndarray:
    b = state.basis
    return state.coeffs * np.exp(-1j * b.energies * t / b.hbar)


def reconstruct(state: SuperpositionState, t: float = 0.0) -> WaveFunction:
    """Psi(x, t) = sum_k a_k psi_k(x) exp(-i E_k t / hbar)."""
    amps = state.basis.states @ phased_coefficients(state, t)
    return WaveFunction.normalized(state.basis.grid, amps)


# ---------------------------------------------------------------------------
# Crank-Nicolson
# ---------------------------------------------------------------------------


class CrankNicolson:
    """Factorized Crank-Nicolson step (1 + iH dt/2hbar) psi' = (1 - iH dt/2hbar) psi."""

    def __init__(self, grid: Grid1D, potential: PotentialSpec, dt: float, mass=1.0, hbar=1.0):
        if not dt or not np.isfinite(dt):
            raise ValueError("dt must be finite and nonzero")
        self.grid = grid
        self.dt = dt
        self.hbar = hbar
        self.hamiltonian = build_hamiltonian(grid, potential, mass, hbar)
        h = self.hamiltonian
        z = 0.5j * dt / hbar
        self._diag_b = 1.0 - z * h.diagonal
        self._off_b = -z * h.off_diagonal
        dl, d, du, du2, ipiv, info = lapack.zgttrf(z * h.off_diagonal, 1.0 + z * h.diagonal, z * h.off_diagonal)
        if info != 0:
            raise np.linalg.LinAlgError(f"Crank-Nicolson factorization failed (info={info})")
        self._lu = (dl, d, du, du2, ipiv)

    def step(self, amps: np.ndarray) -> np.ndarray:
        rhs = self._diag_b * amps
        rhs[:-1] += self._off_b * amps[1:]
        rhs[1:] += self._off_b * amps[:-1]
        out, info = lapack.zgttrs(*self._lu, rhs)
        return out

    def energy_spread(self, amps: np.ndarray) -> float:
        """Standard deviation of the grid energy in state ``amps``."""
        hpsi = self.hamiltonian.matvec(amps)
        dx = self.grid.dx
        norm = np.sum(np.abs(amps) ** 2) * dx
        e1 = np.real(np.vdot(amps, hpsi)) * dx / norm
        e2 = np.sum(np.abs(hpsi) ** 2) * dx / norm
        return float(np.sqrt(max(e2 - e1 * e1, 0.0)))


def _check_phase_resolution(cn: CrankNicolson, amps: np.ndarray):
    # Twice the energy standard deviation equals the level spacing for a
    # two-level mix and bounds the occupied spread from below in general.
    spread = 2.0 * cn.energy_spread(amps)
    ratio = abs(cn.dt) * spread / cn.hbar
    if ratio >= PHASE_RESOLUTION_LIMIT:
        raise TimestepTooLargeError(
            f"dt={cn.dt:g} does not resolve the occupied energy spread {spread:.4g}: "
            f"dt*dE/hbar = {ratio:.3g} >= {PHASE_RESOLUTION_LIMIT}"
        )


def propagate_trajectory(
    psi: WaveFunction,
    potential: PotentialSpec,
    dt: float,
    n_steps: int,
    mass: float = 1.0,
    hbar: float = 1.0,
    store_every: int = 1,
) -> Iterator[WaveFunction]:
    """Yield the initial state and every ``store_every``-th Crank-Nicolson step.

    ``dt`` may be negative (backward propagation).
    """
    cn = CrankNicolson(psi.grid, potential, dt, mass, hbar)
    _check_phase_resolution(cn, psi.amplitudes)

    def snapshots():
        amps = psi.amplitudes.copy()
        yield psi
        for n in range(1, n_steps + 1):
            amps = cn.step(amps)
            if n % store_every == 0 or n == n_steps:
                yield WaveFunction(psi.grid, amps.copy())

    return snapshots()


def propagate_grid(
    psi: WaveFunction,
    potential: PotentialSpec,
    dt: float,
    n_steps: int,
    mass: float = 1.0,
    hbar: float = 1.0,
) -> WaveFunction:
    """Advance ``psi`` by ``n_steps`` Crank-Nicolson steps of size ``dt``."""
    cn = CrankNicolson(psi.grid, potential, dt, mass, hbar)
    _check_phase_resolution(cn, psi.amplitudes)
    amps = psi.amplitudes.copy()
    for _ in range(n_steps):
        amps = cn.step(amps)
    return WaveFunction(psi.grid, amps)


# ---------------------------------------------------------------------------
# Observables
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Observables:
    x_mean: float
    p_mean: float
    E_mean: float
    E_variance: float


def _grid_position_momentum(psi: WaveFunction, hbar: float):
    a = psi.amplitudes
    dx = psi.grid.dx
    x_mean = float(np.sum(np.abs(a) ** 2 * psi.grid.x) * dx)
    padded = np.concatenate([[0.0], a, [0.0]])
    deriv = (padded[2:] - padded[:-2]) / (2.0 * dx)
    p_mean = float(np.real(np.vdot(a, -1j * hbar * deriv)) * dx)
    return x_mean, p_mean


def expectation_observables(
    obj,
    potential: PotentialSpec | None = None,
    *,
    t: float = 0.0,
    mass: float = 1.0,
    hbar: float = 1.0,
) -> Observables:
    """<x>, <p>, <E> and Var(E) of a superposition or grid wave function.

    For a :class:`SuperpositionState` the energy moments come from the
    eigenbasis weights, <E> = sum |a_k|^2 E_k; position and momentum are
    taken from the reconstruction at time ``t``. A bare
    :class:`WaveFunction` needs ``potential`` for its energy moments.
    """
    if isinstance(obj, SuperpositionState):
        b = obj.basis
        w = obj.populations
        e_mean = float(np.sum(w * b.energies))
        e_var = float(np.sum(w * b.energies**2) - e_mean**2)
        x_mean, p_mean = _grid_position_momentum(reconstruct(obj, t), b.hbar)
        return Observables(x_mean, p_mean, e_mean, max(e_var, 0.0))
    if not isinstance(obj, WaveFunction):
        raise TypeError(f"expected SuperpositionState or WaveFunction, got {type(obj).__name__}")
    x_mean, p_mean = _grid_position_momentum(obj, hbar)
    if potential is None:
        return Observables(x_mean, p_mean, float("nan"), float("nan"))
    h = build_hamiltonian(obj.grid, potential, mass, hbar)
    hpsi = h.matvec(obj.amplitudes)
    dx = obj.grid.dx
    e_mean = float(np.real(np.vdot(obj.amplitudes, hpsi)) * dx)
    e2 = float(np.sum(np.abs(hpsi) ** 2) * dx)
    return Observables(x_mean, p_mean, e_mean, max(e2 - e_mean**2, 0.0))


def mean_force(psi: WaveFunction, potential: PotentialSpec, mass: float = 1.0) -> float:
    """<-dV/dx> on the grid."""
    f = -potential.gradient(psi.grid.x, mass)
    return float(np.sum(psi.density() * f) * psi.grid.dx)


def ehrenfest_residual(
    trajectory: Iterable[WaveFunction],
    potential: PotentialSpec,
    dt: float,
    mass: float = 1.0,
) -> np.ndarray:
    """|m d^2<x>/dt^2 - <-dV/dx>| at every interior snapshot.

    The second derivative is the central difference over snapshots spaced
    ``dt`` apart.
    """
    xs, forces = [], []
    for psi in trajectory:
        xs.append(float(np.sum(psi.density() * psi.grid.x) * psi.grid.dx))
        forces.append(mean_force(psi, potential, mass))
    if len(xs) < 3:
        raise InsufficientDataError(f"need at least 3 snapshots, got {len(xs)}")
    xs = np.asarray(xs)
    forces = np.asarray(forces)
    accel = (xs[2:] - 2.0 * xs[1:-1] + xs[:-2]) / dt**2
    return np.abs(mass * accel - forces[1:-1])
