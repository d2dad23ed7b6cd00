"""Finite-difference discretization of 1-D potentials and the stationary
eigenproblem.

The Hamiltonian is the 3-point central-difference operator on the interior
points of ``[x_min, x_max]`` with Dirichlet walls, so it is real symmetric
tridiagonal and LAPACK's tridiagonal eigensolvers apply directly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Union

import numpy as np
from scipy.linalg import LinAlgError, eigh_tridiagonal

from .exceptions import GridTooSmallError, InvalidPotentialError, SolverFailureError

DEFAULT_N_STATES = 32

# samples below this fraction of max|psi| are ignored for nodes and signs
_TAIL_CUTOFF = 1e-13


@dataclass(frozen=True)
class Grid1D:
    """Uniform grid of interior points, endpoints excluded (psi = 0 there)."""

    x_min: float
    x_max: float
    n_points: int

    def __post_init__(self):
        if not (np.isfinite(self.x_min) and np.isfinite(self.x_max)):
            raise ValueError("grid bounds must be finite")
        if self.x_max <= self.x_min:
            raise ValueError(f"x_max ({self.x_max}) must exceed x_min ({self.x_min})")
        if int(self.n_points) != self.n_points or self.n_points < 3:
            raise GridTooSmallError(f"grid needs at least 3 interior points, got {self.n_points}")

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / (self.n_points + 1)

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.x_min + self.x_max)

    @cached_property
    def x(self) -> np.ndarray:
        # Offsets from the midpoint are exact multiples of dx/2, so a grid
        # centred on 0 is exactly antisymmetric and even potentials stay even.
        i = np.arange(self.n_points, dtype=float)
        x = self.midpoint + (i - 0.5 * (self.n_points - 1)) * self.dx
        x.flags.writeable = False
        return x


# ---------------------------------------------------------------------------
# Potentials
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Harmonic:
    """V(x) = m omega^2 (x - center)^2 / 2."""

    omega: float = 1.0
    center: float = 0.0

    def __post_init__(self):
        if not self.omega > 0:
            raise InvalidPotentialError("harmonic omega must be positive")

    def values(self, x, mass=1.0):
        return 0.5 * mass * self.omega**2 * (np.asarray(x) - self.center) ** 2

    def gradient(self, x, mass=1.0):
        return mass * self.omega**2 * (np.asarray(x) - self.center)


@dataclass(frozen=True)
class Box:
    """Flat interior; the confining walls are the Dirichlet boundaries."""

    def values(self, x, mass=1.0):
        return np.zeros_like(np.asarray(x, dtype=float))

    def gradient(self, x, mass=1.0):
        return np.zeros_like(np.asarray(x, dtype=float))


@dataclass(frozen=True)
class DoubleWell:
    """Two attractive Gaussian wells at ``center_a < center_b``.

    V(x) = -depth_a g(x - center_a) - depth_b g(x - center_b) with
    g(u) = exp(-u^2 / (2 width^2)).
    """

    center_a: float = -4.0
    center_b: float = 4.0
    depth_a: float = 10.0
    depth_b: float = 10.0
    width: float = 1.0

    def __post_init__(self):
        if not self.width > 0:
            raise InvalidPotentialError("double_well width must be positive")
        if self.depth_a < 0 or self.depth_b < 0:
            raise InvalidPotentialError("double_well depths must be non-negative")
        if not self.center_a < self.center_b:
            raise InvalidPotentialError("double_well requires center_a < center_b")

    @property
    def separation_midpoint(self) -> float:
        return 0.5 * (self.center_a + self.center_b)

    def _wells(self, x):
        x = np.asarray(x, dtype=float)
        ua = x - self.center_a
        ub = x - self.center_b
        s2 = self.width**2
        return ua, ub, np.exp(-0.5 * ua * ua / s2), np.exp(-0.5 * ub * ub / s2)

    def values(self, x, mass=1.0):
        _, _, ga, gb = self._wells(x)
        return -self.depth_a * ga - self.depth_b * gb

    def gradient(self, x, mass=1.0):
        ua, ub, ga, gb = self._wells(x)
        s2 = self.width**2
        return self.depth_a * ua / s2 * ga + self.depth_b * ub / s2 * gb


@dataclass(frozen=True)
class Tabulated:
    """Potential given pointwise on the interior grid.

    The gradient is taken with second-order finite differences unless
    supplied explicitly.
    """

    samples: np.ndarray
    grad_samples: np.ndarray | None = field(default=None)

    def __post_init__(self):
        object.__setattr__(self, "samples", np.asarray(self.samples, dtype=float))
        if self.grad_samples is not None:
            object.__setattr__(self, "grad_samples", np.asarray(self.grad_samples, dtype=float))

    def _check(self, x):
        x = np.asarray(x)
        if x.shape != self.samples.shape:
            raise InvalidPotentialError(
                f"tabulated potential has {self.samples.size} samples, grid has {x.size} points"
            )
        return x

    def values(self, x, mass=1.0):
        self._check(x)
        return self.samples.copy()

    def gradient(self, x, mass=1.0):
        x = self._check(x)
        if self.grad_samples is not None:
            return self.grad_samples.copy()
        return np.gradient(self.samples, x, edge_order=2)


PotentialSpec = Union[Harmonic, Box, DoubleWell, Tabulated]


def potential_from_dict(spec: dict) -> PotentialSpec:
    """Build a potential from ``{"kind": ..., **params}``."""
    spec = dict(spec)
    kind = spec.pop("kind", None)
    kinds = {"harmonic": Harmonic, "box": Box, "double_well": DoubleWell, "tabulated": Tabulated}
    if kind not in kinds:
        raise InvalidPotentialError(f"unknown potential kind {kind!r}; expected one of {sorted(kinds)}")
    try:
        return kinds[kind](**spec)
    except TypeError as exc:
        raise InvalidPotentialError(f"bad parameters for {kind} potential: {exc}") from None


def potential_on_grid(grid: Grid1D, potential: PotentialSpec, mass: float = 1.0) -> np.ndarray:
    v = np.asarray(potential.values(grid.x, mass), dtype=float)
    if v.shape != (grid.n_points,):
        raise InvalidPotentialError(f"potential has shape {v.shape}, expected ({grid.n_points},)")
    if not np.all(np.isfinite(v)):
        bad = int(np.flatnonzero(~np.isfinite(v))[0])
        raise InvalidPotentialError(f"non-finite potential value at grid index {bad}")
    return v


# ---------------------------------------------------------------------------
# Hamiltonian and eigenproblem
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TridiagonalHamiltonian:
    diagonal: np.ndarray
    off_diagonal: np.ndarray

    @property
    def size(self) -> int:
        return self.diagonal.size

    def matvec(self, v: np.ndarray) -> np.ndarray:
        out = self.diagonal * v
        out[:-1] += self.off_diagonal * v[1:]
        out[1:] += self.off_diagonal * v[:-1]
        return out

    def to_dense(self) -> np.ndarray:
        return (
            np.diag(self.diagonal)
            + np.diag(self.off_diagonal, 1)
            + np.diag(self.off_diagonal, -1)
        )

    def norm_bound(self) -> float:
        return float(np.max(np.abs(self.diagonal)) + 2.0 * np.max(np.abs(self.off_diagonal)))


def build_hamiltonian(
    grid: Grid1D, potential: PotentialSpec, mass: float = 1.0, hbar: float = 1.0
) -> TridiagonalHamiltonian:
    """Return the 3-point finite-difference Hamiltonian.

    Diagonal entries are ``hbar^2/(m dx^2) + V(x_i)``, off-diagonals
    ``-hbar^2/(2 m dx^2)``.
    """
    if not (mass > 0 and hbar > 0):
        raise ValueError("mass and hbar must be positive")
    if grid.n_points < 3:
        raise GridTooSmallError(f"grid needs at least 3 interior points, got {grid.n_points}")
    v = potential_on_grid(grid, potential, mass)
    kinetic = hbar**2 / (mass * grid.dx**2)
    diagonal = kinetic + v
    off = np.full(grid.n_points - 1, -0.5 * kinetic)
    return TridiagonalHamiltonian(diagonal, off)


@dataclass(frozen=True)
class EigenBasis:
    """Lowest eigenpairs of a discretized Hamiltonian.

    ``states[:, k]`` is psi_k sampled on ``grid.x``, normalized so that
    ``sum(psi_j * psi_k) * dx == delta_jk``.
    """

    grid: Grid1D
    energies: np.ndarray
    states: np.ndarray
    potential: PotentialSpec
    mass: float = 1.0
    hbar: float = 1.0

    @property
    def n_states(self) -> int:
        return self.energies.size

    def overlap(self) -> np.ndarray:
        return self.states.T @ self.states * self.grid.dx

    def operator_matrix(self, values: np.ndarray) -> np.ndarray:
        """Matrix elements of a multiplicative operator sampled on the grid."""
        values = np.asarray(values, dtype=float)
        m = (self.states * values[:, None]).T @ self.states * self.grid.dx
        m = 0.5 * (m + m.T)
        # Selection rule: with exact mirror parity of states and operator,
        # odd-parity elements vanish identically; rounding would leave ~1e-17.
        pv = _parity(values)
        if pv:
            ps = np.array([_parity(self.states[:, k]) for k in range(self.n_states)])
            m[np.outer(ps, ps) * pv == -1] = 0.0
        return m

    def force_matrix(self) -> np.ndarray:
        """Matrix elements of -dV/dx."""
        return self.operator_matrix(-self.potential.gradient(self.grid.x, self.mass))

    def node_counts(self) -> np.ndarray:
        return np.array([count_nodes(self.states[:, k]) for k in range(self.n_states)])


def _parity(v: np.ndarray) -> int:
    """+1 / -1 for exactly even / odd samples about the array centre, else 0."""
    if np.array_equal(v, v[::-1]):
        return 1
    if np.array_equal(v, -v[::-1]):
        return -1
    return 0


def count_nodes(psi: np.ndarray) -> int:
    """Interior sign changes of ``psi``, ignoring numerically-zero tail samples."""
    psi = np.asarray(psi)
    big = psi[np.abs(psi) > _TAIL_CUTOFF * np.max(np.abs(psi))]
    return int(np.count_nonzero(np.signbit(big[1:]) != np.signbit(big[:-1])))


def _fix_sign(v: np.ndarray) -> np.ndarray:
    first = np.flatnonzero(np.abs(v) > 1e-6 * np.max(np.abs(v)))[0]
    return -v if v[first] < 0 else v


def _tridiagonal_lowest(d, e, count):
    count = min(count, d.size)
    try:
        if d.size == 1:
            return d.copy(), np.ones((1, 1))
        w, v = eigh_tridiagonal(
            d, e, select="i", select_range=(0, count - 1), lapack_driver="stemr"
        )
    except LinAlgError as exc:
        raise SolverFailureError(f"tridiagonal eigensolver failed: {exc}", info=str(exc)) from exc
    return w, v


def _mirror_symmetric(v: np.ndarray) -> bool:
    scale = max(1.0, float(np.max(np.abs(v))))
    return bool(np.max(np.abs(v - v[::-1])) <= 1e-13 * scale)


def _parity_blocks(diagonal, off, count):
    """Solve a mirror-symmetric tridiagonal problem in even/odd subspaces.

    Degenerate doublets of symmetric double wells then come out as clean
    parity states instead of arbitrary rotations within the doublet.
    """
    n = diagonal.size
    m = n // 2
    e = off[0]
    vecs, vals = [], []
    if n % 2 == 0:
        for parity in (1.0, -1.0):
            d = diagonal[:m].copy()
            d[-1] += parity * e
            w, u = _tridiagonal_lowest(d, off[: m - 1], count)
            full = np.vstack([u, parity * u[::-1]]) / np.sqrt(2.0)
            vals.append(w)
            vecs.append(full)
    else:
        d = diagonal[: m + 1].copy()
        o = off[:m].copy()
        o[-1] *= np.sqrt(2.0)
        w, u = _tridiagonal_lowest(d, o, count)
        half = u[:m] / np.sqrt(2.0)
        full = np.vstack([half, u[m : m + 1], half[::-1]])
        vals.append(w)
        vecs.append(full)
        if m > 0:
            w, u = _tridiagonal_lowest(diagonal[:m], off[: m - 1], count)
            half = u / np.sqrt(2.0)
            full = np.vstack([half, np.zeros((1, u.shape[1])), -half[::-1]])
            vals.append(w)
            vecs.append(full)
    return np.concatenate(vals), np.hstack(vecs)


def solve_eigenproblem(
    grid: Grid1D,
    potential: PotentialSpec,
    n_states: int = DEFAULT_N_STATES,
    mass: float = 1.0,
    hbar: float = 1.0,
) -> EigenBasis:
    """Lowest ``n_states`` eigenpairs of the finite-difference Hamiltonian.

    Energies ascend; near-ties (within a few ulps of the operator norm) are
    ordered by node count. Each state is scaled to unit grid norm and its
    first significant sample from the left is positive.
    """
    if int(n_states) != n_states or n_states < 1:
        raise ValueError(f"n_states must be a positive integer, got {n_states}")
    if n_states > grid.n_points:
        raise ValueError(f"n_states ({n_states}) exceeds grid points ({grid.n_points})")
    ham = build_hamiltonian(grid, potential, mass, hbar)
    v = ham.diagonal - hbar**2 / (mass * grid.dx**2)

    if _mirror_symmetric(v):
        diag = 0.5 * (ham.diagonal + ham.diagonal[::-1])
        energies, vectors = _parity_blocks(diag, ham.off_diagonal, n_states)
    else:
        energies, vectors = _tridiagonal_lowest(ham.diagonal, ham.off_diagonal, n_states)

    vectors = vectors / np.linalg.norm(vectors, axis=0)
    vectors = np.column_stack([_fix_sign(vectors[:, k]) for k in range(vectors.shape[1])])
    nodes = np.array([count_nodes(vectors[:, k]) for k in range(vectors.shape[1])])

    order = np.argsort(energies, kind="stable")
    tie = 64 * np.finfo(float).eps * ham.norm_bound()
    ordered = []
    cluster = [order[0]]
    for idx in order[1:]:
        if energies[idx] - energies[cluster[-1]] <= tie:
            cluster.append(idx)
        else:
            ordered.extend(sorted(cluster, key=lambda j: nodes[j]))
            cluster = [idx]
    ordered.extend(sorted(cluster, key=lambda j: nodes[j]))
    ordered = np.array(ordered[:n_states])

    states = vectors[:, ordered] / np.sqrt(grid.dx)
    states.flags.writeable = False
    energies = energies[ordered].copy()
    energies.flags.writeable = False
    return EigenBasis(grid, energies, states, potential, float(mass), float(hbar))


def dipole_matrix(basis: EigenBasis) -> np.ndarray:
    """Position matrix elements d_jk = sum_i psi_j x_i psi_k dx (symmetric)."""
    d = basis.operator_matrix(basis.grid.x)
    if not np.all(np.isfinite(d)):
        raise ValueError("dipole matrix has non-finite entries")
    return d
