"""Compiled inner loop of the combined unitary/dissipative evolution.

Long two-center runs take ~10^6 steps over a 32-level basis; at that size
the per-step cost is interpreter overhead, so the step loop lives here.
"""

import numpy as np
from numba import njit

OK = 0
NEGATIVE_POPULATION = 1
RATE_UNRESOLVED = 2

# Populations this small can never regrow within a run (ln(1e200)/rate is
# astronomically long) but slow every flop once they turn subnormal.
POPULATION_FLOOR = 1e-200


@njit(cache=True)
def _derivative(p, m, g, out):
    n = p.size
    for j in range(n):
        s = 0.0
        for k in range(n):
            s += m[j, k] * p[k]
        out[j] = g * p[j] * s


@njit(cache=True)
def _rk4(p, m, g, dt, k1, k2, k3, k4, tmp):
    n = p.size
    _derivative(p, m, g, k1)
    for j in range(n):
        tmp[j] = p[j] + 0.5 * dt * k1[j]
    _derivative(tmp, m, g, k2)
    for j in range(n):
        tmp[j] = p[j] + 0.5 * dt * k2[j]
    _derivative(tmp, m, g, k3)
    for j in range(n):
        tmp[j] = p[j] + dt * k3[j]
    _derivative(tmp, m, g, k4)
    out = np.empty(n)
    for j in range(n):
        out[j] = p[j] + dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j])
    return out


@njit(cache=True)
def _mean_force(c, f):
    n = c.size
    total = 0.0
    for j in range(n):
        s = 0.0 + 0.0j
        for k in range(n):
            s += f[j, k] * c[k]
        total += (c[j].conjugate() * s).real
    return total


@njit(cache=True)
def _jittered_transfer(energies, jitter_row, rate_coeff, m):
    """Rebuild A^T - A from perturbed energies; returns the largest rate."""
    n = energies.size
    top = 0.0
    for j in range(n):
        for k in range(n):
            m[j, k] = 0.0
    for j in range(n):
        ej = energies[j] + jitter_row[j]
        for k in range(n):
            gap = ej - (energies[k] + jitter_row[k])
            if gap > 0.0:
                a = rate_coeff[j, k] * gap * gap * gap
                m[k, j] += a
                m[j, k] -= a
                if a > top:
                    top = a
    return top


@njit(cache=True)
def combined_steps(
    c,
    p,
    energies,
    half_phase,
    transfer,
    force_mat,
    rate_coeff,
    jitter,
    use_noise,
    dt,
    gate_epsilon,
    rate_limit,
    negative_tol,
    n_steps,
):
    """Advance ``n_steps`` Strang-split steps in place.

    Returns (status, steps_done, last_gate).
    """
    n = p.size
    k1 = np.empty(n)
    k2 = np.empty(n)
    k3 = np.empty(n)
    k4 = np.empty(n)
    tmp = np.empty(n)
    m_noisy = np.empty((n, n))
    gate = 0.0
    for step in range(n_steps):
        for j in range(n):
            c[j] *= half_phase[j]
        gate = min(1.0, abs(_mean_force(c, force_mat)) / gate_epsilon)
        m = transfer
        if use_noise:
            top = _jittered_transfer(energies, jitter[step], rate_coeff, m_noisy)
            if dt * top >= rate_limit:
                return RATE_UNRESOLVED, step, gate
            m = m_noisy
        if gate > 0.0:
            new = _rk4(p, m, gate, dt, k1, k2, k3, k4, tmp)
            for j in range(n):
                if new[j] < -negative_tol:
                    return NEGATIVE_POPULATION, step, gate
            for j in range(n):
                if abs(new[j]) < POPULATION_FLOOR:
                    new[j] = 0.0
                pn = new[j] if new[j] > 0.0 else 0.0
                if p[j] > 0.0:
                    c[j] *= np.sqrt(pn / p[j])
                else:
                    c[j] = np.sqrt(pn)
                p[j] = new[j]
        for j in range(n):
            c[j] *= half_phase[j]
    return OK, n_steps, gate


@njit(cache=True)
def population_steps(p, transfer, dt, negative_tol, n_steps):
    """``n_steps`` plain RK4 steps of dp/dt = p * (transfer @ p), in place.

    Returns (status, steps_done).
    """
    n = p.size
    k1 = np.empty(n)
    k2 = np.empty(n)
    k3 = np.empty(n)
    k4 = np.empty(n)
    tmp = np.empty(n)
    for step in range(n_steps):
        new = _rk4(p, transfer, 1.0, dt, k1, k2, k3, k4, tmp)
        for j in range(n):
            if new[j] < -negative_tol:
                return NEGATIVE_POPULATION, step
        for j in range(n):
            p[j] = new[j]
    return OK, n_steps
