import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rrcollapse.classical_rr import (
    ALParams,
    ALState,
    PulseForce,
    StepForce,
    TabulatedForce,
    TailTruncationWarning,
    ZeroForce,
    energy_audit,
    fit_growth_rate,
    force_from_dict,
    integrate_direct,
    integrate_reduced,
    radiation_time,
    reduced_trajectory,
)
from rrcollapse.exceptions import RunawayOverflowError, TimestepTooLargeError


class TestDirect:
    def test_newtonian_limit_at_rest(self):
        traj = integrate_direct(ALState(0.0, 1.0, 2.0, 0.0), ALParams(), 0.01, 100)
        assert np.all(traj.a == 0.0)
        assert traj.x[-1] == pytest.approx(3.0)

    def test_runaway_value_at_tau(self):
        traj = integrate_direct(ALState(0.0, 0.0, 0.0, 1.0), ALParams(tau=1.0), 0.01, 100)
        assert traj.a[-1] == pytest.approx(math.e, rel=1e-6)

    def test_homogeneous_growth_over_20_tau(self):
        tau = 0.5
        traj = integrate_direct(ALState(0.0, 0.0, 0.0, 1.0), ALParams(tau=tau), tau / 100, 2000)
        rel = np.abs(traj.a / np.exp(traj.t / tau) - 1)
        assert rel.max() < 1e-6

    def test_growth_rate_fit(self):
        traj = integrate_direct(ALState(0.0, 0.0, 0.0, 1.0), ALParams(tau=2.0), 0.02, 1000)
        assert fit_growth_rate(traj.t, traj.a) == pytest.approx(0.5, abs=1e-4)

    def test_step_force_runaway_flagged(self):
        params = ALParams(force=StepForce(1.0, 0.0))
        traj = integrate_direct(ALState(0.0, 0.0, 0.0, 0.0), params, 0.01, 4000)
        assert traj.runaway
        assert 25 < traj.runaway_time < 35

    def test_timestep_guard(self):
        with pytest.raises(TimestepTooLargeError):
            integrate_direct(ALState(0, 0, 0, 1), ALParams(tau=1.0), 0.1, 10)

    def test_overflow_carries_last_state(self):
        with pytest.raises(RunawayOverflowError) as info:
            integrate_direct(ALState(0.0, 0.0, 0.0, 1.0), ALParams(tau=1e-3), 1e-5, 200000)
        assert np.isfinite(info.value.last_state.a)

    def test_direct_tracks_reduced_for_smooth_decaying_force(self):
        # Gaussian pulse; start on the runaway-free solution and follow it.
        t = np.linspace(-10, 30, 4001)
        force = TabulatedForce(t, np.exp(-0.5 * t**2))
        params = ALParams(tau=1.0, force=force)
        grid = np.arange(-8.0, 4.0 + 1e-9, 0.01)
        reduced = integrate_reduced(params, grid)
        start = ALState(grid[0], 0.0, 0.0, float(reduced[0]))
        direct = integrate_direct(start, params, 0.01, grid.size - 1)
        peak = np.abs(reduced).max()
        assert np.max(np.abs(direct.a - reduced)) < 1e-4 * peak


class TestReduced:
    def test_zero_force_identically_zero(self):
        a = integrate_reduced(ALParams(force=ZeroForce()), np.linspace(-5, 5, 101))
        assert np.all(a == 0.0)

    def test_step_preacceleration(self):
        params = ALParams(m_eff=2.0, tau=0.5, force=StepForce(3.0, 1.0))
        a = integrate_reduced(params, np.array([0.5, 1.0, 1.5, 2.0]))
        assert a[0] / a[-1] == pytest.approx(math.exp(-1), abs=1e-12)
        assert a[1] == 1.5 and a[2] == 1.5 and a[3] == 1.5

    def test_pulse_closed_form_matches_quadrature(self):
        pulse = PulseForce(2.0, 0.0, 3.0)
        tab = TabulatedForce(np.array([-1.0, 0.0, 0.0 + 1e-12, 3.0, 3.0 + 1e-12, 50.0]),
                             np.array([0.0, 0.0, 2.0, 2.0, 0.0, 0.0]))
        t = np.linspace(-3, 5, 17)
        closed = integrate_reduced(ALParams(force=pulse), t)
        quad = integrate_reduced(ALParams(force=tab), t)
        assert np.max(np.abs(closed - quad)) < 1e-9

    def test_newtonian_limit(self):
        # a = F + tau F' + ..., so the relative error is tau |F'/F| = tau |t|
        # for a unit Gaussian: below 1e-3 on |t| < 1.
        knots = np.linspace(-10, 10, 2001)
        force = TabulatedForce(knots, np.exp(-0.5 * knots**2))
        t = np.linspace(-0.9, 0.9, 19)
        a = integrate_reduced(ALParams(tau=1e-3, force=force), t)
        assert np.max(np.abs(a / force(t) - 1)) < 1e-3

    def test_non_decaying_table_warns(self):
        force = TabulatedForce(np.array([0.0, 1.0]), np.array([1.0, 1.0]))
        with pytest.warns(TailTruncationWarning):
            integrate_reduced(ALParams(force=force), np.array([0.0, 0.5]))

    def test_non_uniform_grid_rejected(self):
        with pytest.raises(ValueError):
            integrate_reduced(ALParams(), np.array([0.0, 1.0, 3.0]))


class TestEnergyAudit:
    def test_zero_motion_radiates_nothing(self):
        traj = integrate_direct(ALState(0, 0, 0, 0), ALParams(), 0.01, 50)
        assert np.all(energy_audit(traj, ALParams()).radiated == 0)

    def test_pulse_reduced_closure(self):
        params = ALParams(tau=0.01, force=PulseForce(1.0, 0.0, 5.0))
        traj = reduced_trajectory(params, np.arange(-1.0, 10.0 + 1e-9, 1e-3))
        audit = energy_audit(traj, params)
        assert audit.radiated[-1] > 0
        assert abs(audit.drift[-1]) < 0.01 * audit.work[-1]

    def test_radiated_quadratic_in_acceleration(self):
        params = ALParams(tau=0.3)
        traj = reduced_trajectory(ALParams(tau=0.3, force=PulseForce(1.0, 0.0, 2.0)), np.linspace(-2, 4, 601))
        doubled = type(traj)(traj.t, traj.x, traj.v, 2 * traj.a)
        r1 = energy_audit(traj, params).radiated
        r2 = energy_audit(doubled, params).radiated
        assert np.allclose(r2, 4 * r1, rtol=1e-14)


class TestParams:
    def test_radiation_time(self):
        assert radiation_time(1.0, 1.0, 10.0) == pytest.approx(2 / 3000)

    def test_invalid(self):
        with pytest.raises(ValueError):
            ALParams(m_eff=0.0)
        with pytest.raises(ValueError):
            ALParams(tau=-1.0)
        with pytest.raises(ValueError):
            StepForce(1.0, math.inf)
        with pytest.raises(ValueError):
            PulseForce(1.0, 2.0, 1.0)

    def test_force_from_dict(self):
        assert force_from_dict({"kind": "step", "F0": 2.0}) == StepForce(2.0)
        with pytest.raises(ValueError):
            force_from_dict({"kind": "sawtooth"})


@settings(max_examples=30, deadline=None)
@given(
    st.floats(min_value=0.1, max_value=10.0),
    st.floats(min_value=0.01, max_value=5.0),
    st.floats(min_value=-5.0, max_value=5.0).filter(lambda f: abs(f) > 1e-3),
)
def test_preacceleration_ratio_property(m, tau, f0):
    params = ALParams(m, tau, StepForce(f0, 0.0))
    a = integrate_reduced(params, np.array([-tau, 40 * tau]))
    assert a[0] / a[1] == pytest.approx(math.exp(-1), abs=1e-9)
    assert a[1] == pytest.approx(f0 / m, rel=1e-15)
