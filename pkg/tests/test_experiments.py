import math

import numpy as np
import pytest

from rrcollapse.exceptions import ConfigError
from rrcollapse.experiments import (
    DEFAULT_PARAMETERS,
    EXPERIMENT_NAMES,
    ExperimentConfig,
    LocalizationMetrics,
    classify_path,
    run_cascade,
    run_experiment,
    run_fermi_decay,
    run_two_well,
    tail_rate_fit,
    two_well_setup,
)
from rrcollapse.trace import column, observable_names, validate_trace

CASCADE_CASES = {
    "cascade": {"p1_initial": 1e-4, "p2_initial": 1e-2, "A21": 1.0, "A31": 1.0, "A32": 1.0},
    "direct": {"p1_initial": 1e-2, "p2_initial": 1e-4, "A21": 1.0, "A31": 10.0, "A32": 0.1},
    "mixed": {"p1_initial": 1e-3, "p2_initial": 1e-3, "A21": 1.0, "A31": 1.0, "A32": 1.0},
}


class TestConfig:
    def test_defaults_complete(self):
        for name in EXPERIMENT_NAMES:
            cfg = ExperimentConfig(name)
            assert dict(cfg.parameters) == DEFAULT_PARAMETERS[name]
            assert cfg.sample_interval >= 1

    def test_unknown_parameter_rejected(self):
        with pytest.raises(ConfigError, match="unknown parameter"):
            ExperimentConfig("fermi_decay", {"B": 1.0})

    def test_unknown_experiment_lists_names(self):
        with pytest.raises(ConfigError, match="fermi_decay"):
            ExperimentConfig("bogus")

    def test_type_checks(self):
        with pytest.raises(ConfigError):
            ExperimentConfig("fermi_decay", {"A": "fast"})
        with pytest.raises(ConfigError):
            ExperimentConfig("two_well_localization", {"n_states": 3.5})
        with pytest.raises(ConfigError):
            ExperimentConfig("fermi_decay", {"A": True})
        assert ExperimentConfig("fermi_decay", {"A": 2}).parameters["A"] == 2.0
        assert isinstance(ExperimentConfig("two_well_localization", {"n_states": 16.0}).parameters["n_states"], int)

    def test_seed_range(self):
        ExperimentConfig("fermi_decay", seed=2**64 - 1)
        with pytest.raises(ConfigError):
            ExperimentConfig("fermi_decay", seed=-1)
        with pytest.raises(ConfigError):
            ExperimentConfig("fermi_decay", seed=2**64)

    def test_sample_interval(self):
        with pytest.raises(ConfigError):
            ExperimentConfig("fermi_decay", sample_interval=0)

    def test_to_dict_round_trip(self):
        cfg = ExperimentConfig("three_level_cascade", {"A21": 2.0}, seed=7, sample_interval=5)
        d = cfg.to_dict()
        assert ExperimentConfig(d["experiment"], d["parameters"], d["seed"], d["sample_interval"]) == cfg


class TestFermiDecay:
    def test_turning_point_and_tail(self):
        res = run_fermi_decay(ExperimentConfig("fermi_decay"))
        assert res.summary["turning_point_t"] == pytest.approx(math.log(99), abs=0.01)
        assert res.summary["tail_rate_fit"] == pytest.approx(-1.0, rel=0.01)
        assert res.summary["max_abs_error"] < 1e-8
        validate_trace(res.trace)

    def test_turning_point_grows_as_seed_shrinks(self):
        times = [
            run_fermi_decay(ExperimentConfig("fermi_decay", {"p2_initial": 1 - q})).summary["turning_point_t"]
            for q in (1e-1, 1e-2, 1e-3)
        ]
        assert times[0] < times[1] < times[2]

    def test_no_crossing_reports_none(self):
        res = run_fermi_decay(ExperimentConfig("fermi_decay", {"p2_initial": 0.999, "t_max": 2.0}))
        assert res.summary["turning_point_t"] is None

    def test_tail_fit_on_pure_exponential(self):
        t = np.linspace(0, 10, 101)
        assert tail_rate_fit(t, 3 * np.exp(-0.7 * t)) == pytest.approx(-0.7, rel=1e-12)


class TestCascade:
    @pytest.mark.parametrize("expected", sorted(CASCADE_CASES))
    def test_classification(self, expected):
        res = run_cascade(ExperimentConfig("three_level_cascade", CASCADE_CASES[expected]))
        assert res.summary["path"] == expected

    @pytest.mark.parametrize("expected", sorted(CASCADE_CASES))
    def test_stable_under_dt_halving(self, expected):
        res = run_cascade(ExperimentConfig("three_level_cascade", {**CASCADE_CASES[expected], "dt": 0.0025}))
        assert res.summary["path"] == expected

    def test_reference_peaks(self):
        peaks = {
            k: run_cascade(ExperimentConfig("three_level_cascade", v)).summary["p2_max"]
            for k, v in CASCADE_CASES.items()
        }
        assert peaks["cascade"] == pytest.approx(0.8198, abs=1e-3)
        assert peaks["mixed"] == pytest.approx(0.1718, abs=1e-3)
        assert peaks["direct"] == pytest.approx(1.0136e-4, rel=1e-3)

    def test_classify_thresholds(self):
        assert classify_path(0.6, 0.9) == "cascade"
        assert classify_path(0.05, 0.9) == "direct"
        assert classify_path(0.05, 0.0) == "mixed"
        assert classify_path(0.3, 0.9) == "mixed"
        assert classify_path(0.3, 0.9, cascade_threshold=0.2) == "cascade"

    def test_bad_populations(self):
        with pytest.raises(ConfigError):
            run_cascade(ExperimentConfig("three_level_cascade", {"p1_initial": 0.7, "p2_initial": 0.7}))


@pytest.fixture(scope="module")
def delta_sweep():
    return {
        d: run_two_well(ExperimentConfig("two_well_localization", {"delta": d}))
        for d in (0.5, 0.75, 1.0)
    }


class TestTwoWell:
    def test_default_localizes_in_deeper_well(self, delta_sweep):
        s = delta_sweep[0.5].summary
        assert s["final_dominant_state"] == 0
        assert s["final_max_population"] > 0.99
        assert s["final_prob_left"] > 0.99
        assert s["ground_state_prob_left"] > 0.99
        assert s["time_to_localization"] is not None

    def test_monotone_in_asymmetry(self, delta_sweep):
        times = [delta_sweep[d].summary["time_to_localization"] for d in (0.5, 0.75, 1.0)]
        assert times[0] >= times[1] >= times[2]

    def test_trace_columns(self, delta_sweep):
        res = delta_sweep[0.5]
        names = observable_names(res.trace)
        for col in ("p_0", "p_31", "x_mean", "E_mean", "localization_left", "participation_ratio"):
            assert col in names
        validate_trace(res.trace)
        assert np.all(np.diff(column(res.trace, "E_mean")) <= 1e-12)

    def test_symmetric_stays_delocalized(self):
        res = run_two_well(ExperimentConfig("two_well_localization", {"delta": 0.0, "t_max": 5e4}))
        assert column(res.trace, "participation_ratio").min() > 1.5
        assert res.summary["time_to_localization"] is None

    def test_zero_rates_freeze_metrics(self):
        res = run_two_well(ExperimentConfig("two_well_localization", {"rate_scale": 0.0, "t_max": 5e3}))
        s = res.summary
        assert s["final_participation_ratio"] == s["initial_participation_ratio"]
        assert s["final_dominant_state"] == s["initial_dominant_state"]
        first = [res.trace[0][f"p_{k}"] for k in range(32)]
        last = [res.trace[-1][f"p_{k}"] for k in range(32)]
        assert first == last

    def test_seed_irrelevant_without_noise(self):
        prm = {"t_max": 2e3}
        a = run_two_well(ExperimentConfig("two_well_localization", prm, seed=1))
        b = run_two_well(ExperimentConfig("two_well_localization", prm, seed=99))
        assert [r.observables for r in a.trace] == [r.observables for r in b.trace]

    def test_noise_depends_on_seed_and_is_reproducible(self):
        prm = {"t_max": 2e3, "sigma_E": 0.02}
        a = run_two_well(ExperimentConfig("two_well_localization", prm, seed=1))
        b = run_two_well(ExperimentConfig("two_well_localization", prm, seed=1))
        c = run_two_well(ExperimentConfig("two_well_localization", prm, seed=2))
        assert [r.observables for r in a.trace] == [r.observables for r in b.trace]
        assert [r.observables for r in a.trace] != [r.observables for r in c.trace]

    def test_rate_tuning(self):
        setup = two_well_setup(DEFAULT_PARAMETERS["two_well_localization"])
        assert setup.rates.max_rate == pytest.approx(0.1, rel=1e-12)

    def test_wide_separation_blocks_the_far_ground_state(self):
        # With wells 8 apart the B-well ground state is dark: its dipole to
        # the A-well ground state is ~1e-9, so it cannot empty into it.
        prm = {**DEFAULT_PARAMETERS["two_well_localization"],
               "separation": 8.0, "x_min": -12.0, "x_max": 12.0, "n_points": 600}
        setup = two_well_setup(prm)
        assert setup.rates.rates[1, 0] < 1e-12 * setup.rates.max_rate

    def test_noise_with_rate_scale_rejected(self):
        with pytest.raises(ConfigError):
            run_two_well(ExperimentConfig("two_well_localization", {"rate_scale": 0.5, "sigma_E": 0.1}))


class TestEhrenfestExperiment:
    @pytest.mark.parametrize("potential", ["harmonic", "free"])
    def test_residual_small(self, potential):
        res = run_experiment(ExperimentConfig("ehrenfest_check", {"potential": potential, "n_steps": 300}))
        assert res.summary["max_residual"] < 1e-6

    def test_unknown_potential(self):
        with pytest.raises(ConfigError):
            run_experiment(ExperimentConfig("ehrenfest_check", {"potential": "quartic"}))


class TestClassicalDemos:
    def test_runaway_rate(self):
        res = run_experiment(ExperimentConfig("runaway_demo"))
        assert res.summary["growth_rate_fit"] == pytest.approx(1.0, abs=1e-4)

    def test_runaway_other_tau(self):
        res = run_experiment(ExperimentConfig("runaway_demo", {"tau": 0.5, "dt": 0.005, "t_max": 10.0}))
        assert res.summary["growth_rate_fit"] == pytest.approx(2.0, abs=1e-4)

    def test_zero_force_flat(self):
        res = run_experiment(ExperimentConfig("runaway_demo", {"a0": 0.0}))
        assert np.all(column(res.trace, "a_class") == 0.0)
        assert np.all(column(res.trace, "radiated") == 0.0)

    def test_preacceleration(self):
        res = run_experiment(ExperimentConfig("preacceleration_demo"))
        assert res.summary["preacceleration_ratio"] == pytest.approx(math.exp(-1), abs=1e-9)
        a = column(res.trace, "a_reduced")
        t = column(res.trace, "t")
        assert np.all(a[t < 0] > 0)
        assert np.all(a[t >= 0] == 1.0)

    def test_preacceleration_bad_window(self):
        with pytest.raises(ConfigError):
            run_experiment(ExperimentConfig("preacceleration_demo", {"t_on": 20.0}))


class TestLocalizationMetrics:
    def test_from_populations(self):
        m = LocalizationMetrics.from_populations([0.25, 0.75], 0.4)
        assert m.dominant_state == 1
        assert m.participation_ratio == pytest.approx(1.6)

    def test_invariants(self):
        with pytest.raises(ValueError):
            LocalizationMetrics(1.5, 1.0, 0)
        with pytest.raises(ValueError):
            LocalizationMetrics(0.5, 0.5, 0)


@pytest.mark.parametrize("name", [n for n in EXPERIMENT_NAMES if n != "two_well_localization"])
def test_deterministic(name):
    a = run_experiment(ExperimentConfig(name))
    b = run_experiment(ExperimentConfig(name))
    assert [(r.t, r.observables) for r in a.trace] == [(r.t, r.observables) for r in b.trace]
