"""
Tests for rollouts, energy drift metrics and forecast reports
"""
import numpy as np
import pandas as pd
import pytest

from hamiltonet.error_utils import DomainError, EnergyScaleError, ForecastDivergenceError
from hamiltonet.forecast import (
    SERIES_FILE,
    EvaluationReport,
    SystemOracle,
    energy_drift,
    evaluate,
    forecast,
    load_report,
    rank_models,
    rollout,
    safe_energy_drift,
    save_report,
    summarize,
    trajectory_mse,
)
from hamiltonet.models import GHNNModel, HNNModel
from hamiltonet.networks import MlpParams
from hamiltonet.systems import get_system, integrate


@pytest.fixture
def lv_system(lv_spec):
    return get_system(lv_spec)


def zero_field(x):
    return np.zeros_like(x)


def exploding_field(x):
    return 10.0 * x


def starving_field(x):
    """Drives populations through zero"""
    return np.full_like(x, -5.0)


def broken_field(x):
    raise DomainError("cannot evaluate")


class TestEnergyDrift:
    def test_small_series(self):
        drift = energy_drift([-2.0, -2.0, -2.2])
        assert drift['relative_std'] == pytest.approx(0.0456, abs=1e-4)
        assert drift['max_relative_deviation'] == pytest.approx(0.1)

    def test_constant_series(self):
        assert energy_drift(np.full(10, 3.5)) == {'relative_std': 0.0, 'max_relative_deviation': 0.0}

    def test_invariant_to_sign_and_scale(self, rng):
        E = 1.0 + 0.01 * rng.normal(size=50)
        base = energy_drift(E)
        for transformed in (-E, 7.5 * E, -0.02 * E):
            for key, value in energy_drift(transformed).items():
                assert value == pytest.approx(base[key], rel=1e-12)

    def test_degenerate_scale(self):
        with pytest.raises(EnergyScaleError):
            energy_drift([0.0, 0.0, 0.0])
        with pytest.raises(EnergyScaleError):
            energy_drift([0.0, 1.0, -1.0])

    def test_zero_start_with_nonzero_mean(self):
        drift = energy_drift([0.0, 1.0, 2.0])
        assert drift['relative_std'] == pytest.approx(np.std([0.0, 1.0, 2.0]))
        assert np.isnan(drift['max_relative_deviation'])

    def test_empty_series(self):
        with pytest.raises(ValueError):
            energy_drift([])

    def test_safe_variant_gives_nan(self):
        assert all(np.isnan(v) for v in safe_energy_drift(None).values())
        assert all(np.isnan(v) for v in safe_energy_drift(np.zeros(4)).values())


class TestTrajectoryMse:
    def test_summed_over_components(self):
        assert trajectory_mse(np.zeros((5, 2)), np.ones((5, 2))) == pytest.approx(2.0)

    def test_truncated_to_overlap(self):
        assert trajectory_mse(np.zeros((3, 2)), np.ones((10, 2))) == pytest.approx(2.0)

    def test_early_horizon(self):
        times = np.arange(11.0)
        forecast_states = np.zeros((11, 1))
        forecast_states[6:] = 3.0
        assert trajectory_mse(forecast_states, np.zeros((11, 1)), times, t_max=5.0) == 0.0
        assert trajectory_mse(forecast_states, np.zeros((11, 1)), times) > 0.0


class TestRollout:
    def test_oracle_matches_reference_integration(self, lv_system):
        r0 = np.array([0.5, 1.5])
        run = rollout(SystemOracle(lv_system), r0, 2.0, 0.01)
        _, expected = integrate(lv_system.vector_field, r0, (0.0, 2.0), 0.01, substeps=1)
        assert not run.diverged
        np.testing.assert_allclose(run.states, expected, atol=1e-8)

    def test_zero_field_is_constant(self):
        run = rollout(zero_field, np.array([0.3, -0.4]), 1.0, 0.1)
        assert len(run) == 11
        np.testing.assert_array_equal(run.states, np.tile([0.3, -0.4], (11, 1)))
        np.testing.assert_allclose(run.times, np.linspace(0, 1, 11))

    def test_divergence_is_flagged(self):
        run = rollout(exploding_field, np.array([1.0, 1.0]), 5.0, 0.01, divergence_threshold=1e6)
        assert run.diverged
        assert "exceeded" in run.reason
        assert len(run) < 501
        assert np.all(np.abs(run.states) <= 1e6)

    def test_field_failure_at_start_raises(self):
        with pytest.raises(DomainError):
            rollout(broken_field, np.array([1.0, 1.0]), 1.0, 0.1)

    def test_non_positive_step(self):
        with pytest.raises(ValueError):
            rollout(zero_field, np.array([1.0]), 1.0, 0.0)


class TestForecast:
    def test_oracle_forecast_has_full_series(self, lv_system):
        report = forecast(SystemOracle(lv_system), lv_system, np.array([0.5, 1.5]), 20.0, 0.01)
        assert report.model_kind == 'oracle'
        assert len(report.times) == 2001
        assert report.metrics['trajectory_mse'] == 0.0
        assert report.metrics['relative_std'] < 1e-8
        assert np.isnan(report.metrics['learned_relative_std'])

    def test_leaving_the_domain_counts_as_divergence(self, lv_system):
        report = forecast(starving_field, lv_system, np.array([1.0, 1.0]), 1.0, 0.01)
        assert report.diverged
        assert report.model_kind == 'custom'
        assert np.all(report.forecast > 0)
        assert len(report.forecast) == len(report.reference) == len(report.true_energy)

    def test_failure_at_initial_condition(self, lv_system):
        report = forecast(broken_field, lv_system, np.array([1.0, 1.0]), 1.0, 0.1)
        assert report.diverged
        assert report.divergence_reason.startswith("failed at initial condition")
        assert len(report.times) == 1

    def test_initial_condition_outside_domain(self, lv_system):
        with pytest.raises(DomainError):
            forecast(zero_field, lv_system, np.array([-1.0, 1.0]), 1.0, 0.1)

    def test_relative_energy_deviation(self, lv_system):
        report = forecast(zero_field, lv_system, np.array([0.7, 1.2]), 1.0, 0.1)
        np.testing.assert_array_equal(report.relative_energy_deviation, 0.0)


class TestEvaluate:
    def test_reports_are_ordered_and_summarized(self, lv_system):
        ics = np.array([[0.5, 1.5], [1.2, 0.8]])
        ev = evaluate([SystemOracle(lv_system), zero_field], lv_system, ics, 1.0, 0.1)
        assert [(r.model_index, r.ic_index) for r in ev.reports] == [(0, 0), (0, 1), (1, 0), (1, 1)]
        assert ev.n_models == 2
        assert ev.n_diverged == 0
        assert ev.summary['trajectory_mse']['count'] == 4
        assert ev.median('relative_std') >= 0.0

    def test_worker_count_does_not_change_results(self, lv_system):
        ics = np.array([[0.5, 1.5], [1.2, 0.8], [2.0, 2.0]])
        serial = evaluate(SystemOracle(lv_system), lv_system, ics, 1.0, 0.1, n_jobs=1)
        parallel = evaluate(SystemOracle(lv_system), lv_system, ics, 1.0, 0.1, n_jobs=2)
        for a, b in zip(serial.reports, parallel.reports):
            np.testing.assert_array_equal(a.forecast, b.forecast)

    def test_all_diverged(self, lv_system):
        with pytest.raises(ForecastDivergenceError):
            evaluate(exploding_field, lv_system, np.array([[1.0, 1.0]]), 5.0, 0.01)

    def test_no_initial_conditions(self, lv_system):
        with pytest.raises(ValueError):
            evaluate(zero_field, lv_system, np.zeros((0, 2)), 1.0, 0.1)

    def test_summary_ignores_nan(self, lv_system):
        reports = [
            forecast(zero_field, lv_system, np.array([0.5, 1.5]), 1.0, 0.1),
            forecast(broken_field, lv_system, np.array([0.5, 1.5]), 1.0, 0.1, ic_index=1),
        ]
        reports[1].metrics['trajectory_mse'] = float('nan')
        assert summarize(reports)['trajectory_mse']['count'] == 1

    def test_save_and_load(self, lv_system, tmp_path):
        ev = evaluate(SystemOracle(lv_system), lv_system, np.array([[0.5, 1.5], [1.2, 0.8]]), 1.0, 0.1)
        save_report(ev, tmp_path)
        loaded = load_report(tmp_path)
        assert loaded.model_kind == ev.model_kind
        assert loaded.summary['trajectory_mse'] == ev.summary['trajectory_mse']
        np.testing.assert_array_equal(loaded.reports[1].forecast, ev.reports[1].forecast)
        series = pd.read_csv(tmp_path / SERIES_FILE)
        assert list(series.columns) == [
            'model_index', 'ic', 't', 'r0', 'r1', 'ref0', 'ref1', 'true_energy', 'learned_energy'
        ]
        assert len(series) == 22

    def test_missing_report(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_report(tmp_path)


def _evaluation(name, median):
    summary = {'relative_std': {'median': median, 'iqr': 0.0}}
    return EvaluationReport(name, {}, 1.0, 0.1, [], summary)


class TestRanking:
    def test_smaller_median_ranks_first_and_nan_last(self):
        rows = rank_models({
            'nn': _evaluation('nn', 0.1),
            'broken': _evaluation('broken', float('nan')),
            'ghnn': _evaluation('ghnn', 0.001),
        })
        assert [row['model'] for row in rows] == ['ghnn', 'nn', 'broken']
        assert [row['rank'] for row in rows] == [1, 2, 3]
        assert rows[0]['median_relative_std'] == 0.001

    def test_unknown_metric(self):
        with pytest.raises(ValueError):
            rank_models({'nn': _evaluation('nn', 0.1)}, metric='accuracy')


def bowl_hamiltonian():
    """H(R) = sum_i tanh(R_i - 1) + tanh(-R_i - 1); closed level sets around the origin"""
    U = np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]])
    return MlpParams((2, 4, 1), [U, np.ones((1, 4))], [np.full(4, -1.0), np.zeros(1)])


def near_identity_transform():
    return MlpParams((2, 2, 2), [0.3 * np.eye(2), np.eye(2) / 0.3], [np.zeros(2), np.zeros(2)])


@pytest.mark.parametrize("model", [
    HNNModel(bowl_hamiltonian()),
    GHNNModel(near_identity_transform(), bowl_hamiltonian()),
], ids=['hnn', 'ghnn'])
def test_learned_hamiltonian_is_conserved_along_rollout(model):
    run = rollout(model, np.array([0.5, 0.3]), 10.0, 1e-3)
    assert not run.diverged
    H = model.learned_hamiltonian(run.states)
    assert np.max(np.abs(H - H[0])) / abs(H[0]) < 1e-5
