"""
Tests for the optimizers, the training loop and the restart protocol
"""
import numpy as np
import pytest

from conftest import random_mlp
from hamiltonet.error_utils import ConfigError, TrainingExhaustedError
from hamiltonet.models import GHNNModel, ModelKind, NNModel
from hamiltonet.networks import MlpParams
from hamiltonet.systems import SystemKind, SystemSpec, canonicalize_dataset, generate_dataset
from hamiltonet.training import (
    SGD,
    Adam,
    RunStatus,
    TrainConfig,
    clip_by_norm,
    multi_restart,
    restart_config,
    select_survivors,
    split_trajectories,
    train,
)


@pytest.fixture
def broken_nn(monkeypatch):
    """Every NN loss evaluation reports a non-finite value"""
    def nan_loss(self, batch):
        return float('nan'), np.zeros(self.parameter_count)
    monkeypatch.setattr(NNModel, 'loss_and_gradient', nan_loss)


class TestOptimizers:
    def test_clip_by_norm(self):
        v = np.array([3.0, 4.0])
        np.testing.assert_allclose(clip_by_norm(v, 1.0), [0.6, 0.8])
        np.testing.assert_array_equal(clip_by_norm(v, 10.0), v)
        np.testing.assert_array_equal(clip_by_norm(v, None), v)

    def test_sgd_step(self):
        out = SGD(0.1).step(np.array([1.0, 1.0]), np.array([2.0, -1.0]))
        np.testing.assert_allclose(out, [0.8, 1.1])

    @pytest.mark.parametrize("optimizer_class", [SGD, Adam])
    def test_clipped_update_is_bounded(self, optimizer_class):
        optimizer = optimizer_class(learning_rate=0.01, clip_norm=10.0)
        params = np.zeros(5)
        for _ in range(5):
            new = optimizer.step(params, np.full(5, 1e8))
            assert np.linalg.norm(new - params) <= 0.01 * 10.0 + 1e-12
            params = new

    def test_first_adam_step_has_learning_rate_magnitude(self):
        out = Adam(learning_rate=0.1).step(np.zeros(3), np.array([5.0, -0.2, 1e-3]))
        np.testing.assert_allclose(np.abs(out), 0.1, rtol=1e-4)

    def test_non_finite_gradient_is_refused(self):
        with pytest.raises(ValueError):
            Adam().step(np.zeros(2), np.array([np.nan, 1.0]))

    def test_non_positive_learning_rate(self):
        with pytest.raises(ValueError):
            SGD(0.0)


class TestTrainConfig:
    @pytest.mark.parametrize("field,value", [
        ('learning_rate', 0.0),
        ('batch_size', 0),
        ('steps', 0),
        ('restarts', 0),
        ('kappa', 1.0),
        ('validation_fraction', 1.0),
        ('n_jobs', 0),
    ])
    def test_invalid_values_name_the_field(self, field, value):
        with pytest.raises(ConfigError, match=f"training.{field}"):
            TrainConfig(**{field: value})

    def test_unknown_optimizer(self):
        with pytest.raises(ConfigError, match="training.optimizer"):
            TrainConfig(optimizer='rmsprop')

    def test_unknown_field(self):
        with pytest.raises(ConfigError):
            TrainConfig.from_dict({'epochs': 3})

    def test_round_trip(self):
        config = TrainConfig(optimizer='sgd', restarts=4, hidden={'dynamics': [8]},
                             jacobian_policy={'mode': 'pseudo_inverse', 'epsilon': 1e-6})
        assert TrainConfig.from_dict(config.to_dict()) == config

    def test_clip_defaults_per_family(self):
        config = TrainConfig()
        assert config.effective_clip_norm(ModelKind.NN) is None
        assert config.effective_clip_norm(ModelKind.GHNN) == 10.0
        assert TrainConfig(clip_norm=0).effective_clip_norm(ModelKind.HNN) is None

    def test_restart_seeds_and_jitter(self):
        config = TrainConfig(seed=5, learning_rate=1e-3, lr_jitter=0.5)
        first, again = restart_config(config, 2), restart_config(config, 2)
        assert first.seed == 7
        assert first.learning_rate == again.learning_rate
        assert np.exp(-0.5) * 1e-3 <= first.learning_rate <= np.exp(0.5) * 1e-3
        assert restart_config(TrainConfig(seed=5), 2).learning_rate == 1e-3


class TestSurvivors:
    def test_outlier_is_discarded(self):
        statuses = [RunStatus.COMPLETED] * 4
        assert select_survivors(statuses, [1.0, 1.1, 0.9, 10.0], kappa=3.0) == [0, 1, 2]

    def test_identical_runs_all_survive(self):
        assert select_survivors([RunStatus.COMPLETED] * 3, [0.5, 0.5, 0.5], kappa=3.0) == [0, 1, 2]

    def test_aborted_runs_are_excluded(self):
        statuses = [RunStatus.COMPLETED, RunStatus.NAN_ABORT, RunStatus.COMPLETED, RunStatus.SOLVER_FAILURE]
        losses = [1.0, float('nan'), 1.2, float('nan')]
        assert select_survivors(statuses, losses, kappa=3.0) == [0, 2]

    def test_no_completed_runs(self):
        assert select_survivors([RunStatus.NAN_ABORT], [float('nan')], kappa=3.0) == []

    @pytest.mark.parametrize("seed", range(5))
    def test_survivors_are_within_kappa_of_the_median(self, seed):
        rng = np.random.default_rng(seed)
        losses = list(np.exp(rng.normal(scale=2.0, size=9)))
        survivors = select_survivors([RunStatus.COMPLETED] * 9, losses, kappa=3.0)
        median = np.median(losses)
        assert survivors
        assert all(losses[i] <= 3.0 * median for i in survivors)
        assert all(losses[i] > 3.0 * median for i in set(range(9)) - set(survivors))
        scaled = [42.0 * loss for loss in losses]
        assert select_survivors([RunStatus.COMPLETED] * 9, scaled, kappa=3.0) == survivors


class TestTrain:
    @pytest.mark.parametrize("kind", list(ModelKind))
    def test_same_seed_gives_identical_history(self, kind, lv_dataset, tiny_train_config):
        dataset = canonicalize_dataset(lv_dataset) if kind != ModelKind.NN else lv_dataset
        first = train(kind, dataset, tiny_train_config)
        second = train(kind, dataset, tiny_train_config)
        assert first.status == RunStatus.COMPLETED
        assert [r.loss for r in first.history] == [r.loss for r in second.history]
        assert [r.grad_norm for r in first.history] == [r.grad_norm for r in second.history]
        np.testing.assert_array_equal(first.model.flat_parameters(), second.model.flat_parameters())
        assert first.final_loss == second.final_loss

    def test_logs_every_interval_and_final_step(self, lv_dataset, tiny_train_config):
        run = train(ModelKind.NN, lv_dataset, tiny_train_config)
        assert [r.step for r in run.history] == [10, 20, 30]
        assert list(run.history_frame().columns) == ['step', 'loss', 'grad_norm', 'wall_time', 'validation_loss']

    def test_loss_decreases(self, lv_dataset, tiny_train_config):
        config = TrainConfig.from_dict({**tiny_train_config.to_dict(), 'steps': 200, 'log_every': 50})
        run = train(ModelKind.NN, lv_dataset, config)
        assert run.final_loss < run.history[0].loss

    def test_validation_split_holds_out_whole_trajectories(self, lv_dataset):
        train_set, val_set = split_trajectories(lv_dataset, 0.5, seed=0)
        train_ids = {t.traj_id for t in train_set.trajectories}
        val_ids = {t.traj_id for t in val_set.trajectories}
        assert train_ids.isdisjoint(val_ids)
        assert train_ids | val_ids == {t.traj_id for t in lv_dataset.trajectories}
        same, none = split_trajectories(lv_dataset, 0.0, seed=0)
        assert same is lv_dataset and none is None

    def test_validation_loss_is_recorded(self, lv_dataset, tiny_train_config):
        config = TrainConfig.from_dict({**tiny_train_config.to_dict(), 'validation_fraction': 0.5})
        run = train(ModelKind.NN, lv_dataset, config)
        assert all(np.isfinite(r.validation_loss) for r in run.history)

    def test_non_finite_loss_aborts(self, lv_dataset, tiny_train_config, broken_nn):
        run = train(ModelKind.NN, lv_dataset, tiny_train_config)
        assert run.status == RunStatus.NAN_ABORT
        assert np.isnan(run.final_loss)
        assert "step 1" in run.message

    def test_singular_transform_is_a_solver_failure(self, lv_dataset, tiny_train_config):
        dataset = canonicalize_dataset(lv_dataset)
        model = GHNNModel(MlpParams.linear([[1.0, 0.0], [1.0, 0.0]]), random_mlp((2, 4, 1)))
        run = train(ModelKind.GHNN, dataset, tiny_train_config, model=model)
        assert run.status == RunStatus.SOLVER_FAILURE

    def test_dimension_mismatch(self, lv_dataset, tiny_train_config):
        model = NNModel(random_mlp((4, 3, 4)))
        with pytest.raises(ValueError):
            train(ModelKind.NN, lv_dataset, tiny_train_config, model=model)

    @pytest.mark.slow
    def test_zero_targets_are_fitted(self, tiny_train_config):
        spec = SystemSpec(SystemKind.LOTKA_VOLTERRA)
        dataset = generate_dataset(spec, 1, t_span=(0.0, 2.0), initial_conditions=[[1.0, 1.0]], substeps=1)
        config = TrainConfig.from_dict({**tiny_train_config.to_dict(), 'steps': 3000, 'learning_rate': 1e-3})
        assert train(ModelKind.NN, dataset, config).final_loss < 1e-6


class TestMultiRestart:
    def test_restart_count_and_seeds(self, lv_dataset, tiny_train_config):
        config = TrainConfig.from_dict({**tiny_train_config.to_dict(), 'restarts': 3, 'seed': 4})
        result = multi_restart(ModelKind.NN, lv_dataset, config)
        assert [r.seed for r in result.runs] == [4, 5, 6]
        assert [r.restart_index for r in result.runs] == [0, 1, 2]
        assert result.best.final_loss == min(r.final_loss for r in result.surviving_runs)
        table = result.run_table()
        assert [row['survivor'] for row in table] == [i in result.survivors for i in range(3)]

    def test_worker_count_does_not_change_results(self, lv_dataset, tiny_train_config):
        config = TrainConfig.from_dict({**tiny_train_config.to_dict(), 'restarts': 2})
        serial = multi_restart(ModelKind.NN, lv_dataset, config, n_jobs=1)
        parallel = multi_restart(ModelKind.NN, lv_dataset, config, n_jobs=2)
        assert [r.final_loss for r in serial.runs] == [r.final_loss for r in parallel.runs]

    def test_all_runs_failing_is_exhaustion(self, lv_dataset, tiny_train_config, broken_nn):
        config = TrainConfig.from_dict({**tiny_train_config.to_dict(), 'restarts': 2})
        with pytest.raises(TrainingExhaustedError) as info:
            multi_restart(ModelKind.NN, lv_dataset, config, n_jobs=1)
        assert len(info.value.causes) == 2
        assert all("nan_abort" in cause for cause in info.value.causes)
