"""
Tests for the command-line interface and the end-to-end experiment pipeline
"""
import json

import numpy as np
import pytest

from hamiltonet.cli import apply_overrides, main
from hamiltonet.error_utils import ConfigError
from hamiltonet.experiment import EXPERIMENT_FILE, ExperimentConfig
from hamiltonet.forecast import COMPARISON_FILE, REPORT_FILE, load_report
from hamiltonet.models import ModelKind, NNModel
from hamiltonet.orchestration import CHECKPOINT_FILE, RUN_TABLE_FILE, ExperimentPipeline
from hamiltonet.plotting import ENERGY_FILE, PHASE_FILE
from hamiltonet.registry import ModelRegistry
from hamiltonet.systems import load_dataset
from hamiltonet.systems.datasets import MANIFEST_FILE, TABLE_FILE

TINY = [
    '--set', 'dataset.n_traj=2',
    '--set', 'dataset.t_span=[0, 1]',
    '--set', 'dataset.substeps=2',
    '--set', 'models=[nn]',
    '--set', 'training.steps=20',
    '--set', 'training.batch_size=8',
    '--set', 'training.log_every=10',
    '--set', 'training.hidden={dynamics: [4], hamiltonian: [4], transform: [4]}',
    '--set', 'forecast.initial_conditions=[[1.0, 1.0], [1.5, 0.8]]',
    '--set', 'forecast.horizon=0.5',
    '--set', 'forecast.step=0.05',
]


@pytest.fixture
def broken_nn(monkeypatch):
    def nan_loss(self, batch):
        return float('nan'), np.zeros(self.parameter_count)
    monkeypatch.setattr(NNModel, 'loss_and_gradient', nan_loss)


def run_cli(*args):
    return main([str(a) for a in args])


class TestOverrides:
    def test_nested_assignment(self):
        data = apply_overrides({'training': {'steps': 10}}, ['training.steps=500', 'dataset.dt=0.05'])
        assert data == {'training': {'steps': 500}, 'dataset': {'dt': 0.05}}

    def test_malformed_assignment(self):
        with pytest.raises(ConfigError):
            apply_overrides({}, ['training.steps'])

    def test_scalar_is_not_a_section(self):
        with pytest.raises(ConfigError):
            apply_overrides({'name': 'lv'}, ['name.first=x'])


class TestCommands:
    def test_print_schema(self, capsys):
        assert main(['--print-schema']) == 0
        assert 'jacobian_policy:' in capsys.readouterr().out

    def test_no_command(self):
        assert main([]) == 1

    def test_invalid_config_exit_code(self, tmp_path):
        assert run_cli('generate', '--output', tmp_path, '--set', 'dataset.n_traj=0') == 2
        assert not (tmp_path / "dataset").exists()

    @pytest.mark.parametrize("command,override", [
        ('generate', 'dataset.dt=0.3'),
        ('forecast', 'forecast.step=0.03'),
    ])
    def test_partial_step_exit_code(self, tmp_path, command, override):
        extra = ['--oracle'] if command == 'forecast' else []
        assert run_cli(command, *extra, '--output', tmp_path, '--set', 'dataset.n_traj=1', '--set', override) == 2

    def test_missing_config_file(self, tmp_path):
        assert run_cli('generate', '--config', tmp_path / "absent.yml") == 2

    def test_generate_is_byte_identical(self, tmp_path):
        outputs = []
        for name in ('a', 'b'):
            assert run_cli('generate', '--output', tmp_path / name, *TINY) == 0
            directory = tmp_path / name / "dataset"
            outputs.append(((directory / TABLE_FILE).read_bytes(), (directory / MANIFEST_FILE).read_bytes()))
        assert outputs[0] == outputs[1]
        assert load_dataset(tmp_path / 'a' / "dataset").n_traj == 2
        assert (tmp_path / 'a' / EXPERIMENT_FILE).exists()

    def test_train_rejects_dimension_mismatch(self, tmp_path):
        assert run_cli('generate', '--output', tmp_path, *TINY) == 0
        code = run_cli('train', '--output', tmp_path, *TINY,
                       '--set', 'system={kind: double_pendulum}', '--set', 'forecast.initial_conditions=null')
        assert code == 2

    def test_train_then_evaluate(self, tmp_path, capsys):
        assert run_cli('generate', '--output', tmp_path, *TINY) == 0
        assert run_cli('train', '--output', tmp_path, *TINY) == 0
        train = tmp_path / "train" / "nn"
        assert (train / CHECKPOINT_FILE).exists()
        assert (train / RUN_TABLE_FILE).exists()
        assert (train / "training_log_r0.csv").exists()

        assert run_cli('evaluate', '--output', tmp_path, *TINY) == 0
        report = load_report(tmp_path / "forecast" / "nn")
        assert report.model_kind == 'nn'
        assert len(report.reports) == 2
        assert 'Median' in capsys.readouterr().out

        assert run_cli('models', '--output', tmp_path) == 0
        assert ModelRegistry(tmp_path / "registry").get_model_metadata('experiment_nn')['version'] == 1

    def test_oracle_forecast_and_plot(self, tmp_path):
        assert run_cli('forecast', '--oracle', '--output', tmp_path, *TINY) == 0
        directory = tmp_path / "forecast" / "oracle"
        assert (directory / REPORT_FILE).exists()
        (directory / PHASE_FILE).unlink()
        assert run_cli('plot', '--report', directory / REPORT_FILE, '--labels', 'prey,predator') == 0
        assert 'predator' in (directory / PHASE_FILE).read_text()

    def test_training_failure_exit_code(self, tmp_path, broken_nn):
        assert run_cli('generate', '--output', tmp_path, *TINY) == 0
        assert run_cli('train', '--output', tmp_path, *TINY) == 4


class TestPipeline:
    def _config(self, tmp_path, **overrides):
        data = {
            'name': 'tiny',
            'output_dir': str(tmp_path),
            'dataset': {'n_traj': 2, 't_span': [0, 1], 'substeps': 2},
            'models': ['nn', 'hnn'],
            'training': {'steps': 20, 'batch_size': 8, 'log_every': 10,
                         'hidden': {'dynamics': [4], 'hamiltonian': [4]}},
            'forecast': {'initial_conditions': [[1.0, 1.0], [1.5, 0.8]], 'horizon': 0.5, 'step': 0.05},
            **overrides,
        }
        return ExperimentConfig.from_dict(data)

    def test_all_stages_run(self, tmp_path):
        context = ExperimentPipeline(self._config(tmp_path), oracle=True).run()
        summary = context.get_summary()
        assert summary['failures'] == 0
        assert list(summary['stages']) == [
            'generate', 'evaluate:oracle', 'train:nn', 'evaluate:nn', 'train:hnn', 'evaluate:hnn', 'compare',
        ]
        ranking = json.loads((tmp_path / COMPARISON_FILE).read_text())['ranking']
        assert {row['model'] for row in ranking} == {'oracle', 'nn', 'hnn'}
        assert (tmp_path / "forecast" / "hnn" / ENERGY_FILE).exists()
        assert ExperimentConfig.load(tmp_path / EXPERIMENT_FILE) == self._config(tmp_path)

    def test_failed_kind_does_not_stop_the_others(self, tmp_path, broken_nn):
        context = ExperimentPipeline(self._config(tmp_path)).run()
        assert context.metadata['train:nn']['status'] == 'failed'
        assert context.metadata['evaluate:nn']['status'] == 'skipped'
        assert context.metadata['evaluate:hnn']['status'] == 'success'
        assert context.first_error.exit_code == 4

    def test_run_command_returns_first_error_code(self, tmp_path, broken_nn):
        assert run_cli('run', '--output', tmp_path, *TINY) == 4

    def test_run_command(self, tmp_path, capsys):
        assert run_cli('run', '--oracle', '--output', tmp_path, *TINY) == 0
        out = capsys.readouterr().out
        assert 'EXPERIMENT SUMMARY' in out
        assert 'Model ranking' in out
        assert ModelKind.NN.value in out
