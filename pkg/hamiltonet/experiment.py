"""
Experiment Configuration - YAML description of one reproducible experiment

A stored experiment.yml reruns the experiment: every random consumer draws from seeds
held in this document.
"""
import logging
import os
import re
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Callable, Dict, List, Mapping, Optional, Tuple

import numpy as np
import yaml

from hamiltonet.config import Config
from hamiltonet.error_utils import ConfigError
from hamiltonet.forecast import DEFAULT_STEP, DIVERGENCE_THRESHOLD
from hamiltonet.io_utils import PathLike, atomic_write_text
from hamiltonet.models import JacobianInversePolicy, ModelKind
from hamiltonet.systems import BenchmarkSystem, SystemKind, SystemSpec
from hamiltonet.systems.datasets import DERIVATIVE_MODES
from hamiltonet.systems.integrators import is_whole_steps
from hamiltonet.training import TrainConfig

logger = logging.getLogger(__name__)

EXPERIMENT_FILE = "experiment.yml"

# ${VAR_NAME} or ${VAR_NAME:-default}
ENV_PATTERN = re.compile(r'\$\{([^}:]+)(?::(-)?([^}]*))?\}')

SCHEMA = """\
# hamiltonet experiment configuration (YAML)
# String values may reference environment variables as ${VAR} or ${VAR:-default}.
name: str                         # experiment name, default output subdirectory
output_dir: str | null            # default: $HAMILTONET_OUTPUT_ROOT/<name>
system:
  kind: lotka_volterra | lotka_volterra_canonical | elastic_pendulum | double_pendulum
  parameters: {name: float > 0}   # LV alpha beta gamma delta; EP m g k l0; DP m1 m2 l1 l2 g
dataset:
  n_traj: int >= 1                # default 20
  t_span: [float, float]          # default [0, 10]
  dt: float > 0                   # sampling interval, default 0.1
  sigma: float >= 0               # Gaussian noise std, default 0
  seed: int                       # default 0
  derivative_mode: exact | finite_difference
  substeps: int >= 1              # RK4 substeps per sample, default 100
models: [nn | hnn | ghnn, ...]    # default [nn, hnn, ghnn]
training:
  optimizer: sgd | adam           # default adam
  learning_rate: float > 0        # default 1e-3
  batch_size: int >= 1            # default 256
  steps: int >= 1                 # default 20000
  seed: int                       # restart i uses seed + i
  restarts: int >= 1              # default 1
  kappa: float > 1                # outlier factor, default 3
  clip_norm: float >= 0 | null    # null: off for nn, 10 for hnn/ghnn; 0 disables
  log_every: int >= 1
  validation_fraction: float in [0, 1)
  lr_jitter: float >= 0           # restart learning rate times exp(U(-j, j))
  n_jobs: int != 0                # parallel restarts (joblib)
  hidden: {network_name: [int, ...]}  # dynamics, hamiltonian, transform
jacobian_policy:
  mode: exact_solve | pseudo_inverse
  epsilon: float in [0, 1e-3)     # default 1e-10
  failure_action: error | skip_sample
  through_inverse: bool           # differentiate through the inverse, default true
ghnn:
  canonical_positions: bool       # wire latent positions to observed positions
forecast:
  n_initial_conditions: int >= 1  # sampled from ic_seed when initial_conditions is null
  ic_seed: int
  initial_conditions: [[float, ...], ...] | null
  horizon: float > 0              # T
  step: float > 0                 # h, default 0.01
  divergence_threshold: float > 0 # default 1e6
"""


def expand_env_vars(value: Any) -> Any:
    """
    Expand ${VAR} and ${VAR:-default} in strings, recursively through lists and mappings.
    An expanded scalar is re-parsed so "${STEPS:-500}" becomes the integer 500.
    """
    if isinstance(value, Mapping):
        return {k: expand_env_vars(v) for k, v in value.items()}
    if isinstance(value, list):
        return [expand_env_vars(v) for v in value]
    if not isinstance(value, str):
        return value

    def replace_var(match):
        var_name = match.group(1)
        has_default = match.group(2) is not None
        env_value = os.environ.get(var_name)
        if env_value is not None:
            return env_value
        if has_default:
            return match.group(3) or ""
        # Unset without default: keep the reference
        return match.group(0)

    expanded = ENV_PATTERN.sub(replace_var, value)
    if expanded == value:
        return value
    parsed = yaml.safe_load(expanded) if expanded.strip() else expanded
    return parsed if isinstance(parsed, (int, float, bool)) else expanded


def _section(name: str, build: Callable[[], Any]) -> Any:
    try:
        return build()
    except ConfigError:
        raise
    except (TypeError, ValueError, KeyError) as exc:
        raise ConfigError(name, str(exc))


def _reject_unknown(name: str, data: Mapping[str, Any], known) -> None:
    unknown = set(data) - set(known)
    if unknown:
        raise ConfigError(name, f"unknown fields {sorted(unknown)}")


@dataclass
class DatasetSettings:
    n_traj: int = 20
    t_span: Tuple[float, float] = (0.0, 10.0)
    dt: float = 0.1
    sigma: float = 0.0
    seed: int = 0
    derivative_mode: str = 'exact'
    substeps: int = 100

    def __post_init__(self):
        self.t_span = (float(self.t_span[0]), float(self.t_span[1]))
        checks = [
            ('n_traj', self.n_traj >= 1, "must be at least 1"),
            ('t_span', self.t_span[1] > self.t_span[0], "end must exceed start"),
            ('dt', self.dt > 0, "must be positive"),
            ('sigma', self.sigma >= 0, "must be non-negative"),
            ('derivative_mode', self.derivative_mode in DERIVATIVE_MODES, f"must be one of {DERIVATIVE_MODES}"),
            ('substeps', self.substeps >= 1, "must be at least 1"),
        ]
        for name, ok, message in checks:
            if not ok:
                raise ConfigError(f"dataset.{name}", f"{message}, got {getattr(self, name)}")
        if not is_whole_steps(self.t_span[1] - self.t_span[0], self.dt):
            raise ConfigError("dataset.dt", f"time span {self.t_span} is not a whole number of steps of {self.dt}")

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data['t_span'] = list(self.t_span)
        return data


@dataclass
class ForecastSettings:
    n_initial_conditions: int = 5
    ic_seed: int = 1234
    initial_conditions: Optional[List[List[float]]] = None
    horizon: float = 20.0
    step: float = DEFAULT_STEP
    divergence_threshold: float = DIVERGENCE_THRESHOLD

    def __post_init__(self):
        if self.initial_conditions is not None:
            self.initial_conditions = [[float(v) for v in ic] for ic in self.initial_conditions]
            self.n_initial_conditions = len(self.initial_conditions)
        checks = [
            ('n_initial_conditions', self.n_initial_conditions >= 1, "must be at least 1"),
            ('horizon', self.horizon > 0, "must be positive"),
            ('step', self.step > 0, "must be positive"),
            ('divergence_threshold', self.divergence_threshold > 0, "must be positive"),
        ]
        for name, ok, message in checks:
            if not ok:
                raise ConfigError(f"forecast.{name}", f"{message}, got {getattr(self, name)}")
        if not is_whole_steps(self.horizon, self.step):
            raise ConfigError("forecast.step", f"horizon {self.horizon} is not a whole number of steps of {self.step}")

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class ExperimentConfig:
    name: str = "experiment"
    output_dir: Optional[str] = None
    system: SystemSpec = field(default_factory=lambda: SystemSpec(SystemKind.LOTKA_VOLTERRA))
    dataset: DatasetSettings = field(default_factory=DatasetSettings)
    models: List[ModelKind] = field(default_factory=lambda: list(ModelKind))
    training: TrainConfig = field(default_factory=TrainConfig)
    forecast: ForecastSettings = field(default_factory=ForecastSettings)

    SECTIONS = ('name', 'output_dir', 'system', 'dataset', 'models', 'training', 'jacobian_policy', 'ghnn', 'forecast')

    @property
    def output_path(self) -> Path:
        return Path(self.output_dir) if self.output_dir else Config.output_root() / self.name

    @classmethod
    def from_dict(cls, data: Optional[Mapping[str, Any]]) -> "ExperimentConfig":
        data = expand_env_vars(dict(data or {}))
        _reject_unknown('experiment', data, cls.SECTIONS)

        system_data = data.get('system') or {}
        _reject_unknown('system', system_data, ('kind', 'parameters'))
        system = _section('system.kind', lambda: SystemSpec(
            SystemKind(system_data.get('kind', SystemKind.LOTKA_VOLTERRA.value)),
            dict(system_data.get('parameters') or {}),
        ))

        dataset_data = data.get('dataset') or {}
        _reject_unknown('dataset', dataset_data, [f.name for f in fields(DatasetSettings)])
        dataset = _section('dataset', lambda: DatasetSettings(**dataset_data))

        models = _section('models', lambda: [ModelKind(m) for m in data.get('models') or [k.value for k in ModelKind]])
        if not models:
            raise ConfigError('models', "at least one model kind is required")

        training_data = dict(data.get('training') or {})
        if 'jacobian_policy' in data:
            training_data['jacobian_policy'] = _section(
                'jacobian_policy', lambda: JacobianInversePolicy.from_dict(data['jacobian_policy'] or {})
            )
        ghnn_data = data.get('ghnn') or {}
        _reject_unknown('ghnn', ghnn_data, ('canonical_positions',))
        if 'canonical_positions' in ghnn_data:
            training_data['canonical_positions'] = bool(ghnn_data['canonical_positions'])
        training = _section('training', lambda: TrainConfig.from_dict(training_data))

        forecast_data = data.get('forecast') or {}
        _reject_unknown('forecast', forecast_data, [f.name for f in fields(ForecastSettings)])
        forecast = _section('forecast', lambda: ForecastSettings(**forecast_data))
        if forecast.initial_conditions is not None:
            bad = [i for i, ic in enumerate(forecast.initial_conditions) if len(ic) != system.d]
            if bad:
                raise ConfigError(
                    'forecast.initial_conditions',
                    f"entries {bad} do not have the system dimension {system.d}",
                )

        return cls(
            name=str(data.get('name', 'experiment')),
            output_dir=None if data.get('output_dir') is None else str(data['output_dir']),
            system=system,
            dataset=dataset,
            models=models,
            training=training,
            forecast=forecast,
        )

    @classmethod
    def load(cls, path: PathLike) -> "ExperimentConfig":
        path = Path(path)
        if not path.exists():
            raise ConfigError('config', f"experiment file not found: {path}")
        with open(path, 'r', encoding='utf-8') as f:
            try:
                data = yaml.safe_load(f)
            except yaml.YAMLError as exc:
                raise ConfigError('config', f"invalid YAML in {path}: {exc}")
        if data is not None and not isinstance(data, Mapping):
            raise ConfigError('config', f"{path} must hold a mapping at the top level")
        return cls.from_dict(data)

    def to_dict(self) -> Dict[str, Any]:
        training = self.training.to_dict()
        policy = training.pop('jacobian_policy')
        canonical_positions = training.pop('canonical_positions')
        return {
            'name': self.name,
            'output_dir': self.output_dir,
            'system': self.system.to_dict(),
            'dataset': self.dataset.to_dict(),
            'models': [m.value for m in self.models],
            'training': training,
            'jacobian_policy': policy,
            'ghnn': {'canonical_positions': canonical_positions},
            'forecast': self.forecast.to_dict(),
        }

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False, default_flow_style=None)

    def save(self, directory: PathLike) -> Path:
        return atomic_write_text(Path(directory) / EXPERIMENT_FILE, self.to_yaml())

    def forecast_initial_conditions(self, system: BenchmarkSystem) -> np.ndarray:
        """Explicit forecast ICs, or a fresh draw from ic_seed (independent of the dataset seed)"""
        if self.forecast.initial_conditions is not None:
            return np.array(self.forecast.initial_conditions, dtype=np.float64)
        rng = np.random.default_rng(np.random.SeedSequence(self.forecast.ic_seed))
        return system.sample_initial_conditions(self.forecast.n_initial_conditions, rng)
