"""
Trainer - minibatch gradient descent on one model family's loss
"""
import logging
import time
from dataclasses import asdict, dataclass, field, replace
from enum import Enum
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from sklearn.model_selection import train_test_split

from hamiltonet.error_utils import ConfigError, DomainError
from hamiltonet.models import Batch, DynamicsModel, JacobianInversePolicy, ModelKind, build_model
from hamiltonet.systems import TrajectoryDataset
from hamiltonet.training.optimizers import OptimizerKind, make_optimizer

logger = logging.getLogger(__name__)

DEFAULT_CLIP_NORM = 10.0


class RunStatus(Enum):
    COMPLETED = "completed"
    NAN_ABORT = "nan_abort"
    SOLVER_FAILURE = "solver_failure"


@dataclass
class TrainConfig:
    """
    clip_norm None applies the per-family default (off for NN, 10 for HNN and gHNN);
    0 disables clipping.
    """

    optimizer: OptimizerKind = OptimizerKind.ADAM
    learning_rate: float = 1e-3
    batch_size: int = 256
    steps: int = 20000
    seed: int = 0
    restarts: int = 1
    kappa: float = 3.0
    clip_norm: Optional[float] = None
    log_every: int = 100
    validation_fraction: float = 0.0
    lr_jitter: float = 0.0
    n_jobs: int = 1
    hidden: Dict[str, List[int]] = field(default_factory=dict)
    jacobian_policy: JacobianInversePolicy = field(default_factory=JacobianInversePolicy.for_training)
    canonical_positions: bool = False

    def __post_init__(self):
        try:
            self.optimizer = OptimizerKind(self.optimizer)
        except ValueError:
            raise ConfigError('training.optimizer', f"unknown optimizer '{self.optimizer}'")
        if isinstance(self.jacobian_policy, Mapping):
            self.jacobian_policy = JacobianInversePolicy.from_dict(self.jacobian_policy)
        checks = [
            ('learning_rate', self.learning_rate > 0, "must be positive"),
            ('batch_size', self.batch_size >= 1, "must be at least 1"),
            ('steps', self.steps >= 1, "must be at least 1"),
            ('restarts', self.restarts >= 1, "must be at least 1"),
            ('kappa', self.kappa > 1, "must be greater than 1"),
            ('clip_norm', self.clip_norm is None or self.clip_norm >= 0, "must be non-negative"),
            ('log_every', self.log_every >= 1, "must be at least 1"),
            ('validation_fraction', 0 <= self.validation_fraction < 1, "must lie in [0, 1)"),
            ('lr_jitter', self.lr_jitter >= 0, "must be non-negative"),
            ('n_jobs', self.n_jobs != 0, "must be non-zero"),
        ]
        for name, ok, message in checks:
            if not ok:
                raise ConfigError(f"training.{name}", f"{message}, got {getattr(self, name)}")

    def effective_clip_norm(self, kind: ModelKind) -> Optional[float]:
        if self.clip_norm is not None:
            return self.clip_norm or None
        return None if ModelKind(kind) == ModelKind.NN else DEFAULT_CLIP_NORM

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data['optimizer'] = self.optimizer.value
        data['jacobian_policy'] = self.jacobian_policy.to_dict()
        return data

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "TrainConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ConfigError('training', f"unknown fields {sorted(unknown)}")
        return cls(**dict(data))


@dataclass
class LossRecord:
    step: int
    loss: float
    grad_norm: float
    wall_time: float
    validation_loss: float = float('nan')


@dataclass
class TrainRun:
    model: DynamicsModel
    history: List[LossRecord]
    status: RunStatus
    seed: int
    final_loss: float
    learning_rate: float
    message: str = ""
    restart_index: int = 0

    @property
    def completed(self) -> bool:
        return self.status == RunStatus.COMPLETED

    def history_frame(self) -> pd.DataFrame:
        columns = ['step', 'loss', 'grad_norm', 'wall_time', 'validation_loss']
        return pd.DataFrame([asdict(r) for r in self.history], columns=columns)


def split_trajectories(
    dataset: TrajectoryDataset, validation_fraction: float, seed: int
) -> Tuple[TrajectoryDataset, Optional[TrajectoryDataset]]:
    """Hold out whole trajectories for validation"""
    if validation_fraction <= 0 or dataset.n_traj < 2:
        return dataset, None
    ids = [t.traj_id for t in dataset.trajectories]
    train_ids, val_ids = train_test_split(ids, test_size=validation_fraction, random_state=seed)
    return dataset.subset(train_ids), dataset.subset(val_ids)


def _batch(dataset: TrajectoryDataset) -> Batch:
    return Batch(dataset.states(), dataset.derivatives())


def train(
    kind: ModelKind,
    dataset: TrajectoryDataset,
    config: TrainConfig,
    model: Optional[DynamicsModel] = None,
    restart_index: int = 0,
) -> TrainRun:
    """
    Minimize the model's loss over random minibatches. Aborts with nan_abort on a
    non-finite loss or gradient and with solver_failure on Jacobian inversion errors.

    Args:
        kind: Model family
        dataset: Training trajectories
        config: Optimizer and schedule settings
        model: Optional starting model (a fresh one is built from config.seed otherwise)

    Returns:
        TrainRun with the last good parameters
    """
    kind = ModelKind(kind)
    if len(dataset) == 0:
        raise ValueError("cannot train on an empty dataset")
    if model is None:
        model = build_model(
            kind, dataset.d, config.seed, config.hidden, config.jacobian_policy, config.canonical_positions
        )
    if model.d != dataset.d:
        raise ValueError(f"model dimension {model.d} does not match dataset dimension {dataset.d}")

    train_set, val_set = split_trajectories(dataset, config.validation_fraction, config.seed)
    full = _batch(train_set)
    validation = _batch(val_set) if val_set is not None else None
    n_samples = len(full)

    rng = np.random.default_rng(config.seed)
    optimizer = make_optimizer(config.optimizer, config.learning_rate, config.effective_clip_norm(kind))
    params = model.flat_parameters()
    history: List[LossRecord] = []
    status, message = RunStatus.COMPLETED, ""
    start = time.perf_counter()

    for step in range(1, config.steps + 1):
        if config.batch_size >= n_samples:
            batch = full
        else:
            batch = full.take(rng.choice(n_samples, size=config.batch_size, replace=False))
        try:
            loss, grad = model.loss_and_gradient(batch)
        except DomainError as exc:
            status, message = RunStatus.SOLVER_FAILURE, f"step {step}: {exc}"
            break
        grad_norm = float(np.linalg.norm(grad))
        if not np.isfinite(loss) or not np.all(np.isfinite(grad)):
            status, message = RunStatus.NAN_ABORT, f"step {step}: non-finite loss or gradient"
            break

        if step % config.log_every == 0 or step == config.steps:
            record = LossRecord(step, loss, grad_norm, time.perf_counter() - start)
            if validation is not None:
                record.validation_loss = _safe_loss(model, validation)
            history.append(record)
            logger.debug(f"{kind.value} step {step}: loss {loss:.6e}, grad norm {grad_norm:.3e}")

        params = optimizer.step(params, grad)
        model = model.with_flat_parameters(params)

    final_loss = float('nan')
    if status == RunStatus.COMPLETED:
        final_loss = _safe_loss(model, full)
        if not np.isfinite(final_loss):
            status, message = RunStatus.NAN_ABORT, "final loss is not finite"

    if status == RunStatus.COMPLETED:
        logger.info(f"✓ Trained {kind.value} (seed {config.seed}): final loss {final_loss:.6e}")
    else:
        logger.warning(f"{kind.value} run with seed {config.seed} stopped: {status.value} ({message})")

    return TrainRun(
        model=model,
        history=history,
        status=status,
        seed=config.seed,
        final_loss=final_loss,
        learning_rate=config.learning_rate,
        message=message,
        restart_index=restart_index,
    )


def _safe_loss(model: DynamicsModel, batch: Batch) -> float:
    try:
        return model.loss(batch)
    except DomainError as exc:
        logger.debug(f"Loss evaluation failed: {exc}")
        return float('nan')


def restart_config(config: TrainConfig, index: int) -> TrainConfig:
    """Config of restart `index`: seed + index and, with lr_jitter, a perturbed learning rate"""
    seed = config.seed + index
    learning_rate = config.learning_rate
    if config.lr_jitter > 0:
        jitter = np.random.default_rng(seed).uniform(-config.lr_jitter, config.lr_jitter)
        learning_rate = float(learning_rate * np.exp(jitter))
    return replace(config, seed=seed, learning_rate=learning_rate)


def run_table_rows(runs: Sequence[TrainRun], survivors: Sequence[int]) -> List[Dict[str, Any]]:
    keep = set(survivors)
    return [
        {
            'restart': run.restart_index,
            'seed': run.seed,
            'learning_rate': run.learning_rate,
            'status': run.status.value,
            'final_loss': run.final_loss,
            'survivor': run.restart_index in keep,
            'message': run.message,
        }
        for run in runs
    ]
