"""
Optimization loop and the multi-restart protocol
"""
from hamiltonet.training.optimizers import SGD, Adam, Optimizer, OptimizerKind, clip_by_norm, make_optimizer
from hamiltonet.training.restarts import RestartResult, multi_restart, select_survivors
from hamiltonet.training.trainer import (
    LossRecord,
    RunStatus,
    TrainConfig,
    TrainRun,
    restart_config,
    split_trajectories,
    train,
)

__all__ = [
    'SGD',
    'Adam',
    'Optimizer',
    'OptimizerKind',
    'clip_by_norm',
    'make_optimizer',
    'RestartResult',
    'multi_restart',
    'select_survivors',
    'LossRecord',
    'RunStatus',
    'TrainConfig',
    'TrainRun',
    'restart_config',
    'split_trajectories',
    'train',
]
