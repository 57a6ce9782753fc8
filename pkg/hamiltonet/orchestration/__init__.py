from hamiltonet.orchestration.history import RUN_TABLE_FILE, RunHistory
from hamiltonet.orchestration.pipeline import (
    CHECKPOINT_FILE,
    ExecutionContext,
    ExperimentPipeline,
    compare_stage,
    dataset_dir,
    evaluate_stage,
    forecast_dir,
    generate_stage,
    load_surviving_models,
    survivor_checkpoint,
    train_dir,
    train_stage,
)

__all__ = [
    'CHECKPOINT_FILE',
    'RUN_TABLE_FILE',
    'ExecutionContext',
    'ExperimentPipeline',
    'RunHistory',
    'compare_stage',
    'dataset_dir',
    'evaluate_stage',
    'forecast_dir',
    'generate_stage',
    'load_surviving_models',
    'survivor_checkpoint',
    'train_dir',
    'train_stage',
]
