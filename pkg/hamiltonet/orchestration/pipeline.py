"""
Experiment Pipeline - Executes generate, train, evaluate and compare stages in order

Stage functions are shared with the individual CLI commands; ExperimentPipeline chains
them for one ExperimentConfig and records per-stage timing in an ExecutionContext.
"""
import logging
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Optional

from hamiltonet.error_utils import HamiltonetError
from hamiltonet.experiment import ExperimentConfig
from hamiltonet.forecast import (
    EvaluationReport,
    SystemOracle,
    evaluate,
    rank_models,
    save_comparison,
    save_report,
)
from hamiltonet.io_utils import PathLike
from hamiltonet.models import DynamicsModel, ModelKind
from hamiltonet.orchestration.history import RunHistory
from hamiltonet.plotting import comparison_energy_plot, emit_plots
from hamiltonet.registry import ModelRegistry, load_checkpoint, save_checkpoint
from hamiltonet.systems import (
    TrajectoryDataset,
    conservation_report,
    generate_dataset,
    get_system,
    save_dataset,
)
from hamiltonet.training import RestartResult, multi_restart

logger = logging.getLogger(__name__)

CHECKPOINT_FILE = "checkpoint.json"
CONSERVATION_TOLERANCE = 1e-6


def dataset_dir(root: PathLike) -> Path:
    return Path(root) / "dataset"


def train_dir(root: PathLike, kind: ModelKind) -> Path:
    return Path(root) / "train" / ModelKind(kind).value


def forecast_dir(root: PathLike, label: str) -> Path:
    return Path(root) / "forecast" / label


def survivor_checkpoint(directory: PathLike, restart_index: int) -> Path:
    return Path(directory) / f"checkpoint_r{restart_index}.json"


class ExecutionContext:
    """Stores results and timing of pipeline stages"""

    def __init__(self):
        self.results: Dict[str, Any] = {}
        self.metadata: Dict[str, Dict[str, Any]] = {}
        self.errors: Dict[str, Exception] = {}
        self.start_time: Optional[datetime] = None
        self.end_time: Optional[datetime] = None

    def add_result(self, stage: str, result: Any, execution_time: float):
        self.results[stage] = result
        self.metadata[stage] = {
            "execution_time": execution_time,
            "timestamp": datetime.now().isoformat(),
            "status": "success",
        }

    def add_error(self, stage: str, error: Exception, execution_time: float):
        self.errors[stage] = error
        self.metadata[stage] = {
            "execution_time": execution_time,
            "timestamp": datetime.now().isoformat(),
            "status": "failed",
            "error": str(error),
        }

    def add_skip(self, stage: str, reason: str):
        self.metadata[stage] = {"execution_time": 0.0, "status": "skipped", "error": reason}

    @property
    def first_error(self) -> Optional[Exception]:
        return next(iter(self.errors.values()), None)

    def get_summary(self) -> Dict[str, Any]:
        total_time = (self.end_time - self.start_time).total_seconds() if self.end_time else 0
        statuses = [m["status"] for m in self.metadata.values()]
        return {
            "total_stages": len(self.metadata),
            "successes": statuses.count("success"),
            "failures": statuses.count("failed"),
            "skipped": statuses.count("skipped"),
            "total_execution_time": total_time,
            "stages": self.metadata,
        }


def generate_stage(config: ExperimentConfig, directory: PathLike, n_jobs: int = 1):
    """Generate and save the training dataset; returns (dataset, conservation report)"""
    ds = config.dataset
    dataset = generate_dataset(
        config.system,
        ds.n_traj,
        t_span=ds.t_span,
        dt=ds.dt,
        sigma=ds.sigma,
        seed=ds.seed,
        derivative_mode=ds.derivative_mode,
        substeps=ds.substeps,
        n_jobs=n_jobs,
    )
    report = conservation_report(dataset)
    report['passed'] = report['max_relative_drift'] <= CONSERVATION_TOLERANCE
    save_dataset(dataset, directory)
    logger.info(f"✓ Generated {dataset.n_traj} {config.system.kind.value} trajectories")
    return dataset, report


def train_stage(
    config: ExperimentConfig,
    kind: ModelKind,
    dataset: TrajectoryDataset,
    directory: PathLike,
    registry: Optional[ModelRegistry] = None,
    n_jobs: Optional[int] = None,
) -> RestartResult:
    """Multi-restart training; writes best and surviving checkpoints, run table and logs"""
    kind = ModelKind(kind)
    if dataset.d != config.system.d:
        raise ValueError(f"dataset dimension {dataset.d} does not match system dimension {config.system.d}")
    directory = Path(directory)
    result = multi_restart(kind, dataset, config.training, n_jobs=n_jobs)

    RunHistory(directory).save_run(kind.value, result)
    metadata = {'restart': result.best.restart_index, 'final_loss': result.best.final_loss}
    save_checkpoint(result.best.model, directory / CHECKPOINT_FILE, metadata)
    for run in result.surviving_runs:
        save_checkpoint(run.model, survivor_checkpoint(directory, run.restart_index),
                        {'restart': run.restart_index, 'final_loss': run.final_loss})

    if registry is not None:
        registry.register_model(
            result.best.model,
            f"{config.name}_{kind.value}",
            metrics={'final_loss': result.best.final_loss, 'survivors': len(result.survivors)},
            training_config=config.training.to_dict(),
            dataset_manifest=dataset.manifest(),
            tags=[config.system.kind.value, kind.value],
        )
    return result


def load_surviving_models(directory: PathLike) -> List[DynamicsModel]:
    """Survivor checkpoints listed in the run table, or the single best checkpoint"""
    directory = Path(directory)
    try:
        rows = RunHistory(directory).surviving_rows()
    except FileNotFoundError:
        rows = []
    paths = [survivor_checkpoint(directory, row['restart']) for row in rows]
    paths = [p for p in paths if p.exists()] or [directory / CHECKPOINT_FILE]
    return [load_checkpoint(p) for p in paths]


def evaluate_stage(
    config: ExperimentConfig,
    models: List[Any],
    directory: PathLike,
    n_jobs: int = 1,
) -> EvaluationReport:
    """Forecast every model from the configured ICs; writes report, series and plots"""
    system = get_system(config.system)
    for model in models:
        if model.d != system.d:
            raise ValueError(f"model dimension {model.d} does not match system dimension {system.d}")
    fc = config.forecast
    report = evaluate(
        models,
        system,
        config.forecast_initial_conditions(system),
        fc.horizon,
        fc.step,
        n_jobs=n_jobs,
        divergence_threshold=fc.divergence_threshold,
    )
    save_report(report, directory)
    emit_plots(report, directory, config.system.labels)
    return report


def compare_stage(evaluations: Dict[str, EvaluationReport], directory: PathLike, metric: str = 'relative_std'):
    rows = rank_models(evaluations, metric)
    save_comparison(rows, directory, metric)
    comparison_energy_plot(evaluations).save(Path(directory) / "comparison_energy.svg")
    return rows


class ExperimentPipeline:
    """Runs generate -> train (per model kind) -> evaluate (per model kind) -> compare"""

    def __init__(self, config: ExperimentConfig, oracle: bool = False, n_jobs: int = 1):
        self.config = config
        self.oracle = oracle
        self.n_jobs = n_jobs
        self.root = config.output_path
        self.context = ExecutionContext()

    def _stage(self, name: str, fn, *args, **kwargs):
        start = datetime.now()
        logger.info(f"▶ Running stage: {name}")
        try:
            result = fn(*args, **kwargs)
        except HamiltonetError as exc:
            elapsed = (datetime.now() - start).total_seconds()
            self.context.add_error(name, exc, elapsed)
            logger.error(f"✗ Stage {name} failed after {elapsed:.3f}s: {exc}")
            return None
        elapsed = (datetime.now() - start).total_seconds()
        self.context.add_result(name, result, elapsed)
        logger.info(f"✓ Stage {name} completed in {elapsed:.3f}s")
        return result

    def run(self) -> ExecutionContext:
        config = self.config
        self.context.start_time = datetime.now()
        self.root.mkdir(parents=True, exist_ok=True)
        config.save(self.root)

        generated = self._stage('generate', generate_stage, config, dataset_dir(self.root), self.n_jobs)
        if generated is None:
            self.context.end_time = datetime.now()
            return self.context
        dataset, _ = generated

        registry = ModelRegistry(self.root / "registry")
        evaluations: Dict[str, EvaluationReport] = {}
        if self.oracle:
            oracle = SystemOracle(get_system(config.system))
            report = self._stage('evaluate:oracle', evaluate_stage, config, [oracle],
                                 forecast_dir(self.root, 'oracle'), self.n_jobs)
            if report is not None:
                evaluations['oracle'] = report

        for kind in config.models:
            result = self._stage(f'train:{kind.value}', train_stage, config, kind, dataset,
                                 train_dir(self.root, kind), registry)
            if result is None:
                self.context.add_skip(f'evaluate:{kind.value}', "training failed")
                continue
            models = [run.model for run in result.surviving_runs]
            report = self._stage(f'evaluate:{kind.value}', evaluate_stage, config, models,
                                 forecast_dir(self.root, kind.value), self.n_jobs)
            if report is not None:
                evaluations[kind.value] = report

        if evaluations:
            self._stage('compare', compare_stage, evaluations, self.root)
        self.context.end_time = datetime.now()
        return self.context
