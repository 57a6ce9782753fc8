"""
Restart Protocol - repeated training from different seeds with outlier rejection

Runs that did not complete are discarded, then completed runs whose final loss exceeds
kappa times the median final loss. Parameters are never averaged; downstream metrics are
aggregated over the survivors instead.
"""
import logging
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
from joblib import Parallel, delayed

from hamiltonet.error_utils import TrainingExhaustedError
from hamiltonet.models import ModelKind
from hamiltonet.systems import TrajectoryDataset
from hamiltonet.training.trainer import RunStatus, TrainConfig, TrainRun, restart_config, run_table_rows, train

logger = logging.getLogger(__name__)


def select_survivors(statuses: Sequence[RunStatus], final_losses: Sequence[float], kappa: float) -> List[int]:
    """Indices of completed runs whose final loss is at most kappa * median"""
    completed = [
        i for i, (status, loss) in enumerate(zip(statuses, final_losses))
        if RunStatus(status) == RunStatus.COMPLETED and np.isfinite(loss)
    ]
    if not completed:
        return []
    median = float(np.median([final_losses[i] for i in completed]))
    return [i for i in completed if final_losses[i] <= kappa * median]


@dataclass
class RestartResult:
    best: TrainRun
    runs: List[TrainRun]
    survivors: List[int]

    @property
    def surviving_runs(self) -> List[TrainRun]:
        return [self.runs[i] for i in self.survivors]

    def run_table(self) -> List[Dict[str, Any]]:
        return run_table_rows(self.runs, self.survivors)


def _run_restart(kind: ModelKind, dataset: TrajectoryDataset, config: TrainConfig, index: int) -> TrainRun:
    return train(kind, dataset, restart_config(config, index), restart_index=index)


def multi_restart(
    kind: ModelKind,
    dataset: TrajectoryDataset,
    config: TrainConfig,
    n_jobs: Optional[int] = None,
) -> RestartResult:
    """
    Train `config.restarts` independent runs (seeds seed + i) and keep the survivors.

    Returns:
        RestartResult whose `best` is the minimum-loss survivor

    Raises:
        TrainingExhaustedError: when no run survives
    """
    kind = ModelKind(kind)
    n_jobs = n_jobs if n_jobs is not None else config.n_jobs
    logger.info(f"Training {config.restarts} {kind.value} restart(s) with n_jobs={n_jobs}")
    runs = Parallel(n_jobs=n_jobs)(
        delayed(_run_restart)(kind, dataset, config, i) for i in range(config.restarts)
    )

    survivors = select_survivors([r.status for r in runs], [r.final_loss for r in runs], config.kappa)
    if not survivors:
        causes = [
            f"restart {r.restart_index} (seed {r.seed}): {r.status.value}"
            + (f" - {r.message}" if r.message else "")
            for r in runs
        ]
        raise TrainingExhaustedError(causes)

    best_index = min(survivors, key=lambda i: runs[i].final_loss)
    rejected = len(runs) - len(survivors)
    logger.info(
        f"✓ {kind.value}: {len(survivors)}/{len(runs)} runs survived"
        f"{f' ({rejected} rejected)' if rejected else ''}, best final loss {runs[best_index].final_loss:.6e}"
    )
    return RestartResult(best=runs[best_index], runs=list(runs), survivors=survivors)
