"""
Training History - run tables and per-run loss logs
"""
import io
import logging
from pathlib import Path
from typing import Any, Dict, List

from hamiltonet.io_utils import FLOAT_FORMAT, PathLike, atomic_write_json, atomic_write_text, read_json
from hamiltonet.training import RestartResult, TrainRun

logger = logging.getLogger(__name__)

RUN_TABLE_FILE = "run_table.json"


class RunHistory:
    """Track the restarts of one training command inside its output directory"""

    def __init__(self, history_dir: PathLike):
        self.history_dir = Path(history_dir)
        self.history_dir.mkdir(parents=True, exist_ok=True)

    def log_path(self, restart_index: int) -> Path:
        return self.history_dir / f"training_log_r{restart_index}.csv"

    def save_training_log(self, run: TrainRun) -> Path:
        """Delimited text: step, loss, grad_norm, wall_time, validation_loss"""
        buffer = io.StringIO()
        run.history_frame().to_csv(buffer, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
        return atomic_write_text(self.log_path(run.restart_index), buffer.getvalue())

    def save_run(self, model_kind: str, result: RestartResult) -> Path:
        """Save the run table and every run's training log"""
        for run in result.runs:
            self.save_training_log(run)
        summary = {
            "model_kind": model_kind,
            "restarts": len(result.runs),
            "survivors": list(result.survivors),
            "best_restart": result.best.restart_index,
            "runs": result.run_table(),
        }
        path = atomic_write_json(self.history_dir / RUN_TABLE_FILE, summary)
        logger.info(f"✓ Saved run table ({len(result.runs)} runs) to {path}")
        return path

    def get_run_table(self) -> Dict[str, Any]:
        run_file = self.history_dir / RUN_TABLE_FILE
        if not run_file.exists():
            raise FileNotFoundError(f"Run table not found in {self.history_dir}")
        return read_json(run_file)

    def surviving_rows(self) -> List[Dict[str, Any]]:
        return [row for row in self.get_run_table()["runs"] if row["survivor"]]
