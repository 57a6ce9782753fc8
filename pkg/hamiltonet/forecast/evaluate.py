"""
Forecast Evaluation - rollouts from unseen initial conditions, energy drift and model ranking

Each (model, initial condition) pair gives one ForecastReport; an EvaluationReport
aggregates them with medians and interquartile ranges across initial conditions and
surviving restarts.
"""
import io
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence, Union

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from hamiltonet.error_utils import DomainError, ForecastDivergenceError
from hamiltonet.forecast.metrics import safe_energy_drift, trajectory_mse
from hamiltonet.forecast.rollout import DIVERGENCE_THRESHOLD, Field, SystemOracle, rollout
from hamiltonet.io_utils import FLOAT_FORMAT, PathLike, atomic_write_json, atomic_write_text, read_json
from hamiltonet.systems import BenchmarkSystem

logger = logging.getLogger(__name__)

DEFAULT_STEP = 0.01
EARLY_HORIZON = 5.0
REPORT_FILE = "report.json"
SERIES_FILE = "series.csv"
COMPARISON_FILE = "comparison.json"
METRICS = (
    'trajectory_mse',
    'trajectory_mse_t5',
    'relative_std',
    'max_relative_deviation',
    'learned_relative_std',
    'learned_max_relative_deviation',
)


def model_label(model: Field) -> str:
    kind = getattr(model, 'kind', None)
    if kind is not None:
        return kind.value
    return getattr(model, 'kind_label', 'custom')


def _array(values: Optional[Sequence]) -> Optional[np.ndarray]:
    return None if values is None else np.asarray(values, dtype=np.float64)


def _listed(values: Optional[np.ndarray]) -> Optional[list]:
    return None if values is None else np.asarray(values, dtype=np.float64).tolist()


@dataclass
class ForecastReport:
    model_kind: str
    initial_condition: np.ndarray
    horizon: float
    step: float
    times: np.ndarray
    forecast: np.ndarray
    reference: np.ndarray
    true_energy: np.ndarray
    learned_energy: Optional[np.ndarray] = None
    diverged: bool = False
    divergence_reason: str = ""
    model_index: int = 0
    ic_index: int = 0
    metrics: Dict[str, float] = field(default_factory=dict)

    @property
    def relative_energy_deviation(self) -> np.ndarray:
        E0 = self.true_energy[0]
        return (self.true_energy - E0) / abs(E0) if E0 != 0 else np.full_like(self.true_energy, np.nan)

    def compute_metrics(self) -> Dict[str, float]:
        """Metrics from the stored series alone"""
        true_drift = safe_energy_drift(self.true_energy)
        learned_drift = safe_energy_drift(self.learned_energy)
        return {
            'trajectory_mse': trajectory_mse(self.forecast, self.reference),
            'trajectory_mse_t5': trajectory_mse(self.forecast, self.reference, self.times, EARLY_HORIZON),
            'relative_std': true_drift['relative_std'],
            'max_relative_deviation': true_drift['max_relative_deviation'],
            'learned_relative_std': learned_drift['relative_std'],
            'learned_max_relative_deviation': learned_drift['max_relative_deviation'],
        }

    def to_dict(self) -> Dict[str, Any]:
        return {
            'model_kind': self.model_kind,
            'model_index': self.model_index,
            'ic_index': self.ic_index,
            'initial_condition': _listed(self.initial_condition),
            'horizon': self.horizon,
            'step': self.step,
            'diverged': self.diverged,
            'divergence_reason': self.divergence_reason,
            'metrics': self.metrics,
            'times': _listed(self.times),
            'forecast': _listed(self.forecast),
            'reference': _listed(self.reference),
            'true_energy': _listed(self.true_energy),
            'learned_energy': _listed(self.learned_energy),
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "ForecastReport":
        d = len(data['initial_condition'])
        return cls(
            model_kind=data['model_kind'],
            initial_condition=_array(data['initial_condition']),
            horizon=float(data['horizon']),
            step=float(data['step']),
            times=_array(data['times']),
            forecast=_array(data['forecast']).reshape(-1, d),
            reference=_array(data['reference']).reshape(-1, d),
            true_energy=_array(data['true_energy']),
            learned_energy=_array(data.get('learned_energy')),
            diverged=bool(data['diverged']),
            divergence_reason=data.get('divergence_reason', ""),
            model_index=int(data.get('model_index', 0)),
            ic_index=int(data.get('ic_index', 0)),
            metrics={k: float(v) for k, v in data.get('metrics', {}).items()},
        )


def forecast(
    model: Field,
    system: BenchmarkSystem,
    r0: np.ndarray,
    T: float,
    h: float = DEFAULT_STEP,
    model_index: int = 0,
    ic_index: int = 0,
    divergence_threshold: float = DIVERGENCE_THRESHOLD,
) -> ForecastReport:
    """
    Roll out one model and the true system from r0 on the same grid.
    A model that cannot be evaluated at r0 yields a one-sample report flagged as diverged.
    """
    r0 = np.asarray(r0, dtype=np.float64)
    system.check_state(r0)
    try:
        run = rollout(model, r0, T, h, divergence_threshold, state_check=system.check_state)
        states, diverged, reason = run.states, run.diverged, run.reason
    except DomainError as exc:
        states, diverged, reason = r0[None, :], True, f"failed at initial condition: {exc}"

    reference = rollout(SystemOracle(system), r0, T, h, divergence_threshold)
    n = min(len(states), len(reference))
    states, times = states[:n], reference.times[:n]

    learned = None
    if hasattr(model, 'learned_hamiltonian'):
        try:
            learned = model.learned_hamiltonian(states)
        except DomainError as exc:
            logger.debug(f"Learned energy unavailable: {exc}")

    report = ForecastReport(
        model_kind=model_label(model),
        initial_condition=r0,
        horizon=float(T),
        step=float(h),
        times=times,
        forecast=states,
        reference=reference.states[:n],
        true_energy=np.asarray(system.energy(states), dtype=np.float64),
        learned_energy=None if learned is None else np.asarray(learned, dtype=np.float64),
        diverged=diverged,
        divergence_reason=reason,
        model_index=model_index,
        ic_index=ic_index,
    )
    report.metrics = report.compute_metrics()
    return report


def summarize(reports: Sequence[ForecastReport]) -> Dict[str, Dict[str, float]]:
    """Median and interquartile range of every metric over the finite values"""
    summary = {}
    for metric in METRICS:
        values = np.array([r.metrics.get(metric, np.nan) for r in reports], dtype=np.float64)
        values = values[np.isfinite(values)]
        if values.size == 0:
            summary[metric] = {'median': math.nan, 'q25': math.nan, 'q75': math.nan, 'iqr': math.nan, 'count': 0}
            continue
        q25, median, q75 = np.percentile(values, [25, 50, 75])
        summary[metric] = {
            'median': float(median),
            'q25': float(q25),
            'q75': float(q75),
            'iqr': float(q75 - q25),
            'count': int(values.size),
        }
    return summary


@dataclass
class EvaluationReport:
    model_kind: str
    system: Dict[str, Any]
    horizon: float
    step: float
    reports: List[ForecastReport]
    summary: Dict[str, Dict[str, float]] = field(default_factory=dict)

    @property
    def n_diverged(self) -> int:
        return sum(r.diverged for r in self.reports)

    @property
    def n_models(self) -> int:
        return len({r.model_index for r in self.reports})

    def median(self, metric: str) -> float:
        return self.summary.get(metric, {}).get('median', math.nan)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'model_kind': self.model_kind,
            'system': self.system,
            'horizon': self.horizon,
            'step': self.step,
            'n_models': self.n_models,
            'n_diverged': self.n_diverged,
            'summary': self.summary,
            'reports': [r.to_dict() for r in self.reports],
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "EvaluationReport":
        return cls(
            model_kind=data['model_kind'],
            system=dict(data['system']),
            horizon=float(data['horizon']),
            step=float(data['step']),
            reports=[ForecastReport.from_dict(r) for r in data['reports']],
            summary={k: dict(v) for k, v in data.get('summary', {}).items()},
        )

    def series_frame(self) -> pd.DataFrame:
        """Raw series: model_index, ic, t, forecast r{i}, reference ref{i}, energies"""
        frames = []
        for r in self.reports:
            d = r.forecast.shape[1]
            frame = pd.DataFrame({'model_index': r.model_index, 'ic': r.ic_index, 't': r.times})
            for i in range(d):
                frame[f"r{i}"] = r.forecast[:, i]
            for i in range(d):
                frame[f"ref{i}"] = r.reference[:, i]
            frame['true_energy'] = r.true_energy
            frame['learned_energy'] = r.learned_energy if r.learned_energy is not None else np.nan
            frames.append(frame)
        return pd.concat(frames, ignore_index=True)


def evaluate(
    models: Union[Field, Sequence[Field]],
    system: BenchmarkSystem,
    initial_conditions: np.ndarray,
    T: float,
    h: float = DEFAULT_STEP,
    n_jobs: int = 1,
    divergence_threshold: float = DIVERGENCE_THRESHOLD,
) -> EvaluationReport:
    """
    Forecast every model (e.g. the surviving restarts of one kind) from every initial condition.

    Raises:
        ValueError: no initial conditions
        ForecastDivergenceError: every rollout diverged
    """
    if not isinstance(models, (list, tuple)):
        models = [models]
    ics = np.atleast_2d(np.asarray(initial_conditions, dtype=np.float64))
    if ics.size == 0 or len(ics) == 0:
        raise ValueError("evaluation needs at least one initial condition")
    if not models:
        raise ValueError("evaluation needs at least one model")

    jobs = [(m, i) for m in range(len(models)) for i in range(len(ics))]
    reports = Parallel(n_jobs=n_jobs)(
        delayed(forecast)(models[m], system, ics[i], T, h, m, i, divergence_threshold)
        for m, i in jobs
    )
    reports = sorted(reports, key=lambda r: (r.model_index, r.ic_index))

    kind = model_label(models[0])
    if all(r.diverged for r in reports):
        raise ForecastDivergenceError(f"all {len(reports)} {kind} rollouts diverged")

    report = EvaluationReport(
        model_kind=kind,
        system=system.spec.to_dict(),
        horizon=float(T),
        step=float(h),
        reports=reports,
        summary=summarize(reports),
    )
    logger.info(
        f"✓ Evaluated {kind}: {len(reports)} rollouts, {report.n_diverged} diverged, "
        f"median relative energy std {report.median('relative_std'):.3g}"
    )
    return report


def rank_models(evaluations: Mapping[str, EvaluationReport], metric: str = 'relative_std') -> List[Dict[str, Any]]:
    """Rank models by the median of `metric` (smaller is better, NaN last)"""
    if metric not in METRICS:
        raise ValueError(f"unknown metric '{metric}', expected one of {', '.join(METRICS)}")

    def key(item):
        value = item[1].median(metric)
        return (math.isnan(value), value)

    rows = []
    for rank, (name, ev) in enumerate(sorted(evaluations.items(), key=key), start=1):
        rows.append({
            'rank': rank,
            'model': name,
            f'median_{metric}': ev.median(metric),
            f'iqr_{metric}': ev.summary.get(metric, {}).get('iqr', math.nan),
            'median_trajectory_mse': ev.median('trajectory_mse'),
            'median_trajectory_mse_t5': ev.median('trajectory_mse_t5'),
            'diverged': ev.n_diverged,
            'rollouts': len(ev.reports),
        })
    return rows


def save_report(report: EvaluationReport, directory: PathLike) -> Path:
    """report.json (lossless) plus series.csv (delimited raw series)"""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    buffer = io.StringIO()
    report.series_frame().to_csv(buffer, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    atomic_write_text(directory / SERIES_FILE, buffer.getvalue())
    path = atomic_write_json(directory / REPORT_FILE, report.to_dict())
    logger.info(f"✓ Saved forecast report: {path}")
    return path


def load_report(path: PathLike) -> EvaluationReport:
    path = Path(path)
    if path.is_dir():
        path = path / REPORT_FILE
    if not path.exists():
        raise FileNotFoundError(f"Forecast report not found: {path}")
    return EvaluationReport.from_dict(read_json(path))


def save_comparison(rows: List[Dict[str, Any]], directory: PathLike, metric: str = 'relative_std') -> Path:
    return atomic_write_json(Path(directory) / COMPARISON_FILE, {'metric': metric, 'ranking': rows})
