from hamiltonet.forecast.evaluate import (
    COMPARISON_FILE,
    DEFAULT_STEP,
    METRICS,
    REPORT_FILE,
    SERIES_FILE,
    EvaluationReport,
    ForecastReport,
    evaluate,
    forecast,
    load_report,
    model_label,
    rank_models,
    save_comparison,
    save_report,
    summarize,
)
from hamiltonet.forecast.metrics import energy_drift, safe_energy_drift, trajectory_mse
from hamiltonet.forecast.rollout import DIVERGENCE_THRESHOLD, Rollout, SystemOracle, rollout

__all__ = [
    'COMPARISON_FILE',
    'DEFAULT_STEP',
    'DIVERGENCE_THRESHOLD',
    'METRICS',
    'REPORT_FILE',
    'SERIES_FILE',
    'EvaluationReport',
    'ForecastReport',
    'Rollout',
    'SystemOracle',
    'energy_drift',
    'evaluate',
    'forecast',
    'load_report',
    'model_label',
    'rank_models',
    'rollout',
    'safe_energy_drift',
    'save_comparison',
    'save_report',
    'summarize',
    'trajectory_mse',
]
