"""
Forecast Figures - phase portraits and energy traces saved as SVG
"""
import io
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence

import matplotlib

matplotlib.use('Agg')  # Non-interactive backend
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from hamiltonet.forecast import EvaluationReport  # noqa: E402
from hamiltonet.io_utils import PathLike, atomic_write_text  # noqa: E402

logger = logging.getLogger(__name__)

PHASE_FILE = "phase.svg"
ENERGY_FILE = "energy.svg"

# Text stays text, and ids do not change between runs
SVG_STYLE = {'svg.fonttype': 'none', 'svg.hashsalt': 'hamiltonet'}


@dataclass
class Series:
    label: str
    x: np.ndarray
    y: np.ndarray
    color: Optional[str] = None
    dashed: bool = False

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=np.float64).ravel()
        self.y = np.asarray(self.y, dtype=np.float64).ravel()
        if self.x.shape != self.y.shape:
            raise ValueError(f"series '{self.label}': x has {self.x.size} points, y has {self.y.size}")


@dataclass
class LinePlot:
    title: str
    xlabel: str
    ylabel: str
    figsize: tuple = (8, 5.5)
    series: List[Series] = field(default_factory=list)

    def add(self, series: Series) -> "LinePlot":
        if series.color is None:
            series.color = f"C{len(self.series) % 10}"
        self.series.append(series)
        return self

    def render(self) -> str:
        with plt.rc_context(SVG_STYLE):
            fig, ax = plt.subplots(figsize=self.figsize)
            try:
                for s in self.series:
                    ax.plot(s.x, s.y, color=s.color, linestyle='--' if s.dashed else '-', lw=1.5, label=s.label)
                ax.set_xlabel(self.xlabel)
                ax.set_ylabel(self.ylabel)
                ax.set_title(self.title)
                ax.grid(True, alpha=0.3)
                if self.series:
                    ax.legend(fontsize=8, loc='best')
                buffer = io.StringIO()
                fig.savefig(buffer, format='svg', bbox_inches='tight', metadata={'Date': None})
            finally:
                plt.close(fig)
        return buffer.getvalue()

    def save(self, path: PathLike) -> Path:
        return atomic_write_text(path, self.render())


def _color(ic_index: int) -> str:
    return f"C{ic_index % 10}"


def phase_plot(report: EvaluationReport, labels: Sequence[str] = ("r0", "r1"), model_index: int = 0) -> LinePlot:
    """Forecast (solid) against reference (dashed) in the first two coordinates, one pair per IC"""
    plot = LinePlot(f"{report.model_kind} forecast vs reference", labels[0], labels[1])
    for r in (r for r in report.reports if r.model_index == model_index):
        color = _color(r.ic_index)
        plot.add(Series(f"IC {r.ic_index} forecast", r.forecast[:, 0], r.forecast[:, 1], color))
        plot.add(Series(f"IC {r.ic_index} reference", r.reference[:, 0], r.reference[:, 1], color, dashed=True))
    return plot


def energy_plot(report: EvaluationReport, model_index: int = 0) -> LinePlot:
    """True energy along each forecast, and the learned energy where the model has one"""
    plot = LinePlot(f"{report.model_kind} energy along forecast", "t", "E")
    for r in (r for r in report.reports if r.model_index == model_index):
        color = _color(r.ic_index)
        plot.add(Series(f"IC {r.ic_index} E", r.times, r.true_energy, color))
        if r.learned_energy is not None:
            plot.add(Series(f"IC {r.ic_index} learned H", r.times, r.learned_energy, color, dashed=True))
    return plot


def comparison_energy_plot(evaluations: Mapping[str, EvaluationReport], ic_index: int = 0) -> LinePlot:
    """Energy of each model's first forecast from one IC on shared axes"""
    plot = LinePlot(f"energy along forecasts from IC {ic_index}", "t", "E")
    for name, ev in evaluations.items():
        match = next((r for r in ev.reports if r.ic_index == ic_index and r.model_index == 0), None)
        if match is not None:
            plot.add(Series(name, match.times, match.true_energy))
    return plot


def emit_plots(report: EvaluationReport, directory: PathLike, labels: Optional[Sequence[str]] = None) -> Dict[str, Path]:
    """Write phase.svg and energy.svg for the first model of the report"""
    directory = Path(directory)
    labels = labels or ("r0", "r1")
    paths = {
        'phase': phase_plot(report, labels).save(directory / PHASE_FILE),
        'energy': energy_plot(report).save(directory / ENERGY_FILE),
    }
    logger.info(f"✓ Wrote plots to {directory}")
    return paths
