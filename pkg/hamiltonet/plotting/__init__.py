from hamiltonet.plotting.figures import (
    ENERGY_FILE,
    PHASE_FILE,
    LinePlot,
    Series,
    comparison_energy_plot,
    emit_plots,
    energy_plot,
    phase_plot,
)

__all__ = [
    'ENERGY_FILE',
    'PHASE_FILE',
    'LinePlot',
    'Series',
    'comparison_energy_plot',
    'emit_plots',
    'energy_plot',
    'phase_plot',
]
