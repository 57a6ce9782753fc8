"""
Ground-truth benchmark systems, integration and trajectory datasets
"""
from hamiltonet.systems.base import BenchmarkSystem, SystemKind, SystemSpec, get_system
from hamiltonet.systems.datasets import (
    Trajectory,
    TrajectoryDataset,
    canonicalize_dataset,
    conservation_report,
    generate_dataset,
    load_dataset,
    save_dataset,
)
from hamiltonet.systems.double_pendulum import (
    dp_conjugate_momenta,
    dp_energy,
    dp_lagrangian,
    dp_vector_field,
)
from hamiltonet.systems.elastic_pendulum import (
    ep_conjugate_momenta,
    ep_energy,
    ep_lagrangian,
    ep_vector_field,
)
from hamiltonet.systems.finite_difference import finite_difference_derivatives
from hamiltonet.systems.integrators import integrate, orbit_period, rk4_step, section_crossings
from hamiltonet.systems.lagrangian import euler_lagrange_residual, lagrangian_vector_field
from hamiltonet.systems.lotka_volterra import (
    lv_canonical_oracle,
    lv_canonical_vector_field,
    lv_hamiltonian,
    lv_pseudo_energy,
    lv_vector_field,
)

__all__ = [
    'BenchmarkSystem',
    'SystemKind',
    'SystemSpec',
    'get_system',
    'Trajectory',
    'TrajectoryDataset',
    'canonicalize_dataset',
    'conservation_report',
    'generate_dataset',
    'load_dataset',
    'save_dataset',
    'dp_conjugate_momenta',
    'dp_energy',
    'dp_lagrangian',
    'dp_vector_field',
    'ep_conjugate_momenta',
    'ep_energy',
    'ep_lagrangian',
    'ep_vector_field',
    'finite_difference_derivatives',
    'integrate',
    'orbit_period',
    'rk4_step',
    'section_crossings',
    'euler_lagrange_residual',
    'lagrangian_vector_field',
    'lv_canonical_oracle',
    'lv_canonical_vector_field',
    'lv_hamiltonian',
    'lv_pseudo_energy',
    'lv_vector_field',
]
