"""
Trajectory Datasets - generation, noise, canonicalization and on-disk format

On disk a dataset is a directory holding manifest.json and trajectories.csv. Neither file
carries timestamps, so regenerating with the same seed reproduces both byte for byte.
"""
import io
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from hamiltonet.error_utils import DomainError, InitialConditionError
from hamiltonet.io_utils import FLOAT_FORMAT, PathLike, atomic_write_json, atomic_write_text, read_json
from hamiltonet.systems.base import SystemKind, SystemSpec, get_system
from hamiltonet.systems.finite_difference import finite_difference_derivatives
from hamiltonet.systems.integrators import integrate
from hamiltonet.systems.lotka_volterra import to_canonical

logger = logging.getLogger(__name__)

MANIFEST_FILE = "manifest.json"
TABLE_FILE = "trajectories.csv"
DATASET_FORMAT = "hamiltonet-dataset"
DERIVATIVE_MODES = ('exact', 'finite_difference')

# trajectories integrated together per worker task; fixed so results do not depend on n_jobs
CHUNK_SIZE = 8


@dataclass
class Trajectory:
    traj_id: int
    initial_condition: np.ndarray
    times: np.ndarray
    states: np.ndarray
    derivatives: np.ndarray

    def __len__(self) -> int:
        return len(self.times)


@dataclass
class TrajectoryDataset:
    """Sampled trajectories with derivative targets and their provenance"""

    spec: SystemSpec
    trajectories: List[Trajectory]
    dt: float
    sigma: float = 0.0
    seed: int = 0
    t_span: Tuple[float, float] = (0.0, 10.0)
    derivative_mode: str = 'exact'
    substeps: int = 100
    extra: Dict[str, Any] = field(default_factory=dict)

    @property
    def n_traj(self) -> int:
        return len(self.trajectories)

    @property
    def d(self) -> int:
        return self.spec.d

    @property
    def columns(self) -> List[str]:
        return (
            ['traj_id', 't']
            + [f"r{i}" for i in range(self.d)]
            + [f"rdot{i}" for i in range(self.d)]
        )

    def __len__(self) -> int:
        return sum(len(t) for t in self.trajectories)

    def states(self) -> np.ndarray:
        """All samples stacked (N, d)"""
        return np.concatenate([t.states for t in self.trajectories], axis=0)

    def derivatives(self) -> np.ndarray:
        return np.concatenate([t.derivatives for t in self.trajectories], axis=0)

    def initial_conditions(self) -> np.ndarray:
        return np.array([t.initial_condition for t in self.trajectories])

    def subset(self, traj_ids: Sequence[int]) -> "TrajectoryDataset":
        wanted = set(int(i) for i in traj_ids)
        return replace(self, trajectories=[t for t in self.trajectories if t.traj_id in wanted])

    def manifest(self) -> Dict[str, Any]:
        return {
            'format': DATASET_FORMAT,
            'version': 1,
            'system': self.spec.to_dict(),
            'state_labels': list(self.spec.labels),
            'n_traj': self.n_traj,
            't_span': [float(self.t_span[0]), float(self.t_span[1])],
            'dt': self.dt,
            'sigma': self.sigma,
            'seed': self.seed,
            'derivative_mode': self.derivative_mode,
            'substeps': self.substeps,
            'columns': self.columns,
            'initial_conditions': [list(map(float, t.initial_condition)) for t in self.trajectories],
            **self.extra,
        }

    def to_frame(self) -> pd.DataFrame:
        frames = []
        for traj in self.trajectories:
            data = {'traj_id': np.full(len(traj), traj.traj_id, dtype=np.int64), 't': traj.times}
            for i in range(self.d):
                data[f"r{i}"] = traj.states[:, i]
            for i in range(self.d):
                data[f"rdot{i}"] = traj.derivatives[:, i]
            frames.append(pd.DataFrame(data))
        if not frames:
            return pd.DataFrame(columns=self.columns)
        return pd.concat(frames, ignore_index=True)


def _integrate_chunk(spec: SystemSpec, ics: np.ndarray, t_span, dt: float, substeps: int):
    system = get_system(spec)
    times, states = integrate(system.vector_field, ics, t_span, dt, substeps)
    # (K, B, d) -> (B, K, d)
    return times, np.transpose(states, (1, 0, 2))


def generate_dataset(
    spec: SystemSpec,
    n_traj: int,
    t_span: Tuple[float, float] = (0.0, 10.0),
    dt: float = 0.1,
    sigma: float = 0.0,
    seed: int = 0,
    derivative_mode: str = 'exact',
    substeps: int = 100,
    initial_conditions: Optional[np.ndarray] = None,
    n_jobs: int = 1,
) -> TrajectoryDataset:
    """
    Integrate `n_traj` trajectories with internal step dt / substeps and sample them every dt.

    Derivative targets are the exact vector field at the clean samples ('exact') or central
    differences of the noisy samples ('finite_difference'). With sigma > 0, independent
    Gaussian noise is added to states and, in exact mode, to the targets.
    """
    if n_traj < 1:
        raise ValueError(f"n_traj must be at least 1, got {n_traj}")
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if sigma < 0:
        raise ValueError(f"sigma must be non-negative, got {sigma}")
    if derivative_mode not in DERIVATIVE_MODES:
        raise ValueError(f"derivative_mode must be one of {DERIVATIVE_MODES}, got '{derivative_mode}'")

    system = get_system(spec)
    ic_seq, noise_seq = np.random.SeedSequence(seed).spawn(2)

    if initial_conditions is None:
        ics = system.sample_initial_conditions(n_traj, np.random.default_rng(ic_seq))
    else:
        ics = np.atleast_2d(np.array(initial_conditions, dtype=np.float64))
        if ics.shape != (n_traj, spec.d):
            raise ValueError(f"initial conditions have shape {ics.shape}, expected ({n_traj}, {spec.d})")

    for i, ic in enumerate(ics):
        try:
            system.check_state(ic)
        except DomainError as exc:
            raise InitialConditionError(i, str(exc))

    chunks = [ics[i:i + CHUNK_SIZE] for i in range(0, n_traj, CHUNK_SIZE)]
    results = Parallel(n_jobs=n_jobs)(
        delayed(_integrate_chunk)(spec, chunk, t_span, dt, substeps) for chunk in chunks
    )
    times = results[0][0]
    clean = np.concatenate([states for _, states in results], axis=0)

    noise_rngs = [np.random.default_rng(s) for s in noise_seq.spawn(n_traj)]
    trajectories = []
    for i in range(n_traj):
        states = clean[i].copy()
        if derivative_mode == 'exact':
            derivs = system.vector_field(states)
            if sigma > 0:
                states = states + noise_rngs[i].normal(0.0, sigma, size=states.shape)
                derivs = derivs + noise_rngs[i].normal(0.0, sigma, size=derivs.shape)
        else:
            if sigma > 0:
                states = states + noise_rngs[i].normal(0.0, sigma, size=states.shape)
            derivs = finite_difference_derivatives(states, dt)
        trajectories.append(Trajectory(i, ics[i].copy(), times.copy(), states, derivs))

    logger.info(f"✓ Generated {n_traj} {spec.kind.value} trajectories ({len(times)} samples each)")
    return TrajectoryDataset(
        spec=spec,
        trajectories=trajectories,
        dt=dt,
        sigma=sigma,
        seed=seed,
        t_span=(float(t_span[0]), float(t_span[1])),
        derivative_mode=derivative_mode,
        substeps=substeps,
    )


def canonicalize_dataset(dataset: TrajectoryDataset) -> TrajectoryDataset:
    """Map a Lotka-Volterra dataset to (Q, P) = (log n1, log n2)"""
    if dataset.spec.kind != SystemKind.LOTKA_VOLTERRA:
        raise ValueError(f"only Lotka-Volterra datasets can be canonicalized, got {dataset.spec.kind.value}")
    trajectories = []
    for traj in dataset.trajectories:
        states, derivs = to_canonical(traj.states, traj.derivatives)
        ic, _ = to_canonical(traj.initial_condition, np.zeros(2))
        trajectories.append(Trajectory(traj.traj_id, ic, traj.times.copy(), states, derivs))
    spec = SystemSpec(SystemKind.LOTKA_VOLTERRA_CANONICAL, dataset.spec.parameters)
    extra = dict(dataset.extra, canonicalized_from=SystemKind.LOTKA_VOLTERRA.value)
    return replace(dataset, spec=spec, trajectories=trajectories, extra=extra)


def conservation_report(dataset: TrajectoryDataset) -> Dict[str, Any]:
    """Maximum relative drift of the conserved quantity along each trajectory"""
    system = get_system(dataset.spec)
    drifts = []
    for traj in dataset.trajectories:
        energy = system.energy(traj.states)
        scale = abs(energy[0]) if abs(energy[0]) > 1e-12 else 1.0
        drifts.append(float(np.max(np.abs(energy - energy[0])) / scale))
    return {
        'max_relative_drift': max(drifts) if drifts else 0.0,
        'per_trajectory': drifts,
    }


def save_dataset(dataset: TrajectoryDataset, directory: PathLike) -> Path:
    directory = Path(directory)
    buffer = io.StringIO()
    dataset.to_frame().to_csv(buffer, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    atomic_write_text(directory / TABLE_FILE, buffer.getvalue())
    atomic_write_json(directory / MANIFEST_FILE, dataset.manifest())
    logger.info(f"✓ Saved dataset to {directory}")
    return directory


def load_dataset(directory: PathLike) -> TrajectoryDataset:
    directory = Path(directory)
    manifest_path = directory / MANIFEST_FILE
    if not manifest_path.exists():
        raise FileNotFoundError(f"Dataset manifest not found: {manifest_path}")
    manifest = read_json(manifest_path)
    if manifest.get('format') != DATASET_FORMAT:
        raise ValueError(f"{manifest_path} is not a dataset manifest")
    spec = SystemSpec.from_dict(manifest['system'])
    d = spec.d
    frame = pd.read_csv(directory / TABLE_FILE, float_precision='round_trip')
    expected = manifest['columns']
    if list(frame.columns) != expected:
        raise ValueError(f"table columns {list(frame.columns)} do not match manifest {expected}")

    ics = manifest.get('initial_conditions') or []
    trajectories = []
    for position, (traj_id, group) in enumerate(frame.groupby('traj_id', sort=True)):
        states = group[[f"r{i}" for i in range(d)]].to_numpy(dtype=np.float64)
        derivs = group[[f"rdot{i}" for i in range(d)]].to_numpy(dtype=np.float64)
        idx = int(traj_id)
        ic = np.array(ics[position], dtype=np.float64) if position < len(ics) else states[0].copy()
        trajectories.append(
            Trajectory(idx, ic, group['t'].to_numpy(dtype=np.float64), states, derivs)
        )

    known = {
        'format', 'version', 'system', 'state_labels', 'n_traj', 't_span', 'dt', 'sigma',
        'seed', 'derivative_mode', 'substeps', 'columns', 'initial_conditions',
    }
    return TrajectoryDataset(
        spec=spec,
        trajectories=trajectories,
        dt=float(manifest['dt']),
        sigma=float(manifest['sigma']),
        seed=int(manifest['seed']),
        t_span=tuple(manifest['t_span']),
        derivative_mode=manifest.get('derivative_mode', 'exact'),
        substeps=int(manifest.get('substeps', 100)),
        extra={k: v for k, v in manifest.items() if k not in known},
    )
