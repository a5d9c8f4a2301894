"""Architecture composition, backend placement, and parallel execution.

The four architectures cross single/multiple reservoirs with single/multiple
ridge readout instances; a pipeline is fully determined by its configuration
and master seed.  Quantum work units (reservoirs, ridge instances) are
placed onto backends by a fixed policy: with exactly three backends and 1,
2, 3 or 5 units the placement follows a fixed distribution table (a single
unit goes to the second backend; five units split 2/2/1), otherwise units
are assigned round-robin.  All per-unit seeds are derived from the master
seed and unit indices, never from thread identity, so results are invariant
to worker count and to in-process versus remote execution.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .backends import Backend, IdealBackend, NoisyBackend
from .calibration import resolve_calibration
from .errors import ConfigError
from .readout import (
    DEFAULT_MAX_TRAIN_SAMPLES,
    KERNEL_RIDGE,
    RIDGE,
    MultiReadout,
    multi_readout_fit,
    multi_readout_predict,
    slice_bounds,
)
from .reservoir import CLASSICAL, QUANTUM, ReservoirSpec, generate_reservoir, reservoir_forward
from .seeds import derive_seed
from .worker import RemoteBackend, TcpTransport

VARIANTS = ("SRSR", "MRSR", "SRMR", "MRMR")

# Units-per-backend placement for exactly three backends, in listed order.
TABLE_PLACEMENT = {1: (0, 1, 0), 2: (1, 1, 0), 3: (1, 1, 1), 5: (2, 2, 1)}


@dataclass(frozen=True)
class ArchitectureConfig:
    variant: str
    num_reservoirs: int = 1
    neurons_per_reservoir: int = 10
    ridge_instances: int = 1
    kernel_qubits: int = 10
    reservoir_kind: str = QUANTUM
    readout_kind: str = QUANTUM
    lam: float = 1e-6
    passes: int = 3
    seed: int = 0

    def validate(self) -> None:
        if self.variant not in VARIANTS:
            raise ConfigError(f"unknown variant {self.variant!r}; expected one of {VARIANTS}")
        if self.num_reservoirs < 1 or self.neurons_per_reservoir < 1 or self.ridge_instances < 1:
            raise ConfigError("reservoir/instance counts must be >= 1")
        if self.variant in ("SRSR", "SRMR") and self.num_reservoirs != 1:
            raise ConfigError(f"{self.variant} requires exactly one reservoir")
        if self.variant in ("SRSR", "MRSR") and self.ridge_instances != 1:
            raise ConfigError(f"{self.variant} requires exactly one ridge instance")
        if self.variant == "MRMR" and self.ridge_instances != self.num_reservoirs:
            raise ConfigError("MRMR couples each reservoir to exactly one ridge instance")
        if self.reservoir_kind not in (QUANTUM, CLASSICAL):
            raise ConfigError(f"unknown reservoir kind {self.reservoir_kind!r}")
        if self.readout_kind not in (QUANTUM, CLASSICAL):
            raise ConfigError(f"unknown readout kind {self.readout_kind!r}")
        if self.lam <= 0:
            raise ConfigError("lambda must be positive")
        if self.passes < 1:
            raise ConfigError("passes must be >= 1")

    @property
    def total_neurons(self) -> int:
        return self.num_reservoirs * self.neurons_per_reservoir


@dataclass(frozen=True)
class BackendSpec:
    name: str
    mode: str = "ideal"
    calibration: str | None = None
    shots: int | None = None
    remote: str | None = None  # "host:port" for a TCP worker

    def validate(self) -> None:
        if self.mode not in ("ideal", "noisy"):
            raise ConfigError(f"backend mode must be ideal or noisy, got {self.mode!r}")
        if self.mode == "noisy" and not self.calibration:
            raise ConfigError(f"noisy backend {self.name!r} requires a calibration")


def make_backend(spec: BackendSpec) -> Backend:
    spec.validate()
    noise = None
    if spec.mode == "noisy":
        noise = resolve_calibration(spec.calibration).noise_model()
    if spec.remote:
        host, _, port = spec.remote.rpartition(":")
        return RemoteBackend(
            TcpTransport(host or "127.0.0.1", int(port)),
            name=spec.name,
            noise=noise,
            shots=spec.shots,
        )
    if noise is None:
        return IdealBackend(name=spec.name, shots=spec.shots)
    return NoisyBackend(noise, name=spec.name, shots=spec.shots)


@dataclass
class Assignment:
    """Work-unit index → backend index; every unit covered exactly once."""

    unit_to_backend: list[int]

    def counts(self, num_backends: int) -> list[int]:
        out = [0] * num_backends
        for b in self.unit_to_backend:
            out[b] += 1
        return out


def assign_backends(num_units: int, backends: list) -> Assignment:
    """Fixed placement policy (see module docstring)."""
    if not backends:
        raise ValueError("at least one backend is required")
    if num_units < 1:
        raise ValueError("at least one work unit is required")
    if len(backends) == 3 and num_units in TABLE_PLACEMENT:
        mapping: list[int] = []
        for backend_idx, count in enumerate(TABLE_PLACEMENT[num_units]):
            mapping.extend([backend_idx] * count)
        return Assignment(mapping)
    return Assignment([i % len(backends) for i in range(num_units)])


@dataclass
class Pipeline:
    config: ArchitectureConfig
    window_size: int
    reservoirs: list[ReservoirSpec]
    slices: list[tuple[int, int]]


@dataclass
class TrainedPipeline:
    pipeline: Pipeline
    readout: MultiReadout


def build_pipeline(config: ArchitectureConfig, window_size: int) -> Pipeline:
    """Generate the seeded reservoirs and the readout slice plan."""
    config.validate()
    reservoirs = [
        generate_reservoir(
            config.neurons_per_reservoir,
            window_size,
            kind=config.reservoir_kind,
            seed=derive_seed(config.seed, "reservoir", i),
            passes=config.passes,
        )
        for i in range(config.num_reservoirs)
    ]
    slices = slice_bounds(config.total_neurons, config.ridge_instances)
    return Pipeline(config=config, window_size=window_size, reservoirs=reservoirs, slices=slices)


def _run_with_retry(fn, unit_label: str):
    try:
        return fn()
    except Exception:
        try:
            return fn()  # one retry; requests are idempotent
        except Exception as exc:
            raise RuntimeError(f"work unit {unit_label} failed after retry: {exc}") from exc


def compute_features(
    pipeline: Pipeline,
    windows: np.ndarray,
    backends: list[Backend],
    workers: int = 1,
    stage: str = "train",
) -> np.ndarray:
    """Reservoir forwards for every (sample, reservoir) unit, in fixed slots.

    Tasks are dispatched to a thread pool but each writes only its own
    feature block, so the assembled matrix is independent of completion
    order and worker count.
    """
    windows = np.asarray(windows, dtype=float)
    config = pipeline.config
    num_res = len(pipeline.reservoirs)
    assignment = assign_backends(num_res, backends)
    offsets = np.cumsum([0] + [r.num_neurons for r in pipeline.reservoirs])
    features = np.empty((windows.shape[0], offsets[-1]))

    def task(sample_idx: int, res_idx: int) -> None:
        spec = pipeline.reservoirs[res_idx]
        backend = (
            backends[assignment.unit_to_backend[res_idx]] if spec.kind == QUANTUM else None
        )
        seed = derive_seed(config.seed, stage, res_idx, sample_idx)

        def attempt():
            return reservoir_forward(spec, windows[sample_idx], backend, seed=seed)

        state = _run_with_retry(attempt, f"(sample {sample_idx}, reservoir {res_idx})")
        features[sample_idx, offsets[res_idx] : offsets[res_idx + 1]] = state.values

    pairs = [(s, r) for s in range(windows.shape[0]) for r in range(num_res)]
    if workers <= 1:
        for s, r in pairs:
            task(s, r)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(task, s, r) for s, r in pairs]
            for fut in futures:
                fut.result()
    return features


def _readout_backends(pipeline: Pipeline, backends: list[Backend]) -> list[Backend]:
    assignment = assign_backends(pipeline.config.ridge_instances, backends)
    return [backends[i] for i in assignment.unit_to_backend]


def train(
    pipeline: Pipeline,
    windows: np.ndarray,
    targets: np.ndarray,
    backends: list[Backend],
    max_train_samples: int = DEFAULT_MAX_TRAIN_SAMPLES,
    workers: int = 1,
) -> TrainedPipeline:
    """Run all training-sample reservoir forwards, then fit the readout(s)."""
    config = pipeline.config
    features = compute_features(pipeline, windows, backends, workers=workers, stage="train")
    kind = RIDGE if config.readout_kind == CLASSICAL else KERNEL_RIDGE
    readout = multi_readout_fit(
        features,
        np.asarray(targets, dtype=float),
        instances=config.ridge_instances,
        kind=kind,
        lam=config.lam,
        kernel_qubits=config.kernel_qubits,
        backends=_readout_backends(pipeline, backends) if kind == KERNEL_RIDGE else None,
        max_train_samples=max_train_samples,
        seed=derive_seed(config.seed, "readout-fit"),
        slices=pipeline.slices,
    )
    return TrainedPipeline(pipeline=pipeline, readout=readout)


def predict(
    trained: TrainedPipeline,
    windows: np.ndarray,
    backends: list[Backend],
    workers: int = 1,
) -> np.ndarray:
    """One prediction per window: forwards, slicing, readouts, mean."""
    pipeline = trained.pipeline
    config = pipeline.config
    features = compute_features(pipeline, windows, backends, workers=workers, stage="predict")
    ridge_backends = (
        _readout_backends(pipeline, backends) if trained.readout.kind == KERNEL_RIDGE else None
    )
    out = np.empty(features.shape[0])
    for s in range(features.shape[0]):
        out[s] = multi_readout_predict(
            trained.readout,
            features[s],
            backends=ridge_backends,
            seed=derive_seed(config.seed, "predict-readout", s),
        )
    return out
