"""Trainable output layers: classical ridge and quantum-kernel ridge.

The classical path solves W = Y Rᵀ (R Rᵀ + λI)⁻¹ with a Cholesky
factorization (R has features in rows, samples in columns).  The quantum
path replaces the inner product with the squared overlap of two feature-map
states and solves the standard dual system (G + λI) α = y; the two agree
exactly when the kernel is the plain dot product, which the test suite
checks.  Both can be split into multiple independent instances over
contiguous feature slices, with predictions combined by unweighted mean.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .backends import Backend
from .circuits import Circuit, Gate, h, phase
from .seeds import derive_seed

DEFAULT_LAMBDA = 1e-6
DEFAULT_MAX_TRAIN_SAMPLES = 2000

RIDGE = "ridge"
KERNEL_RIDGE = "kernel_ridge"


# --------------------------------------------------------------------------
# Classical ridge (primal form)
# --------------------------------------------------------------------------


@dataclass
class RidgeModel:
    weights: np.ndarray
    lam: float


def ridge_fit(features: np.ndarray, targets: np.ndarray, lam: float = DEFAULT_LAMBDA) -> RidgeModel:
    """Fit W over a d × m feature matrix (columns are samples)."""
    R = np.asarray(features, dtype=float)
    y = np.asarray(targets, dtype=float)
    if R.ndim != 2 or y.shape != (R.shape[1],):
        raise ValueError(f"feature matrix {R.shape} and targets {y.shape} do not align")
    if not (np.all(np.isfinite(R)) and np.all(np.isfinite(y))):
        raise ValueError("features and targets must be finite")
    if lam <= 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    d = R.shape[0]
    gram = R @ R.T + lam * np.eye(d)
    weights = cho_solve(cho_factor(gram), R @ y)
    return RidgeModel(weights=weights, lam=lam)


def ridge_predict(model: RidgeModel, feature: np.ndarray) -> float:
    f = np.asarray(feature, dtype=float)
    if f.shape != model.weights.shape:
        raise ValueError(f"feature shape {f.shape} != weights shape {model.weights.shape}")
    return float(np.dot(model.weights, f))


# --------------------------------------------------------------------------
# Quantum-kernel ridge (dual form)
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class KernelFeatureMapConfig:
    """Feature-map sizing: n qubits, B blocks, L layers (L·n ≥ dimension)."""

    num_qubits: int
    num_blocks: int = 2
    num_layers: int = 1

    def __post_init__(self):
        if self.num_qubits < 1 or self.num_blocks < 1 or self.num_layers < 1:
            raise ValueError("num_qubits, num_blocks and num_layers must all be >= 1")

    @classmethod
    def for_dimension(cls, dim: int, num_qubits: int, num_blocks: int = 2) -> KernelFeatureMapConfig:
        """Size the layer count to fit a feature vector of length ``dim``."""
        if dim < 1:
            raise ValueError("feature dimension must be >= 1")
        return cls(
            num_qubits=num_qubits,
            num_blocks=num_blocks,
            num_layers=math.ceil(dim / num_qubits),
        )


def build_kernel_feature_map(config: KernelFeatureMapConfig, feature: np.ndarray) -> Circuit:
    """Hadamard–phase encoding circuit; layer l encodes features l·n … l·n+n−1.

    Each block repeats the full layer stack; phase angles are twice the
    feature value, and positions beyond the feature length are padded with
    zero.
    """
    x = np.asarray(feature, dtype=float)
    n = config.num_qubits
    capacity = n * config.num_layers
    if x.ndim != 1 or x.size > capacity:
        raise ValueError(f"feature of shape {x.shape} does not fit {capacity} encoding slots")
    if not np.all(np.isfinite(x)):
        raise ValueError("feature values must be finite")
    gates: list[Gate] = []
    for _block in range(config.num_blocks):
        for layer in range(config.num_layers):
            for q in range(n):
                gates.append(h(q))
            for q in range(n):
                idx = layer * n + q
                val = float(x[idx]) if idx < x.size else 0.0
                gates.append(phase(q, 2.0 * val))
    return Circuit(n, gates)


def kernel_value(
    config: KernelFeatureMapConfig,
    a: np.ndarray,
    b: np.ndarray,
    backend: Backend,
    seed: int = 0,
) -> float:
    """K(a, b) = |⟨Φ(a)|Φ(b)⟩|² via the backend (overlap or compute–uncompute)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"kernel arguments differ in shape: {a.shape} vs {b.shape}")
    return backend.overlap(
        build_kernel_feature_map(config, a), build_kernel_feature_map(config, b), seed=seed
    )


@dataclass
class KernelRidgeModel:
    support: np.ndarray  # m × d training rows retained for prediction
    alphas: np.ndarray
    config: KernelFeatureMapConfig
    lam: float
    train_seed: int = 0
    subsample_stride: int = 1
    _support_circuits: list[Circuit] | None = field(default=None, repr=False, compare=False)

    def support_circuits(self) -> list[Circuit]:
        if self._support_circuits is None:
            self._support_circuits = [
                build_kernel_feature_map(self.config, row) for row in self.support
            ]
        return self._support_circuits


def solve_dual(gram: np.ndarray, targets: np.ndarray, lam: float) -> np.ndarray:
    """Solve (G + λI) α = y; on factorization failure report conditioning."""
    G = np.asarray(gram, dtype=float)
    y = np.asarray(targets, dtype=float)
    if lam <= 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    m = G.shape[0]
    try:
        return cho_solve(cho_factor(G + lam * np.eye(m)), y)
    except np.linalg.LinAlgError as exc:
        min_eig = float(np.linalg.eigvalsh(G)[0])
        raise ArithmeticError(
            f"kernel system factorization failed (min Gram eigenvalue ≈ {min_eig:.3e})"
        ) from exc


def uniform_stride(num_samples: int, max_samples: int) -> int:
    """Smallest stride that brings the sample count under the cap."""
    if max_samples < 1:
        raise ValueError("max_samples must be >= 1")
    return max(1, math.ceil(num_samples / max_samples))


def kernel_ridge_fit(
    features: np.ndarray,
    targets: np.ndarray,
    config: KernelFeatureMapConfig,
    lam: float = DEFAULT_LAMBDA,
    backend: Backend | None = None,
    max_train_samples: int = DEFAULT_MAX_TRAIN_SAMPLES,
    seed: int = 0,
) -> KernelRidgeModel:
    """Assemble the Gram matrix (upper triangle, mirrored) and solve the dual.

    Training rows beyond ``max_train_samples`` are thinned by uniform-stride
    subsampling; the stride is recorded on the model so the fit is
    reproducible from its artifact.
    """
    X = np.asarray(features, dtype=float)
    y = np.asarray(targets, dtype=float)
    if X.ndim != 2 or y.shape != (X.shape[0],):
        raise ValueError(f"feature matrix {X.shape} and targets {y.shape} do not align")
    if backend is None:
        raise ValueError("kernel ridge fitting requires a backend")
    stride = uniform_stride(X.shape[0], max_train_samples)
    X = X[::stride]
    y = y[::stride]
    m = X.shape[0]
    circuits = [build_kernel_feature_map(config, row) for row in X]
    gram = np.empty((m, m))
    for i in range(m):
        for j in range(i, m):
            gram[i, j] = backend.overlap(
                circuits[i], circuits[j], seed=derive_seed(seed, "gram", i, j)
            )
            gram[j, i] = gram[i, j]
    alphas = solve_dual(gram, y, lam)
    return KernelRidgeModel(
        support=X.copy(),
        alphas=alphas,
        config=config,
        lam=lam,
        train_seed=seed,
        subsample_stride=stride,
    )


def kernel_ridge_predict(
    model: KernelRidgeModel,
    feature: np.ndarray,
    backend: Backend | None = None,
    seed: int = 0,
) -> float:
    """Σ_i α_i · K(feature, support_i)."""
    f = np.asarray(feature, dtype=float)
    if f.shape != (model.support.shape[1],):
        raise ValueError(f"feature shape {f.shape} != support dimension {model.support.shape[1]}")
    if backend is None:
        raise ValueError("kernel ridge prediction requires a backend")
    circ = build_kernel_feature_map(model.config, f)
    total = 0.0
    for i, support_circ in enumerate(model.support_circuits()):
        total += model.alphas[i] * backend.overlap(
            circ, support_circ, seed=derive_seed(seed, "predict", i)
        )
    return float(total)


# --------------------------------------------------------------------------
# Distributed (multi-instance) readout
# --------------------------------------------------------------------------


@dataclass
class MultiReadout:
    """Independent readout instances over contiguous feature slices."""

    kind: str
    slices: list[tuple[int, int]]
    models: list[RidgeModel | KernelRidgeModel]


def slice_bounds(dim: int, instances: int) -> list[tuple[int, int]]:
    """Split [0, dim) into contiguous slices; earlier slices get any remainder."""
    if instances < 1:
        raise ValueError("instance count must be >= 1")
    if instances > dim:
        raise ValueError(f"{instances} instances exceed feature dimension {dim}")
    base, rem = divmod(dim, instances)
    bounds = []
    start = 0
    for i in range(instances):
        width = base + (1 if i < rem else 0)
        bounds.append((start, start + width))
        start += width
    return bounds


def multi_readout_fit(
    features: np.ndarray,
    targets: np.ndarray,
    instances: int,
    kind: str,
    lam: float = DEFAULT_LAMBDA,
    kernel_qubits: int = 10,
    num_blocks: int = 2,
    backends: list[Backend] | None = None,
    max_train_samples: int = DEFAULT_MAX_TRAIN_SAMPLES,
    seed: int = 0,
    slices: list[tuple[int, int]] | None = None,
) -> MultiReadout:
    """Fit one readout per feature slice against the shared targets.

    ``features`` has samples in rows.  ``backends`` supplies one execution
    context per instance (quantum kind only); ``slices`` overrides the
    default even split, e.g. to route each reservoir's block to its own
    instance.
    """
    X = np.asarray(features, dtype=float)
    if X.ndim != 2:
        raise ValueError("expected a 2-D feature matrix (samples in rows)")
    if kind not in (RIDGE, KERNEL_RIDGE):
        raise ValueError(f"unknown readout kind {kind!r}")
    if slices is None:
        slices = slice_bounds(X.shape[1], instances)
    elif len(slices) != instances:
        raise ValueError("explicit slices must match the instance count")
    models: list[RidgeModel | KernelRidgeModel] = []
    for idx, (start, stop) in enumerate(slices):
        block = X[:, start:stop]
        if kind == RIDGE:
            models.append(ridge_fit(block.T, targets, lam))
        else:
            if backends is None:
                raise ValueError("quantum readout fitting requires backends")
            config = KernelFeatureMapConfig.for_dimension(stop - start, kernel_qubits, num_blocks)
            models.append(
                kernel_ridge_fit(
                    block,
                    targets,
                    config,
                    lam=lam,
                    backend=backends[idx % len(backends)],
                    max_train_samples=max_train_samples,
                    seed=derive_seed(seed, "readout", idx),
                )
            )
    return MultiReadout(kind=kind, slices=list(slices), models=models)


def multi_readout_predict(
    readout: MultiReadout,
    feature: np.ndarray,
    backends: list[Backend] | None = None,
    seed: int = 0,
) -> float:
    """Arithmetic mean of the per-instance predictions."""
    f = np.asarray(feature, dtype=float)
    preds = []
    for idx, ((start, stop), model) in enumerate(zip(readout.slices, readout.models)):
        block = f[start:stop]
        if readout.kind == RIDGE:
            preds.append(ridge_predict(model, block))
        else:
            if backends is None:
                raise ValueError("quantum readout prediction requires backends")
            preds.append(
                kernel_ridge_predict(
                    model,
                    block,
                    backend=backends[idx % len(backends)],
                    seed=derive_seed(seed, "readout", idx),
                )
            )
    return float(np.mean(preds))


# --------------------------------------------------------------------------
# Model artifacts
# --------------------------------------------------------------------------


def readout_to_dict(readout: MultiReadout) -> dict:
    models = []
    for model in readout.models:
        if isinstance(model, RidgeModel):
            models.append({"weights": model.weights.tolist(), "lambda": model.lam})
        else:
            models.append(
                {
                    "support": model.support.tolist(),
                    "alphas": model.alphas.tolist(),
                    "lambda": model.lam,
                    "config": {
                        "num_qubits": model.config.num_qubits,
                        "num_blocks": model.config.num_blocks,
                        "num_layers": model.config.num_layers,
                    },
                    "train_seed": model.train_seed,
                    "subsample_stride": model.subsample_stride,
                }
            )
    return {"kind": readout.kind, "slices": [list(s) for s in readout.slices], "models": models}


def readout_from_dict(obj: dict) -> MultiReadout:
    kind = obj["kind"]
    models: list[RidgeModel | KernelRidgeModel] = []
    for entry in obj["models"]:
        if kind == RIDGE:
            models.append(RidgeModel(np.asarray(entry["weights"]), entry["lambda"]))
        else:
            cfg = entry["config"]
            models.append(
                KernelRidgeModel(
                    support=np.asarray(entry["support"]),
                    alphas=np.asarray(entry["alphas"]),
                    config=KernelFeatureMapConfig(
                        cfg["num_qubits"], cfg["num_blocks"], cfg["num_layers"]
                    ),
                    lam=entry["lambda"],
                    train_seed=entry.get("train_seed", 0),
                    subsample_stride=entry.get("subsample_stride", 1),
                )
            )
    return MultiReadout(
        kind=kind, slices=[tuple(s) for s in obj["slices"]], models=models
    )


def save_readout(readout: MultiReadout, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(readout_to_dict(readout), fh)


def load_readout(path: str) -> MultiReadout:
    with open(path, encoding="utf-8") as fh:
        return readout_from_dict(json.load(fh))
