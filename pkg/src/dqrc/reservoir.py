"""Fixed random reservoir topology and synchronous multi-pass propagation.

Every neuron reads exactly four inputs: ``k ∈ {0, 1, 2}`` recurrent signals
from other neurons and ``4 − k`` taps into the input window, with the window
taps on the lowest qubit indices.  The wiring is drawn once from the seed
and never changes.  A forward pass starts from an all-zero state and applies
``passes`` synchronous update rounds (every neuron reads the previous
round's snapshot), so results are independent of evaluation order.  State
is not carried across samples; temporal context lives in the window.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .backends import Backend
from .neuron import NeuronParams, ansatz_gates, random_neuron_params
from .circuits import Circuit, rx
from .seeds import derive_seed

NUM_INPUTS = 4
MAX_RECURRENT = 2

QUANTUM = "quantum"
CLASSICAL = "classical"


@dataclass(frozen=True)
class NeuronWiring:
    """Recurrent sources (other neuron indices) and window feature taps."""

    sources: tuple[int, ...]
    feature_taps: tuple[int, ...]

    @property
    def k(self) -> int:
        return len(self.sources)

    def __post_init__(self):
        if len(self.sources) + len(self.feature_taps) != NUM_INPUTS:
            raise ValueError(
                f"wiring must have {NUM_INPUTS} total inputs, got "
                f"{len(self.sources)} + {len(self.feature_taps)}"
            )
        if len(self.sources) > MAX_RECURRENT:
            raise ValueError(f"at most {MAX_RECURRENT} recurrent inputs, got {len(self.sources)}")
        if len(set(self.sources)) != len(self.sources):
            raise ValueError("recurrent sources must be distinct")


@dataclass
class ReservoirSpec:
    """Complete, seed-reproducible description of one reservoir."""

    num_neurons: int
    window_size: int
    kind: str
    wiring: list[NeuronWiring]
    neuron_params: list[NeuronParams] | None
    classical_weights: np.ndarray | None
    passes: int = 3
    seed: int = 0

    def __post_init__(self):
        if self.kind not in (QUANTUM, CLASSICAL):
            raise ValueError(f"kind must be {QUANTUM!r} or {CLASSICAL!r}, got {self.kind!r}")
        if self.passes < 1:
            raise ValueError("passes must be >= 1")
        if len(self.wiring) != self.num_neurons:
            raise ValueError("wiring length must equal num_neurons")
        for i, w in enumerate(self.wiring):
            for s in w.sources:
                if s == i:
                    raise ValueError(f"neuron {i} has a self-loop")
                if not 0 <= s < self.num_neurons:
                    raise ValueError(f"neuron {i} source {s} out of range")
            for t in w.feature_taps:
                if not 0 <= t < self.window_size:
                    raise ValueError(f"neuron {i} feature tap {t} out of range")
        if self.kind == QUANTUM:
            if self.neuron_params is None or len(self.neuron_params) != self.num_neurons:
                raise ValueError("quantum reservoir needs one NeuronParams per neuron")
        else:
            if self.classical_weights is None or self.classical_weights.shape != (
                self.num_neurons,
                NUM_INPUTS,
            ):
                raise ValueError("classical reservoir needs weights of shape (N, 4)")


@dataclass
class ReservoirState:
    """Neuron outputs after the final pass; quantum values lie in [−1, 1]."""

    values: np.ndarray


def generate_reservoir(
    num_neurons: int,
    window_size: int,
    kind: str = QUANTUM,
    seed: int = 0,
    passes: int = 3,
) -> ReservoirSpec:
    """Draw a reservoir topology and its fixed weights from a seed.

    Per neuron: the recurrent in-degree k is uniform on {0, 1, 2} (capped at
    num_neurons − 1 so small reservoirs stay constructible), sources are
    distinct other neurons, and feature taps are drawn with replacement from
    the window indices.
    """
    if num_neurons < 1:
        raise ValueError("num_neurons must be >= 1")
    if window_size < 1:
        raise ValueError("window_size must be >= 1")
    rng = np.random.default_rng(seed)
    wiring: list[NeuronWiring] = []
    neuron_params: list[NeuronParams] | None = [] if kind == QUANTUM else None
    classical_rows: list[np.ndarray] = []
    others = np.arange(num_neurons)
    for i in range(num_neurons):
        k = min(int(rng.integers(0, MAX_RECURRENT + 1)), num_neurons - 1)
        candidates = others[others != i]
        sources = tuple(int(s) for s in rng.choice(candidates, size=k, replace=False))
        taps = tuple(int(t) for t in rng.integers(0, window_size, size=NUM_INPUTS - k))
        wiring.append(NeuronWiring(sources=sources, feature_taps=taps))
        if kind == QUANTUM:
            neuron_params.append(random_neuron_params(rng))
        else:
            classical_rows.append(rng.uniform(-1.0, 1.0, size=NUM_INPUTS))
    return ReservoirSpec(
        num_neurons=num_neurons,
        window_size=window_size,
        kind=kind,
        wiring=wiring,
        neuron_params=neuron_params,
        classical_weights=np.vstack(classical_rows) if classical_rows else None,
        passes=passes,
        seed=seed,
    )


def reservoir_forward(
    spec: ReservoirSpec,
    window: np.ndarray,
    backend: Backend | None = None,
    seed: int = 0,
) -> ReservoirState:
    """Propagate one input window through the reservoir.

    The per-neuron input angles are the window taps followed by the previous
    round's source outputs.  ``seed`` only matters for sampled noisy
    backends; sub-seeds are derived per (pass, neuron).
    """
    window = np.asarray(window, dtype=float)
    if window.shape != (spec.window_size,):
        raise ValueError(f"window shape {window.shape} != ({spec.window_size},)")
    if not np.all(np.isfinite(window)):
        raise ValueError("window values must be finite")
    if spec.kind == QUANTUM and backend is None:
        raise ValueError("quantum reservoir forward requires a backend")

    if spec.kind == QUANTUM:
        # Ansatz gates are fixed per neuron; build them once per call.
        fixed_gates = [ansatz_gates(p) for p in spec.neuron_params]

    prev = np.zeros(spec.num_neurons)
    for pass_idx in range(spec.passes):
        new = np.empty(spec.num_neurons)
        for i, wiring in enumerate(spec.wiring):
            inputs = np.concatenate(
                [window[list(wiring.feature_taps)], prev[list(wiring.sources)]]
            )
            if spec.kind == CLASSICAL:
                new[i] = math.tanh(float(np.dot(spec.classical_weights[i], inputs)))
            else:
                fm = [rx(q, float(inputs[q])) for q in range(NUM_INPUTS)]
                circ = Circuit(NUM_INPUTS, fm + fixed_gates[i])
                try:
                    new[i] = backend.expectation(
                        circ, 0, seed=derive_seed(seed, pass_idx, i)
                    )
                except Exception as exc:
                    raise RuntimeError(
                        f"backend failed at reservoir neuron {i} (pass {pass_idx}): {exc}"
                    ) from exc
        prev = new
    return ReservoirState(prev)


def concat_states(states: list[ReservoirState]) -> ReservoirState:
    """Vertically concatenate reservoir outputs, reservoir order preserved."""
    if not states:
        raise ValueError("cannot concatenate zero reservoir states")
    return ReservoirState(np.concatenate([s.values for s in states]))


def spec_to_dict(spec: ReservoirSpec) -> dict:
    out = {
        "num_neurons": spec.num_neurons,
        "window_size": spec.window_size,
        "kind": spec.kind,
        "passes": spec.passes,
        "seed": spec.seed,
        "wiring": [
            {"sources": list(w.sources), "feature_taps": list(w.feature_taps)}
            for w in spec.wiring
        ],
    }
    if spec.kind == QUANTUM:
        out["neuron_weights"] = [p.weights.tolist() for p in spec.neuron_params]
    else:
        out["classical_weights"] = spec.classical_weights.tolist()
    return out


def spec_from_dict(obj: dict) -> ReservoirSpec:
    kind = obj["kind"]
    wiring = [
        NeuronWiring(tuple(w["sources"]), tuple(w["feature_taps"])) for w in obj["wiring"]
    ]
    neuron_params = None
    classical_weights = None
    if kind == QUANTUM:
        neuron_params = [NeuronParams(np.asarray(w)) for w in obj["neuron_weights"]]
    else:
        classical_weights = np.asarray(obj["classical_weights"], dtype=float)
    return ReservoirSpec(
        num_neurons=obj["num_neurons"],
        window_size=obj["window_size"],
        kind=kind,
        wiring=wiring,
        neuron_params=neuron_params,
        classical_weights=classical_weights,
        passes=obj.get("passes", 3),
        seed=obj.get("seed", 0),
    )


def save_spec(spec: ReservoirSpec, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(spec_to_dict(spec), fh)


def load_spec(path: str) -> ReservoirSpec:
    with open(path, encoding="utf-8") as fh:
        return spec_from_dict(json.load(fh))
