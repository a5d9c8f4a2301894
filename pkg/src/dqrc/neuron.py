"""A single quantum neuron: angle-encoded inputs, fixed random ansatz, ⟨Z⟩ out.

The neuron is a 4-qubit circuit by default.  Its feature map is one RX per
qubit with the input value as the rotation angle; the ansatz repeats B
structural blocks of per-qubit RX rotations followed by CNOT–RZ–CNOT on
each adjacent pair (control below target, RZ angle = difference of the two
qubits' block weights).  Ansatz weights are drawn once at initialization
and never trained.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .backends import Backend
from .circuits import Circuit, Gate, cnot, rx, rz

DEFAULT_QUBITS = 4
DEFAULT_BLOCKS = 2


@dataclass(frozen=True)
class NeuronParams:
    """Fixed ansatz weights, shape (num_blocks, num_qubits), radians."""

    weights: np.ndarray
    num_qubits: int = DEFAULT_QUBITS
    num_blocks: int = DEFAULT_BLOCKS

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.shape != (self.num_blocks, self.num_qubits):
            raise ValueError(
                f"weights shape {w.shape} != ({self.num_blocks}, {self.num_qubits})"
            )
        if not np.all(np.isfinite(w)):
            raise ValueError("ansatz weights must be finite")
        object.__setattr__(self, "weights", w)


@dataclass(frozen=True)
class NeuronInput:
    """One rotation angle per qubit, radians."""

    angles: np.ndarray
    num_qubits: int = DEFAULT_QUBITS

    def __post_init__(self):
        a = np.asarray(self.angles, dtype=float)
        if a.shape != (self.num_qubits,):
            raise ValueError(f"expected {self.num_qubits} input angles, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise ValueError("input angles must be finite")
        object.__setattr__(self, "angles", a)


def random_neuron_params(
    rng: np.random.Generator,
    num_qubits: int = DEFAULT_QUBITS,
    num_blocks: int = DEFAULT_BLOCKS,
) -> NeuronParams:
    """Draw fixed ansatz weights uniform on [0, 2π)."""
    weights = rng.uniform(0.0, 2.0 * np.pi, size=(num_blocks, num_qubits))
    return NeuronParams(weights, num_qubits=num_qubits, num_blocks=num_blocks)


def build_feature_map(inp: NeuronInput) -> Circuit:
    """Angle encoding: RX(angles[q]) on qubit q, in qubit order."""
    gates = [rx(q, float(inp.angles[q])) for q in range(inp.num_qubits)]
    return Circuit(inp.num_qubits, gates)


def ansatz_gates(params: NeuronParams) -> list[Gate]:
    gates: list[Gate] = []
    n = params.num_qubits
    for block in range(params.num_blocks):
        w = params.weights[block]
        for q in range(n):
            gates.append(rx(q, float(w[q])))
        for i in range(1, n):
            gates.append(cnot(i - 1, i))
            gates.append(rz(i, float(w[i] - w[i - 1])))
            gates.append(cnot(i - 1, i))
    return gates


def build_ansatz(params: NeuronParams) -> Circuit:
    """The fixed entangling ansatz as a standalone circuit."""
    return Circuit(params.num_qubits, ansatz_gates(params))


def neuron_circuit(params: NeuronParams, inp: NeuronInput) -> Circuit:
    if params.num_qubits != inp.num_qubits:
        raise ValueError(
            f"params are {params.num_qubits}-qubit but input is {inp.num_qubits}-qubit"
        )
    return Circuit(params.num_qubits, build_feature_map(inp).gates + ansatz_gates(params))


def neuron_forward(
    params: NeuronParams,
    inp: NeuronInput,
    backend: Backend,
    observable_qubit: int = 0,
    seed: int = 0,
) -> float:
    """⟨Z⟩ on the observable qubit after feature map then ansatz."""
    circ = neuron_circuit(params, inp)
    return backend.expectation(circ, observable_qubit, seed=seed)
