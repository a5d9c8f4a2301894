"""Exact statevector simulation: gate application, expectations, overlaps."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .circuits import Circuit, Gate


@dataclass
class StateVector:
    """Amplitudes of an ``num_qubits``-qubit pure state (complex128, 2^n)."""

    num_qubits: int
    amplitudes: np.ndarray

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def copy(self) -> StateVector:
        return StateVector(self.num_qubits, self.amplitudes.copy())


def zero_state(num_qubits: int) -> StateVector:
    amps = np.zeros(2**num_qubits, dtype=np.complex128)
    amps[0] = 1.0
    return StateVector(num_qubits, amps)


def _apply_gate_inplace(amps: np.ndarray, n: int, gate: Gate) -> None:
    if gate.target >= n or (gate.control is not None and gate.control >= n):
        raise IndexError(f"gate {gate} out of range for {n} qubits")
    kind = gate.kind
    if kind == "rx":
        kernels.apply_rx(amps, n, gate.target, gate.theta)
    elif kind == "rz":
        kernels.apply_rz(amps, n, gate.target, gate.theta)
    elif kind == "h":
        kernels.apply_h(amps, n, gate.target)
    elif kind == "p":
        kernels.apply_phase(amps, n, gate.target, gate.theta)
    elif kind == "cx":
        kernels.apply_cnot(amps, n, gate.control, gate.target)
    else:  # unreachable: Gate validates kind
        raise ValueError(f"unknown gate kind {kind!r}")


def apply_gate(state: StateVector, gate: Gate) -> StateVector:
    """Return the gate's unitary applied to ``state`` (input untouched)."""
    out = state.copy()
    _apply_gate_inplace(out.amplitudes, out.num_qubits, gate)
    return out


def run_circuit(circuit: Circuit) -> StateVector:
    """Apply the circuit's gates in order starting from |0…0⟩."""
    state = zero_state(circuit.num_qubits)
    amps = state.amplitudes
    n = circuit.num_qubits
    for gate in circuit.gates:
        _apply_gate_inplace(amps, n, gate)
    return state


def expectation_z(state: StateVector, qubit: int) -> float:
    """⟨Z⟩ on one qubit: Σ_b |amp_b|² · (+1 if the qubit's bit is 0 else −1)."""
    if not 0 <= qubit < state.num_qubits:
        raise IndexError(f"qubit {qubit} out of range for {state.num_qubits} qubits")
    return kernels.expval_z(state.amplitudes, state.num_qubits, qubit)


def overlap_sq(a: StateVector, b: StateVector) -> float:
    """|⟨a|b⟩|², clamped to [0, 1] against floating-point rounding."""
    if a.num_qubits != b.num_qubits:
        raise ValueError(f"width mismatch: {a.num_qubits} vs {b.num_qubits} qubits")
    val = abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2
    return min(max(float(val), 0.0), 1.0)
