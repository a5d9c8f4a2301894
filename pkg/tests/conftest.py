"""Shared oracles for the test suite.

The dense-matrix helpers here are deliberately independent of the package's
gate kernels: every gate is materialized as a full 2^n × 2^n matrix and
composed by matrix products, so they can serve as an oracle for the fast
simulation paths.
"""

from __future__ import annotations

import math

import numpy as np
import pytest

from dqrc.circuits import Circuit, Gate, cnot, h, phase, rx, rz


def single_qubit_matrix(gate: Gate) -> np.ndarray:
    if gate.kind == "rx":
        c = math.cos(gate.theta / 2)
        s = math.sin(gate.theta / 2)
        return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)
    if gate.kind == "rz":
        return np.array(
            [[np.exp(-0.5j * gate.theta), 0], [0, np.exp(0.5j * gate.theta)]], dtype=complex
        )
    if gate.kind == "h":
        return np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
    if gate.kind == "p":
        return np.array([[1, 0], [0, np.exp(1j * gate.theta)]], dtype=complex)
    raise ValueError(f"not a single-qubit gate: {gate}")


def embed_gate(gate: Gate, n: int) -> np.ndarray:
    """Full 2^n × 2^n matrix for one gate (qubit 0 = most significant bit)."""
    if gate.kind == "cx":
        dim = 2**n
        mat = np.zeros((dim, dim), dtype=complex)
        cmask = 1 << (n - 1 - gate.control)
        tmask = 1 << (n - 1 - gate.target)
        for i in range(dim):
            j = i ^ tmask if i & cmask else i
            mat[j, i] = 1.0
        return mat
    out = np.array([[1.0]], dtype=complex)
    m = single_qubit_matrix(gate)
    eye = np.eye(2, dtype=complex)
    for q in range(n):
        out = np.kron(out, m if q == gate.target else eye)
    return out


def circuit_unitary(circuit: Circuit) -> np.ndarray:
    u = np.eye(2**circuit.num_qubits, dtype=complex)
    for gate in circuit.gates:
        u = embed_gate(gate, circuit.num_qubits) @ u
    return u


def oracle_state(circuit: Circuit) -> np.ndarray:
    e0 = np.zeros(2**circuit.num_qubits, dtype=complex)
    e0[0] = 1.0
    return circuit_unitary(circuit) @ e0


def oracle_expectation_z(amps: np.ndarray, n: int, qubit: int) -> float:
    probs = np.abs(amps) ** 2
    mask = 1 << (n - 1 - qubit)
    signs = np.where((np.arange(probs.size) & mask) > 0, -1.0, 1.0)
    return float(np.dot(probs, signs))


def random_circuit(rng: np.random.Generator, n: int, num_gates: int) -> Circuit:
    gates = []
    for _ in range(num_gates):
        kind = rng.integers(0, 5)
        q = int(rng.integers(0, n))
        theta = float(rng.uniform(0, 2 * np.pi))
        if kind == 0:
            gates.append(rx(q, theta))
        elif kind == 1:
            gates.append(rz(q, theta))
        elif kind == 2:
            gates.append(h(q))
        elif kind == 3:
            gates.append(phase(q, theta))
        else:
            if n < 2:
                gates.append(h(q))
                continue
            t = int((q + 1 + rng.integers(0, n - 1)) % n)
            gates.append(cnot(q, t))
    return Circuit(n, gates)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)
