"""Noisy evolution on density matrices.

The noise channel set is deliberately small and deterministic: a symmetric
depolarizing channel after every gate (strength ``p1`` on a one-qubit gate's
target, ``p2`` on both qubits of a CNOT) and a symmetric readout-confusion
map at measurement.  Depolarizing here means mixing toward the maximally
mixed state, ρ → (1−p)·ρ + p·(I/2^k ⊗ tr_k ρ), so a single-qubit observable
contracts by exactly (1−p) per channel application.

Gate application reuses the statevector kernels on the density matrix's
flat view: a 2^n × 2^n matrix in C order is a 2n-qubit register whose row
qubit q is register qubit q and whose column qubit q is register qubit n+q;
U ρ U† is U on the row qubit and conj(U) on the column qubit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .circuits import Circuit
from .errors import CapacityError
from .statevector import StateVector, run_circuit

MAX_DENSITY_QUBITS = 10


@dataclass(frozen=True)
class NoiseModel:
    """Depolarizing + readout-confusion strengths for one backend."""

    p1: float = 0.0
    p2: float = 0.0
    p_readout: float = 0.0
    label: str = ""

    def __post_init__(self):
        for name in ("p1", "p2", "p_readout"):
            v = getattr(self, name)
            if not (0.0 <= v < 1.0 and math.isfinite(v)):
                raise ValueError(f"noise probability {name}={v!r} must be in [0, 1)")

    def to_wire(self) -> dict:
        return {"p1": self.p1, "p2": self.p2, "p_readout": self.p_readout, "label": self.label}

    @classmethod
    def from_wire(cls, obj: dict) -> NoiseModel:
        return cls(
            p1=float(obj.get("p1", 0.0)),
            p2=float(obj.get("p2", 0.0)),
            p_readout=float(obj.get("p_readout", 0.0)),
            label=str(obj.get("label", "")),
        )


@dataclass
class DensityMatrix:
    """2^n × 2^n complex matrix; Hermitian, unit trace, PSD up to rounding."""

    num_qubits: int
    entries: np.ndarray

    def trace(self) -> complex:
        return complex(np.trace(self.entries))

    def diagonal_probs(self) -> np.ndarray:
        return np.real(np.diagonal(self.entries)).copy()


def from_statevector(state: StateVector) -> DensityMatrix:
    amps = state.amplitudes
    return DensityMatrix(state.num_qubits, np.outer(amps, amps.conj()))


def _replace_with_mixed(entries: np.ndarray, n: int, qubits: tuple[int, ...]) -> np.ndarray:
    """I/2^k on the given qubits tensored with the partial trace over them."""
    view = entries.reshape([2] * (2 * n))
    letters = [chr(ord("a") + i) for i in range(2 * n)]
    for q in qubits:
        letters[n + q] = letters[q]
    removed = {n + q for q in qubits} | set(qubits)
    out = "".join(letters[i] for i in range(2 * n) if i not in removed)
    traced = np.einsum("".join(letters) + "->" + out, view)
    scale = 1.0 / (2 ** len(qubits))
    mixed = np.zeros_like(view)
    for bits in np.ndindex(*([2] * len(qubits))):
        idx: list = [slice(None)] * (2 * n)
        for q, b in zip(qubits, bits):
            idx[q] = b
            idx[n + q] = b
        mixed[tuple(idx)] = scale * traced
    return mixed.reshape(entries.shape)


def depolarize(rho: DensityMatrix, qubits: tuple[int, ...], p: float) -> None:
    """Apply the mixing depolarizing channel in place; no-op at p = 0."""
    if p == 0.0:
        return
    mixed = _replace_with_mixed(rho.entries, rho.num_qubits, qubits)
    rho.entries *= 1.0 - p
    rho.entries += p * mixed


def _apply_gate_rho(flat: np.ndarray, n: int, gate) -> None:
    # Row side uses the gate itself, column side its complex conjugate.
    kind = gate.kind
    if kind == "rx":
        kernels.apply_rx(flat, 2 * n, gate.target, gate.theta)
        kernels.apply_rx(flat, 2 * n, n + gate.target, -gate.theta)
    elif kind == "rz":
        kernels.apply_rz(flat, 2 * n, gate.target, gate.theta)
        kernels.apply_rz(flat, 2 * n, n + gate.target, -gate.theta)
    elif kind == "h":
        kernels.apply_h(flat, 2 * n, gate.target)
        kernels.apply_h(flat, 2 * n, n + gate.target)
    elif kind == "p":
        kernels.apply_phase(flat, 2 * n, gate.target, gate.theta)
        kernels.apply_phase(flat, 2 * n, n + gate.target, -gate.theta)
    elif kind == "cx":
        kernels.apply_cnot(flat, 2 * n, gate.control, gate.target)
        kernels.apply_cnot(flat, 2 * n, n + gate.control, n + gate.target)
    else:  # unreachable: Gate validates kind
        raise ValueError(f"unknown gate kind {kind!r}")


def run_circuit_noisy(circuit: Circuit, noise: NoiseModel) -> DensityMatrix:
    """Evolve |0…0⟩⟨0…0| gate by gate, depolarizing after every gate."""
    n = circuit.num_qubits
    if n > MAX_DENSITY_QUBITS:
        raise CapacityError(
            f"density-matrix simulation is limited to {MAX_DENSITY_QUBITS} qubits, got {n}"
        )
    entries = np.zeros((2**n, 2**n), dtype=np.complex128)
    entries[0, 0] = 1.0
    rho = DensityMatrix(n, entries)
    flat = entries.reshape(-1)
    for gate in circuit.gates:
        if gate.target >= n or (gate.control is not None and gate.control >= n):
            raise IndexError(f"gate {gate} out of range for {n} qubits")
        _apply_gate_rho(flat, n, gate)
        if gate.kind == "cx":
            depolarize(rho, (gate.control, gate.target), noise.p2)
        else:
            depolarize(rho, (gate.target,), noise.p1)
    return rho


def _confused_p0(rho: DensityMatrix, qubit: int, p_ro: float) -> float:
    probs = rho.diagonal_probs()
    mask = 1 << (rho.num_qubits - 1 - qubit)
    bits = (np.arange(probs.size) & mask) > 0
    p0 = float(probs[~bits].sum())
    p1 = float(probs[bits].sum())
    return p0 * (1.0 - p_ro) + p1 * p_ro


def noisy_expectation_z(
    rho: DensityMatrix,
    qubit: int,
    noise: NoiseModel,
    shots: int | None = None,
    seed: int = 0,
) -> float:
    """tr(ρ Z) through the readout-confusion map; sampled when shots given."""
    if not 0 <= qubit < rho.num_qubits:
        raise IndexError(f"qubit {qubit} out of range for {rho.num_qubits} qubits")
    p0 = min(max(_confused_p0(rho, qubit, noise.p_readout), 0.0), 1.0)
    if shots is None:
        return 2.0 * p0 - 1.0
    if shots <= 0:
        raise ValueError(f"shots must be positive, got {shots}")
    rng = np.random.default_rng(seed)
    zeros = int(rng.binomial(shots, p0))
    return 2.0 * zeros / shots - 1.0


def _allzeros_prob_confused(rho: DensityMatrix, p_ro: float) -> float:
    """Probability of reporting 0 on every qubit, given per-qubit confusion."""
    n = rho.num_qubits
    probs = rho.diagonal_probs()
    weights = np.ones(probs.size)
    for q in range(n):
        mask = 1 << (n - 1 - q)
        bits = (np.arange(probs.size) & mask) > 0
        weights *= np.where(bits, p_ro, 1.0 - p_ro)
    return float(np.dot(probs, weights))


def fidelity_via_uncompute(
    a_circ: Circuit,
    b_circ: Circuit,
    noise: NoiseModel | None = None,
    shots: int | None = None,
    seed: int = 0,
) -> float:
    """|⟨a|b⟩|² estimated as the all-zeros probability of b followed by a†."""
    if a_circ.num_qubits != b_circ.num_qubits:
        raise ValueError(
            f"width mismatch: {a_circ.num_qubits} vs {b_circ.num_qubits} qubits"
        )
    composed = Circuit(a_circ.num_qubits, list(b_circ.gates) + a_circ.inverse().gates)
    if noise is None:
        state = run_circuit(composed)
        p = abs(state.amplitudes[0]) ** 2
    else:
        rho = run_circuit_noisy(composed, noise)
        p = _allzeros_prob_confused(rho, noise.p_readout)
    p = min(max(float(p), 0.0), 1.0)
    if shots is None:
        return p
    if shots <= 0:
        raise ValueError(f"shots must be positive, got {shots}")
    rng = np.random.default_rng(seed)
    return int(rng.binomial(shots, p)) / shots
