"""Execution contexts for circuits: ideal and calibration-driven noisy.

A backend answers two kinds of request, the Z expectation of a circuit's
output state and the squared overlap of two circuits' output states, and
counts every dispatch so placement policies can be audited.  All sampling
randomness enters through the per-call seed, never through backend state,
so results are independent of scheduling and thread count.
"""

from __future__ import annotations

import threading

import numpy as np

from .circuits import Circuit
from .density import NoiseModel, fidelity_via_uncompute, noisy_expectation_z, run_circuit_noisy
from .statevector import StateVector, expectation_z, run_circuit


class Backend:
    """Shared surface: expectation/overlap dispatch with an audit counter."""

    def __init__(self, name: str):
        self.name = name
        self._count = 0
        self._count_lock = threading.Lock()

    def _tick(self) -> None:
        with self._count_lock:
            self._count += 1

    @property
    def dispatch_count(self) -> int:
        return self._count

    def reset_dispatch_count(self) -> None:
        with self._count_lock:
            self._count = 0

    def expectation(self, circuit: Circuit, qubit: int, seed: int = 0) -> float:
        raise NotImplementedError

    def overlap(self, a: Circuit, b: Circuit, seed: int = 0) -> float:
        raise NotImplementedError


def _sample_from_prob(p0: float, shots: int, seed: int) -> float:
    if shots <= 0:
        raise ValueError(f"shots must be positive, got {shots}")
    rng = np.random.default_rng(seed)
    return int(rng.binomial(shots, min(max(p0, 0.0), 1.0))) / shots


class IdealBackend(Backend):
    """Exact statevector execution with a per-backend state cache.

    The cache is keyed by circuit contents, so kernel Gram matrices cost one
    circuit run per distinct feature vector instead of one per matrix entry.
    When the cache fills up it is cleared wholesale; sizing it above the
    working set (training + prediction samples) keeps it warm.
    """

    def __init__(self, name: str = "ideal", shots: int | None = None, cache_size: int = 16384):
        super().__init__(name)
        self.shots = shots
        self._cache: dict[tuple, np.ndarray] = {}
        self._cache_size = cache_size
        self._cache_lock = threading.Lock()

    def _state(self, circuit: Circuit) -> np.ndarray:
        key = circuit.cache_key()
        with self._cache_lock:
            amps = self._cache.get(key)
        if amps is None:
            amps = run_circuit(circuit).amplitudes
            with self._cache_lock:
                if len(self._cache) >= self._cache_size:
                    self._cache.clear()
                self._cache[key] = amps
        return amps

    def expectation(self, circuit: Circuit, qubit: int, seed: int = 0) -> float:
        self._tick()
        state = StateVector(circuit.num_qubits, self._state(circuit))
        z = expectation_z(state, qubit)
        if self.shots is None:
            return z
        zeros = _sample_from_prob((1.0 + z) / 2.0, self.shots, seed)
        return 2.0 * zeros - 1.0

    def overlap(self, a: Circuit, b: Circuit, seed: int = 0) -> float:
        self._tick()
        if a.num_qubits != b.num_qubits:
            raise ValueError(f"width mismatch: {a.num_qubits} vs {b.num_qubits} qubits")
        va = self._state(a)
        vb = self._state(b)
        p = min(max(float(abs(np.vdot(va, vb)) ** 2), 0.0), 1.0)
        if self.shots is None:
            return p
        return _sample_from_prob(p, self.shots, seed)


class NoisyBackend(Backend):
    """Density-matrix execution under a calibration-derived noise model."""

    def __init__(self, noise: NoiseModel, name: str | None = None, shots: int | None = None):
        super().__init__(name or noise.label or "noisy")
        self.noise = noise
        self.shots = shots

    def expectation(self, circuit: Circuit, qubit: int, seed: int = 0) -> float:
        self._tick()
        rho = run_circuit_noisy(circuit, self.noise)
        return noisy_expectation_z(rho, qubit, self.noise, shots=self.shots, seed=seed)

    def overlap(self, a: Circuit, b: Circuit, seed: int = 0) -> float:
        self._tick()
        return fidelity_via_uncompute(a, b, noise=self.noise, shots=self.shots, seed=seed)
