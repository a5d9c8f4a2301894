"""Benchmark the compiled gate kernels against the pure-numpy fallback.

Runs the package's three hot workloads through both implementations and
prints a timing table:

    python3 benchmarks/bench_kernels.py
"""

from __future__ import annotations

import time

import numpy as np

from dqrc import _kernels_py
from dqrc.circuits import Circuit
from dqrc.neuron import NeuronInput, neuron_circuit, random_neuron_params
from dqrc.readout import KernelFeatureMapConfig, build_kernel_feature_map

try:
    from dqrc import _kernels_c
except ImportError:
    _kernels_c = None


def run_circuit_with(impl, circuit: Circuit) -> np.ndarray:
    amps = np.zeros(2**circuit.num_qubits, dtype=np.complex128)
    amps[0] = 1.0
    n = circuit.num_qubits
    for g in circuit.gates:
        if g.kind == "rx":
            impl.apply_rx(amps, n, g.target, g.theta)
        elif g.kind == "rz":
            impl.apply_rz(amps, n, g.target, g.theta)
        elif g.kind == "h":
            impl.apply_h(amps, n, g.target)
        elif g.kind == "p":
            impl.apply_phase(amps, n, g.target, g.theta)
        else:
            impl.apply_cnot(amps, n, g.control, g.target)
    return amps


def bench(fn, repeats: int) -> float:
    fn()  # warm up
    started = time.perf_counter()
    for _ in range(repeats):
        fn()
    return (time.perf_counter() - started) / repeats


def main() -> None:
    rng = np.random.default_rng(0)
    neuron = neuron_circuit(
        random_neuron_params(rng), NeuronInput(rng.uniform(0, 1, size=4))
    )
    config = KernelFeatureMapConfig.for_dimension(10, num_qubits=10)
    feature_map = build_kernel_feature_map(config, rng.uniform(-1, 1, size=10))

    # a deeper register to stress per-amplitude cost
    gates = []
    from dqrc.circuits import cnot, h, rx

    for i in range(200):
        q = i % 8
        gates.append(rx(q, 0.1 * i))
        gates.append(h((q + 3) % 8))
        gates.append(cnot(q, (q + 1) % 8))
    deep = Circuit(8, gates)

    cases = [
        ("4-qubit neuron circuit (30 gates)", neuron, 2000),
        ("10-qubit kernel feature map (40 gates)", feature_map, 500),
        ("8-qubit deep circuit (600 gates)", deep, 50),
    ]
    impls = [("python", _kernels_py)]
    if _kernels_c is not None:
        impls.insert(0, ("cython", _kernels_c))

    print(f"{'workload':<42}" + "".join(f"{name:>12}" for name, _ in impls) + f"{'speedup':>10}")
    for label, circ, repeats in cases:
        times = [bench(lambda impl=impl: run_circuit_with(impl, circ), repeats) for _, impl in impls]
        row = f"{label:<42}" + "".join(f"{t * 1e6:>10.1f}us" for t in times)
        if len(times) == 2:
            row += f"{times[1] / times[0]:>9.1f}x"
        print(row)

    if _kernels_c is not None:
        check = np.abs(
            run_circuit_with(_kernels_c, deep) - run_circuit_with(_kernels_py, deep)
        ).max()
        print(f"\nmax |Δamplitude| between implementations on the deep circuit: {check:.2e}")


if __name__ == "__main__":
    main()
