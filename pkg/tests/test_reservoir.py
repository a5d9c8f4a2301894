"""Reservoir generation, propagation semantics, and the brute-force oracle."""

import math

import numpy as np
import pytest
from scipy.stats import chi2

from dqrc.backends import Backend, IdealBackend
from dqrc.neuron import NeuronParams
from dqrc.reservoir import (
    CLASSICAL,
    QUANTUM,
    NeuronWiring,
    ReservoirSpec,
    concat_states,
    generate_reservoir,
    reservoir_forward,
    spec_to_dict,
)

from conftest import oracle_expectation_z, oracle_state
from dqrc.neuron import NeuronInput, neuron_circuit


def brute_forward(spec, window):
    """Independent three-pass evaluator using the dense-matrix neuron oracle."""
    prev = np.zeros(spec.num_neurons)
    for _ in range(spec.passes):
        new = np.empty(spec.num_neurons)
        for i, wiring in enumerate(spec.wiring):
            inputs = [window[t] for t in wiring.feature_taps] + [prev[s] for s in wiring.sources]
            if spec.kind == CLASSICAL:
                new[i] = math.tanh(float(np.dot(spec.classical_weights[i], inputs)))
            else:
                amps = oracle_state(
                    neuron_circuit(spec.neuron_params[i], NeuronInput(np.array(inputs)))
                )
                new[i] = oracle_expectation_z(amps, 4, 0)
        prev = new
    return prev


def test_generation_is_seed_deterministic():
    a = generate_reservoir(12, 4, kind=QUANTUM, seed=9)
    b = generate_reservoir(12, 4, kind=QUANTUM, seed=9)
    assert spec_to_dict(a) == spec_to_dict(b)
    c = generate_reservoir(12, 4, kind=QUANTUM, seed=10)
    assert spec_to_dict(a) != spec_to_dict(c)


def test_every_neuron_has_four_inputs():
    spec = generate_reservoir(10, 4, kind=QUANTUM, seed=1)
    for w in spec.wiring:
        assert len(w.sources) + len(w.feature_taps) == 4
        assert w.k <= 2


def test_sources_are_distinct_non_self_and_in_range():
    spec = generate_reservoir(30, 6, kind=CLASSICAL, seed=2)
    for i, w in enumerate(spec.wiring):
        assert i not in w.sources
        assert len(set(w.sources)) == len(w.sources)
        assert all(0 <= s < 30 for s in w.sources)
        assert all(0 <= t < 6 for t in w.feature_taps)


def test_recurrent_degree_is_uniform_over_many_neurons():
    spec = generate_reservoir(10000, 4, kind=CLASSICAL, seed=3)
    counts = np.bincount([w.k for w in spec.wiring], minlength=3)
    expected = 10000 / 3
    stat = float(((counts - expected) ** 2 / expected).sum())
    assert stat < chi2.ppf(0.99, df=2)


def test_single_neuron_forces_no_recurrence():
    spec = generate_reservoir(1, 4, kind=QUANTUM, seed=4)
    assert spec.wiring[0].k == 0


def test_classical_weights_in_range():
    spec = generate_reservoir(50, 4, kind=CLASSICAL, seed=5)
    assert np.all(np.abs(spec.classical_weights) <= 1.0)


def test_classical_zero_weights_give_zero_outputs():
    spec = generate_reservoir(6, 4, kind=CLASSICAL, seed=6)
    spec.classical_weights[:] = 0.0
    state = reservoir_forward(spec, np.array([0.4, 0.8, 0.1, 0.9]))
    assert np.array_equal(state.values, np.zeros(6))


def test_quantum_zero_ansatz_zero_window_outputs_one():
    spec = generate_reservoir(4, 4, kind=QUANTUM, seed=7)
    zero = NeuronParams(np.zeros((2, 4)))
    spec = ReservoirSpec(
        num_neurons=spec.num_neurons,
        window_size=spec.window_size,
        kind=QUANTUM,
        wiring=spec.wiring,
        neuron_params=[zero] * spec.num_neurons,
        classical_weights=None,
        passes=3,
        seed=spec.seed,
    )
    state = reservoir_forward(spec, np.zeros(4), IdealBackend())
    assert np.allclose(state.values, 1.0, atol=1e-12)


@pytest.mark.parametrize("kind", [QUANTUM, CLASSICAL])
@pytest.mark.parametrize("n", [1, 2, 3])
def test_forward_matches_brute_force_oracle(kind, n, rng):
    spec = generate_reservoir(n, 4, kind=kind, seed=100 + n)
    window = rng.uniform(0, 1, size=4)
    backend = IdealBackend() if kind == QUANTUM else None
    got = reservoir_forward(spec, window, backend)
    expected = brute_forward(spec, window)
    assert np.abs(got.values - expected).max() < 1e-10


def test_neuron_without_recurrence_is_constant_across_passes():
    spec = generate_reservoir(5, 4, kind=QUANTUM, seed=11)
    k0 = [i for i, w in enumerate(spec.wiring) if w.k == 0]
    assert k0, "seed should yield at least one k=0 neuron"
    window = np.array([0.3, 0.6, 0.2, 0.8])
    one_pass = ReservoirSpec(
        num_neurons=spec.num_neurons,
        window_size=spec.window_size,
        kind=spec.kind,
        wiring=spec.wiring,
        neuron_params=spec.neuron_params,
        classical_weights=None,
        passes=1,
        seed=spec.seed,
    )
    backend = IdealBackend()
    a = reservoir_forward(spec, window, backend)
    b = reservoir_forward(one_pass, window, backend)
    for i in k0:
        assert a.values[i] == pytest.approx(b.values[i], abs=1e-14)


def test_quantum_outputs_bounded(rng):
    spec = generate_reservoir(8, 4, kind=QUANTUM, seed=12)
    backend = IdealBackend()
    for _ in range(3):
        window = rng.uniform(-10, 10, size=4)
        state = reservoir_forward(spec, window, backend)
        assert np.all(np.abs(state.values) <= 1.0 + 1e-12)


def test_forward_is_deterministic():
    spec = generate_reservoir(6, 4, kind=QUANTUM, seed=13)
    window = np.array([0.1, 0.5, 0.9, 0.2])
    backend = IdealBackend()
    a = reservoir_forward(spec, window, backend)
    b = reservoir_forward(spec, window, backend)
    assert np.array_equal(a.values, b.values)


def test_forward_validates_window():
    spec = generate_reservoir(3, 4, kind=CLASSICAL, seed=14)
    with pytest.raises(ValueError):
        reservoir_forward(spec, np.zeros(5))
    with pytest.raises(ValueError):
        reservoir_forward(spec, np.array([0.0, 1.0, np.nan, 0.5]))


class _ExplodingBackend(Backend):
    def __init__(self):
        super().__init__("boom")

    def expectation(self, circuit, qubit, seed=0):
        raise RuntimeError("synthetic backend failure")

    def overlap(self, a, b, seed=0):
        raise RuntimeError("synthetic backend failure")


def test_backend_failure_names_the_neuron():
    spec = generate_reservoir(3, 4, kind=QUANTUM, seed=15)
    with pytest.raises(RuntimeError, match="reservoir neuron 0"):
        reservoir_forward(spec, np.zeros(4), _ExplodingBackend())


def test_concat_states():
    a = concat_states([reservoir_state([1.0, 2.0])])
    assert np.array_equal(a.values, [1.0, 2.0])
    b = concat_states([reservoir_state([1, 2, 3, 4, 5]), reservoir_state([6, 7, 8, 9, 10])])
    assert np.array_equal(b.values, np.arange(1, 11))
    # three reservoirs of 20 concatenate to the 3x20 feature length
    c = concat_states([reservoir_state(np.zeros(20))] * 3)
    assert c.values.shape == (60,)
    with pytest.raises(ValueError):
        concat_states([])


def reservoir_state(values):
    from dqrc.reservoir import ReservoirState

    return ReservoirState(np.asarray(values, dtype=float))


def test_spec_serialization_roundtrip(tmp_path):
    for kind in (QUANTUM, CLASSICAL):
        spec = generate_reservoir(5, 4, kind=kind, seed=16)
        path = tmp_path / f"{kind}.json"
        from dqrc.reservoir import load_spec, save_spec

        save_spec(spec, str(path))
        back = load_spec(str(path))
        assert spec_to_dict(back) == spec_to_dict(spec)
        # a reloaded quantum spec evaluates identically
        if kind == QUANTUM:
            window = np.array([0.2, 0.4, 0.6, 0.8])
            backend = IdealBackend()
            assert np.array_equal(
                reservoir_forward(spec, window, backend).values,
                reservoir_forward(back, window, backend).values,
            )


def test_wiring_validation():
    with pytest.raises(ValueError):
        NeuronWiring(sources=(1, 2, 3), feature_taps=(0,))
    with pytest.raises(ValueError):
        NeuronWiring(sources=(1, 1), feature_taps=(0, 0))
    with pytest.raises(ValueError):
        NeuronWiring(sources=(0,), feature_taps=(0, 0))  # only 3 inputs
