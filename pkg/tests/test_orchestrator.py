"""Architecture invariants, placement policy, determinism, and retries."""

import numpy as np
import pytest

from dqrc.backends import Backend, IdealBackend
from dqrc.data import SplitSpec, make_windows, synthesize_series
from dqrc.errors import ConfigError
from dqrc.orchestrator import (
    ArchitectureConfig,
    BackendSpec,
    assign_backends,
    build_pipeline,
    compute_features,
    make_backend,
    predict,
    train,
)
from dqrc.readout import multi_readout_predict, readout_to_dict
from dqrc.reservoir import spec_to_dict


def small_dataset(length=160, seed=0):
    series = synthesize_series(length, seed=seed)
    split = SplitSpec(length - 64, 30, 30)
    return make_windows(series, 4, split)


def quantum_config(**overrides):
    base = dict(
        variant="SRSR",
        neurons_per_reservoir=4,
        reservoir_kind="quantum",
        readout_kind="quantum",
        kernel_qubits=4,
        seed=21,
    )
    base.update(overrides)
    return ArchitectureConfig(**base)


# --------------------------------------------------------------------------
# configuration invariants
# --------------------------------------------------------------------------


def test_variant_invariants():
    with pytest.raises(ConfigError):
        ArchitectureConfig(variant="SRSR", num_reservoirs=2).validate()
    with pytest.raises(ConfigError):
        ArchitectureConfig(variant="SRMR", num_reservoirs=3, ridge_instances=3).validate()
    with pytest.raises(ConfigError):
        ArchitectureConfig(variant="MRSR", num_reservoirs=2, ridge_instances=2).validate()
    with pytest.raises(ConfigError):
        ArchitectureConfig(variant="MRMR", num_reservoirs=3, ridge_instances=2).validate()
    with pytest.raises(ConfigError):
        ArchitectureConfig(variant="XXXX").validate()
    with pytest.raises(ConfigError):
        ArchitectureConfig(variant="SRSR", reservoir_kind="analog").validate()
    with pytest.raises(ConfigError):
        ArchitectureConfig(variant="SRSR", lam=0.0).validate()
    ArchitectureConfig(variant="MRMR", num_reservoirs=3, ridge_instances=3).validate()


def test_backend_spec_invariants():
    with pytest.raises(ConfigError):
        BackendSpec(name="x", mode="noisy").validate()
    with pytest.raises(ConfigError):
        BackendSpec(name="x", mode="warp").validate()
    BackendSpec(name="x", mode="noisy", calibration="ibm_brisbane").validate()


def test_make_backend_kinds():
    ideal = make_backend(BackendSpec(name="a", mode="ideal"))
    assert ideal.name == "a"
    noisy = make_backend(BackendSpec(name="b", mode="noisy", calibration="ionq_aria1"))
    assert noisy.noise.p2 == pytest.approx(1.42e-2)


# --------------------------------------------------------------------------
# placement policy
# --------------------------------------------------------------------------


def test_placement_three_backends_table_rows():
    backends = ["marrakesh", "brisbane", "aria"]
    assert assign_backends(1, backends).unit_to_backend == [1]
    assert assign_backends(2, backends).unit_to_backend == [0, 1]
    assert assign_backends(3, backends).unit_to_backend == [0, 1, 2]
    assert assign_backends(5, backends).unit_to_backend == [0, 0, 1, 1, 2]
    assert assign_backends(5, backends).counts(3) == [2, 2, 1]


def test_placement_fallback_round_robin():
    assert assign_backends(4, ["a"]).unit_to_backend == [0, 0, 0, 0]
    assert assign_backends(4, ["a", "b", "c"]).unit_to_backend == [0, 1, 2, 0]
    assert assign_backends(2, ["a", "b"]).unit_to_backend == [0, 1]


def test_placement_requires_backends_and_units():
    with pytest.raises(ValueError):
        assign_backends(2, [])
    with pytest.raises(ValueError):
        assign_backends(0, ["a"])


# --------------------------------------------------------------------------
# pipeline construction
# --------------------------------------------------------------------------


def test_srsr_equals_one_reservoir_mrsr():
    a = build_pipeline(quantum_config(variant="SRSR", neurons_per_reservoir=10), 4)
    b = build_pipeline(
        quantum_config(variant="MRSR", num_reservoirs=1, neurons_per_reservoir=10), 4
    )
    assert [spec_to_dict(r) for r in a.reservoirs] == [spec_to_dict(r) for r in b.reservoirs]
    assert a.slices == b.slices


def test_mrmr_routes_each_reservoir_to_its_instance():
    pipe = build_pipeline(
        quantum_config(variant="MRMR", num_reservoirs=3, neurons_per_reservoir=10, ridge_instances=3),
        4,
    )
    assert pipe.slices == [(0, 10), (10, 20), (20, 30)]


def test_srmr_slice_sizing():
    pipe = build_pipeline(
        quantum_config(variant="SRMR", neurons_per_reservoir=10, ridge_instances=2, kernel_qubits=5),
        4,
    )
    assert pipe.slices == [(0, 5), (5, 10)]


# --------------------------------------------------------------------------
# train / predict behavior
# --------------------------------------------------------------------------


def test_worker_count_does_not_change_results():
    train_ds, _va, test_ds = small_dataset()
    cfg = quantum_config()
    backends = [IdealBackend("a"), IdealBackend("b"), IdealBackend("c")]
    pipe = build_pipeline(cfg, 4)
    t1 = train(pipe, train_ds.windows, train_ds.targets, backends, workers=1)
    p1 = predict(t1, test_ds.windows, backends, workers=1)
    t3 = train(pipe, train_ds.windows, train_ds.targets, backends, workers=3)
    p3 = predict(t3, test_ds.windows, backends, workers=3)
    assert readout_to_dict(t1.readout) == readout_to_dict(t3.readout)
    assert np.array_equal(p1, p3)


def test_classical_pipeline_never_touches_backends():
    train_ds, _va, test_ds = small_dataset()
    cfg = quantum_config(reservoir_kind="classical", readout_kind="classical")
    backends = [IdealBackend("a")]
    pipe = build_pipeline(cfg, 4)
    trained = train(pipe, train_ds.windows, train_ds.targets, backends)
    predict(trained, test_ds.windows, backends)
    assert backends[0].dispatch_count == 0


def test_quantum_dispatch_counts_proportional_to_assigned_neurons():
    train_ds, _va, _te = small_dataset(length=80)
    cfg = quantum_config(
        variant="MRSR", num_reservoirs=3, neurons_per_reservoir=5, readout_kind="classical"
    )
    backends = [IdealBackend("m"), IdealBackend("b"), IdealBackend("a")]
    pipe = build_pipeline(cfg, 4)
    train(pipe, train_ds.windows, train_ds.targets, backends)
    m = train_ds.windows.shape[0]
    expected = m * cfg.passes * cfg.neurons_per_reservoir  # one reservoir per backend
    assert [b.dispatch_count for b in backends] == [expected] * 3


def test_zero_weight_classical_pipeline_predicts_zero():
    train_ds, _va, test_ds = small_dataset()
    cfg = quantum_config(reservoir_kind="classical", readout_kind="classical")
    pipe = build_pipeline(cfg, 4)
    for spec in pipe.reservoirs:
        spec.classical_weights[:] = 0.0
    trained = train(pipe, train_ds.windows, train_ds.targets, [IdealBackend()])
    preds = predict(trained, test_ds.windows, [IdealBackend()])
    assert np.array_equal(preds, np.zeros_like(preds))


def test_predict_matches_manual_composition():
    train_ds, _va, test_ds = small_dataset()
    cfg = quantum_config()
    backends = [IdealBackend()]
    pipe = build_pipeline(cfg, 4)
    trained = train(pipe, train_ds.windows, train_ds.targets, backends)
    preds = predict(trained, test_ds.windows, backends)
    # reference composition of the module operations, single threaded
    feats = compute_features(pipe, test_ds.windows, backends, workers=1, stage="predict")
    from dqrc.seeds import derive_seed

    manual = np.array(
        [
            multi_readout_predict(
                trained.readout,
                feats[s],
                backends=[backends[0]],
                seed=derive_seed(cfg.seed, "predict-readout", s),
            )
            for s in range(feats.shape[0])
        ]
    )
    assert np.array_equal(preds, manual)


class _FlakyBackend(Backend):
    """Fails the first `failures` expectation calls, then delegates."""

    def __init__(self, failures):
        super().__init__("flaky")
        self._inner = IdealBackend()
        self.remaining = failures

    def expectation(self, circuit, qubit, seed=0):
        if self.remaining > 0:
            self.remaining -= 1
            raise ConnectionError("synthetic outage")
        return self._inner.expectation(circuit, qubit, seed=seed)

    def overlap(self, a, b, seed=0):
        return self._inner.overlap(a, b, seed=seed)


def test_train_retries_once_and_recovers():
    train_ds, _va, _te = small_dataset(length=80)
    cfg = quantum_config(readout_kind="classical")
    pipe = build_pipeline(cfg, 4)
    flaky = _FlakyBackend(failures=1)
    trained = train(pipe, train_ds.windows, train_ds.targets, [flaky])
    clean = train(pipe, train_ds.windows, train_ds.targets, [IdealBackend()])
    assert np.array_equal(trained.readout.models[0].weights, clean.readout.models[0].weights)


def test_train_aborts_after_second_failure_naming_the_unit():
    train_ds, _va, _te = small_dataset(length=80)
    cfg = quantum_config(readout_kind="classical")
    pipe = build_pipeline(cfg, 4)
    flaky = _FlakyBackend(failures=10**9)
    with pytest.raises(RuntimeError, match=r"work unit \(sample 0, reservoir 0\)"):
        train(pipe, train_ds.windows, train_ds.targets, [flaky])


def test_noisy_end_to_end_runs_and_is_deterministic():
    train_ds, _va, test_ds = small_dataset(length=90)
    cfg = quantum_config(
        variant="MRSR", num_reservoirs=2, neurons_per_reservoir=2, kernel_qubits=2, lam=1e-3
    )
    specs = [
        BackendSpec(name="m", mode="noisy", calibration="ibm_marrakesh"),
        BackendSpec(name="b", mode="noisy", calibration="ibm_brisbane"),
        BackendSpec(name="a", mode="noisy", calibration="ionq_aria1"),
    ]
    pipe = build_pipeline(cfg, 4)

    def run():
        backends = [make_backend(s) for s in specs]
        trained = train(pipe, train_ds.windows, train_ds.targets, backends, max_train_samples=30)
        return predict(trained, test_ds.windows, backends)

    p1 = run()
    p2 = run()
    assert np.array_equal(p1, p2)
    assert np.all(np.isfinite(p1))


def test_sampled_gram_failure_reports_min_eigenvalue():
    # a shot-sampled Gram matrix can lose positive definiteness; the solver
    # must surface the conditioning rather than a bare LinAlgError
    from dqrc.readout import solve_dual

    gram = np.array([[1.0, 0.9, 0.1], [0.9, 1.0, 0.95], [0.1, 0.95, 1.0]])
    assert np.linalg.eigvalsh(gram).min() < 0
    with pytest.raises(ArithmeticError, match="min Gram eigenvalue"):
        solve_dual(gram, np.ones(3), lam=1e-6)
