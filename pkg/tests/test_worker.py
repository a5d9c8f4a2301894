"""Worker protocol: request handling, transports, and fault recovery."""

import io
import json
import math
import subprocess
import sys
import threading

import numpy as np
import pytest

from dqrc.backends import IdealBackend, NoisyBackend
from dqrc.circuits import Circuit, cnot, h, rx
from dqrc.density import NoiseModel
from dqrc.errors import WorkerError
from dqrc.worker import (
    RemoteBackend,
    SubprocessTransport,
    TcpTransport,
    make_tcp_server,
    serve_stream,
    worker_call,
)

BELL = Circuit(2, [h(0), cnot(0, 1)]).to_wire()


def test_expectation_request_bell():
    response = worker_call({"id": 1, "kind": "expectation", "circuit": BELL, "qubit": 0})
    assert response == {"id": 1, "value": pytest.approx(0.0, abs=1e-15)}


def test_unknown_kind():
    response = worker_call({"id": 7, "kind": "frobnicate"})
    assert response == {"id": 7, "error": "unknown kind"}


def test_malformed_request_reports_error_with_id():
    response = worker_call({"id": 9, "kind": "expectation"})
    assert response["id"] == 9
    assert "error" in response


def test_overlap_request_matches_local_backend():
    a = Circuit(2, [rx(0, 0.4)])
    b = Circuit(2, [rx(0, 1.3), h(1)])
    response = worker_call(
        {"id": 2, "kind": "overlap", "circuits": [a.to_wire(), b.to_wire()]}
    )
    assert response["value"] == pytest.approx(IdealBackend().overlap(a, b), abs=1e-15)


def test_noisy_request_matches_local_noisy_backend():
    noise = NoiseModel(p1=0.02, p2=0.03, p_readout=0.01)
    circ = Circuit(2, [rx(0, 0.9), cnot(0, 1)])
    response = worker_call(
        {
            "id": 3,
            "kind": "expectation",
            "circuit": circ.to_wire(),
            "qubit": 0,
            "noise": noise.to_wire(),
        }
    )
    assert response["value"] == pytest.approx(
        NoisyBackend(noise).expectation(circ, 0), abs=1e-15
    )


def test_sampled_request_is_seed_deterministic():
    circ = Circuit(1, [rx(0, 1.0)]).to_wire()
    req = {"id": 4, "kind": "expectation", "circuit": circ, "qubit": 0, "shots": 200, "seed": 5}
    assert worker_call(dict(req)) == worker_call(dict(req))


def test_serve_stream_roundtrip():
    lines = [
        json.dumps({"id": 1, "kind": "expectation", "circuit": BELL, "qubit": 0}),
        "this is not json",
        json.dumps({"id": 2, "kind": "nada"}),
    ]
    out = io.StringIO()
    serve_stream(io.StringIO("\n".join(lines) + "\n"), out)
    responses = [json.loads(line) for line in out.getvalue().splitlines()]
    assert responses[0]["id"] == 1 and responses[0]["value"] == pytest.approx(0.0)
    assert responses[1]["id"] is None and "malformed" in responses[1]["error"]
    assert responses[2] == {"id": 2, "error": "unknown kind"}


# --------------------------------------------------------------------------
# stdio subprocess worker
# --------------------------------------------------------------------------


def stdio_worker_argv():
    return [sys.executable, "-m", "dqrc.cli", "worker", "--stdio"]


def test_remote_backend_over_stdio_matches_local():
    local = IdealBackend()
    remote = RemoteBackend(SubprocessTransport(stdio_worker_argv()))
    try:
        rng = np.random.default_rng(0)
        for _ in range(5):
            theta = float(rng.uniform(0, 2 * math.pi))
            circ = Circuit(2, [rx(0, theta), cnot(0, 1), h(1)])
            assert remote.expectation(circ, 0) == local.expectation(circ, 0)
            other = Circuit(2, [h(0), rx(1, theta)])
            assert remote.overlap(circ, other) == local.overlap(circ, other)
        assert remote.dispatch_count == 10
    finally:
        remote.close()


def test_remote_backend_reports_worker_errors():
    remote = RemoteBackend(SubprocessTransport(stdio_worker_argv()))
    try:
        with pytest.raises(WorkerError, match="out of range"):
            remote.expectation(Circuit(2, [h(0)]), 5)
    finally:
        remote.close()


def test_remote_noisy_backend_matches_local_noisy():
    noise = NoiseModel(p1=0.01, p2=0.02, p_readout=0.03, label="b")
    local = NoisyBackend(noise)
    remote = RemoteBackend(SubprocessTransport(stdio_worker_argv()), noise=noise)
    circ = Circuit(2, [rx(0, 0.8), cnot(0, 1)])
    other = Circuit(2, [h(0), rx(1, 0.4)])
    try:
        assert remote.expectation(circ, 0) == local.expectation(circ, 0)
        assert remote.overlap(circ, other) == local.overlap(circ, other)
    finally:
        remote.close()


def test_worker_default_calibration_noise(tmp_path):
    # a worker started with a calibration applies it to requests without
    # an explicit noise field; "noise": null still forces ideal
    noise = NoiseModel(p1=0.05, label="default")
    out = io.StringIO()
    circ = Circuit(1, [rx(0, 0.6)]).to_wire()
    lines = [
        json.dumps({"id": 1, "kind": "expectation", "circuit": circ, "qubit": 0}),
        json.dumps({"id": 2, "kind": "expectation", "circuit": circ, "qubit": 0, "noise": None}),
    ]
    serve_stream(io.StringIO("\n".join(lines) + "\n"), out, default_noise=noise)
    responses = [json.loads(line) for line in out.getvalue().splitlines()]
    assert responses[0]["value"] == pytest.approx(0.95 * math.cos(0.6), abs=1e-12)
    assert responses[1]["value"] == pytest.approx(math.cos(0.6), abs=1e-12)


def test_subprocess_transport_reconnects_after_kill():
    transport = SubprocessTransport(stdio_worker_argv())
    remote = RemoteBackend(transport)
    circ = Circuit(1, [rx(0, 0.7)])
    try:
        first = remote.expectation(circ, 0)
        transport._proc.kill()
        transport._proc.wait()
        with pytest.raises(WorkerError):
            remote.expectation(circ, 0)
        # transport lazily respawns the worker on the next call
        assert remote.expectation(circ, 0) == first
    finally:
        remote.close()


# --------------------------------------------------------------------------
# TCP worker
# --------------------------------------------------------------------------


@pytest.fixture
def tcp_worker():
    server = make_tcp_server("127.0.0.1", 0)
    port = server.server_address[1]
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield port
    server.shutdown()
    server.server_close()


def test_remote_backend_over_tcp_matches_local(tcp_worker):
    local = IdealBackend()
    remote = RemoteBackend(TcpTransport("127.0.0.1", tcp_worker))
    try:
        circ = Circuit(3, [h(0), cnot(0, 2), rx(1, 0.3)])
        assert remote.expectation(circ, 2) == local.expectation(circ, 2)
    finally:
        remote.close()


def test_tcp_worker_serves_concurrent_clients(tcp_worker):
    results = {}

    def client(idx):
        remote = RemoteBackend(TcpTransport("127.0.0.1", tcp_worker))
        try:
            results[idx] = remote.expectation(Circuit(1, [rx(0, 0.1 * idx)]), 0)
        finally:
            remote.close()

    threads = [threading.Thread(target=client, args=(i,)) for i in range(4)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    for i in range(4):
        assert results[i] == pytest.approx(math.cos(0.1 * i), abs=1e-12)


def test_kill_and_restart_mid_batch_gives_identical_results():
    """A worker dying mid-batch and coming back must not change any value."""
    argv = [sys.executable, "-m", "dqrc.cli", "worker", "--listen", "127.0.0.1:0"]
    # run the first worker in-process to learn a free port, then reuse it
    server = make_tcp_server("127.0.0.1", 0)
    port = server.server_address[1]
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()

    circs = [Circuit(2, [rx(0, 0.2 * i), cnot(0, 1)]) for i in range(6)]
    local = IdealBackend()
    expected = [local.expectation(c, 0) for c in circs]

    remote = RemoteBackend(TcpTransport("127.0.0.1", port))
    got = []
    try:
        for i, circ in enumerate(circs):
            if i == 3:
                # hard-stop the worker between requests, then bring up a
                # replacement on the same port
                server.shutdown()
                server.server_close()
                thread.join()
                server = make_tcp_server("127.0.0.1", port)
                thread = threading.Thread(target=server.serve_forever, daemon=True)
                thread.start()
                remote.transport.close()  # simulate the broken connection

            def attempt(c=circ):
                return remote.expectation(c, 0)

            try:
                got.append(attempt())
            except WorkerError:
                got.append(attempt())  # retry-once policy
    finally:
        remote.close()
        server.shutdown()
        server.server_close()
    assert got == expected
