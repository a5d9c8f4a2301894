"""Newline-delimited JSON worker protocol (server and client sides).

Requests carry an id, a kind (``expectation`` or ``overlap``), wire-format
circuits, and optional noise/shots/seed; responses echo the id with either
a value or an error string.  Requests are pure functions of their payload,
so retrying after a dropped connection is always safe.  The server answers
each connection's requests in order; the client serializes calls over one
connection, which keeps request/response pairing trivial.

A worker process serves either on stdio (one worker per pipe pair) or as a
threaded TCP server.  Worker-side backends are pooled per (noise, shots)
configuration so the ideal statevector cache survives across requests.
"""

from __future__ import annotations

import itertools
import json
import socket
import socketserver
import subprocess
import sys
import threading

from .backends import Backend, IdealBackend, NoisyBackend
from .circuits import Circuit
from .density import NoiseModel
from .errors import WorkerError


class _BackendPool:
    """Worker-side backend reuse keyed by (noise model, shots)."""

    def __init__(self, default_noise: NoiseModel | None = None):
        self._default_noise = default_noise
        self._pool: dict[tuple, Backend] = {}
        self._lock = threading.Lock()

    def get(self, noise: NoiseModel | None, shots: int | None) -> Backend:
        key = (noise, shots)
        with self._lock:
            backend = self._pool.get(key)
            if backend is None:
                if noise is None:
                    backend = IdealBackend(shots=shots)
                else:
                    backend = NoisyBackend(noise, shots=shots)
                self._pool[key] = backend
            return backend

    def resolve_noise(self, request: dict) -> NoiseModel | None:
        if "noise" in request:
            raw = request["noise"]
            return None if raw is None else NoiseModel.from_wire(raw)
        return self._default_noise


def worker_call(request: dict, pool: _BackendPool | None = None) -> dict:
    """Serve one request dict; never raises, errors are reported in-band."""
    rid = request.get("id") if isinstance(request, dict) else None
    if pool is None:
        pool = _BackendPool()
    try:
        kind = request.get("kind")
        if kind not in ("expectation", "overlap"):
            return {"id": rid, "error": "unknown kind"}
        noise = pool.resolve_noise(request)
        shots = request.get("shots")
        seed = int(request.get("seed", 0))
        backend = pool.get(noise, shots)
        if kind == "expectation":
            circuit = Circuit.from_wire(request["circuit"])
            value = backend.expectation(circuit, int(request["qubit"]), seed=seed)
        else:
            raw = request["circuits"]
            if len(raw) != 2:
                raise ValueError(f"overlap requires exactly 2 circuits, got {len(raw)}")
            value = backend.overlap(
                Circuit.from_wire(raw[0]), Circuit.from_wire(raw[1]), seed=seed
            )
        return {"id": rid, "value": value}
    except Exception as exc:
        return {"id": rid, "error": f"{type(exc).__name__}: {exc}"}


def serve_stream(infile, outfile, default_noise: NoiseModel | None = None) -> None:
    """Answer newline-delimited requests from a text stream until EOF."""
    pool = _BackendPool(default_noise)
    for line in infile:
        line = line.strip()
        if not line:
            continue
        try:
            request = json.loads(line)
        except json.JSONDecodeError as exc:
            response = {"id": None, "error": f"malformed request: {exc}"}
        else:
            response = worker_call(request, pool)
        outfile.write(json.dumps(response) + "\n")
        outfile.flush()


def serve_stdio(default_noise: NoiseModel | None = None) -> None:
    serve_stream(sys.stdin, sys.stdout, default_noise)


class _WorkerTCPServer(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True


def make_tcp_server(host: str, port: int, default_noise: NoiseModel | None = None) -> _WorkerTCPServer:
    """Create (but do not start) a threaded TCP worker server."""
    pool = _BackendPool(default_noise)

    class Handler(socketserver.StreamRequestHandler):
        def handle(self):
            reader = self.rfile
            for raw in reader:
                line = raw.decode("utf-8").strip()
                if not line:
                    continue
                try:
                    request = json.loads(line)
                except json.JSONDecodeError as exc:
                    response = {"id": None, "error": f"malformed request: {exc}"}
                else:
                    response = worker_call(request, pool)
                self.wfile.write((json.dumps(response) + "\n").encode("utf-8"))
                self.wfile.flush()

    return _WorkerTCPServer((host, port), Handler)


def serve_tcp(host: str, port: int, default_noise: NoiseModel | None = None) -> None:
    with make_tcp_server(host, port, default_noise) as server:
        server.serve_forever()


# --------------------------------------------------------------------------
# Client side
# --------------------------------------------------------------------------


class LineTransport:
    """One line-oriented connection with lazy (re)connection."""

    def __init__(self):
        self._rw = None
        self._lock = threading.Lock()

    def _open(self):
        raise NotImplementedError

    def _close(self) -> None:
        pass

    def request(self, obj: dict) -> dict:
        with self._lock:
            try:
                if self._rw is None:
                    self._rw = self._open()
                reader, writer = self._rw
                writer.write(json.dumps(obj) + "\n")
                writer.flush()
                line = reader.readline()
                if not line:
                    raise ConnectionError("worker closed the stream")
                return json.loads(line)
            except (OSError, ValueError, ConnectionError) as exc:
                self.close_locked()
                raise WorkerError(f"worker transport failed: {exc}") from exc

    def close_locked(self) -> None:
        try:
            self._close()
        except OSError:
            pass
        self._rw = None

    def close(self) -> None:
        with self._lock:
            self.close_locked()


class TcpTransport(LineTransport):
    def __init__(self, host: str, port: int, timeout: float = 60.0):
        super().__init__()
        self.host = host
        self.port = port
        self.timeout = timeout
        self._sock: socket.socket | None = None

    def _open(self):
        self._sock = socket.create_connection((self.host, self.port), timeout=self.timeout)
        return self._sock.makefile("r", encoding="utf-8"), self._sock.makefile(
            "w", encoding="utf-8"
        )

    def _close(self) -> None:
        if self._sock is not None:
            self._sock.close()
            self._sock = None


class SubprocessTransport(LineTransport):
    """Spawns the worker as a child process speaking the protocol on stdio."""

    def __init__(self, argv: list[str]):
        super().__init__()
        self.argv = list(argv)
        self._proc: subprocess.Popen | None = None

    def _open(self):
        self._proc = subprocess.Popen(
            self.argv,
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            text=True,
            bufsize=1,
        )
        return self._proc.stdout, self._proc.stdin

    def _close(self) -> None:
        if self._proc is not None:
            self._proc.terminate()
            try:
                self._proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                self._proc.kill()
            self._proc = None


class RemoteBackend(Backend):
    """Backend facade that forwards every dispatch over a transport.

    The noise/shots configuration travels with each request, so the remote
    worker needs no matching local setup; values round-trip through JSON
    float repr, which is exact for float64.
    """

    def __init__(
        self,
        transport: LineTransport,
        name: str = "remote",
        noise: NoiseModel | None = None,
        shots: int | None = None,
    ):
        super().__init__(name)
        self.transport = transport
        self.noise = noise
        self.shots = shots
        self._ids = itertools.count(1)
        self._id_lock = threading.Lock()

    def _request(self, payload: dict) -> float:
        with self._id_lock:
            rid = next(self._ids)
        payload["id"] = rid
        payload["noise"] = None if self.noise is None else self.noise.to_wire()
        if self.shots is not None:
            payload["shots"] = self.shots
        response = self.transport.request(payload)
        if response.get("id") != rid:
            raise WorkerError(
                f"response id {response.get('id')!r} does not match request id {rid}"
            )
        if "error" in response:
            raise WorkerError(f"worker error: {response['error']}")
        return float(response["value"])

    def expectation(self, circuit: Circuit, qubit: int, seed: int = 0) -> float:
        self._tick()
        return self._request(
            {"kind": "expectation", "circuit": circuit.to_wire(), "qubit": qubit, "seed": seed}
        )

    def overlap(self, a: Circuit, b: Circuit, seed: int = 0) -> float:
        self._tick()
        return self._request(
            {"kind": "overlap", "circuits": [a.to_wire(), b.to_wire()], "seed": seed}
        )

    def close(self) -> None:
        self.transport.close()
