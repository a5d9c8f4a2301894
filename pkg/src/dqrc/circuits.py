"""Gate and circuit containers plus the JSON wire format.

A circuit is an ordered gate list on ``num_qubits`` qubits; it is the common
currency between neurons, kernels, and execution backends.  Gate kinds use
the same short names as the wire format: ``rx``, ``rz``, ``h``, ``p`` (phase)
and ``cx`` (CNOT).  Qubit 0 maps to the most significant bit of a basis-state
index, so ``|1000⟩`` (qubit 0 flipped on four qubits) is amplitude index 8.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

MAX_QUBITS = 12

_PARAM_KINDS = frozenset({"rx", "rz", "p"})
_ALL_KINDS = frozenset({"rx", "rz", "h", "p", "cx"})


@dataclass(frozen=True)
class Gate:
    """A single gate: kind, target qubit, optional angle and control qubit."""

    kind: str
    target: int
    theta: float | None = None
    control: int | None = None

    def __post_init__(self):
        if self.kind not in _ALL_KINDS:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        if self.target < 0:
            raise IndexError(f"negative target qubit {self.target}")
        if self.kind in _PARAM_KINDS:
            if self.theta is None or not math.isfinite(self.theta):
                raise ValueError(f"{self.kind} gate requires a finite angle, got {self.theta!r}")
        elif self.theta is not None:
            raise ValueError(f"{self.kind} gate takes no angle")
        if self.kind == "cx":
            if self.control is None or self.control < 0:
                raise IndexError(f"cx gate requires a non-negative control, got {self.control!r}")
            if self.control == self.target:
                raise ValueError("cx control and target must differ")
        elif self.control is not None:
            raise ValueError(f"{self.kind} gate takes no control")

    def inverse(self) -> Gate:
        if self.kind in _PARAM_KINDS:
            return Gate(self.kind, self.target, -self.theta)
        return self  # h and cx are self-inverse


def rx(target: int, theta: float) -> Gate:
    return Gate("rx", target, theta)


def rz(target: int, theta: float) -> Gate:
    return Gate("rz", target, theta)


def h(target: int) -> Gate:
    return Gate("h", target)


def phase(target: int, theta: float) -> Gate:
    return Gate("p", target, theta)


def cnot(control: int, target: int) -> Gate:
    return Gate("cx", target, control=control)


@dataclass
class Circuit:
    """Ordered gate sequence on ``num_qubits`` qubits (1 ≤ n ≤ 12)."""

    num_qubits: int
    gates: list[Gate] = field(default_factory=list)

    def __post_init__(self):
        if not 1 <= self.num_qubits <= MAX_QUBITS:
            raise ValueError(f"num_qubits must be in [1, {MAX_QUBITS}], got {self.num_qubits}")
        for g in self.gates:
            if g.target >= self.num_qubits:
                raise IndexError(f"gate target {g.target} out of range for {self.num_qubits} qubits")
            if g.control is not None and g.control >= self.num_qubits:
                raise IndexError(f"gate control {g.control} out of range for {self.num_qubits} qubits")
        self._key: tuple | None = None

    def cache_key(self) -> tuple:
        """Hashable identity of the circuit's contents, memoized."""
        if self._key is None:
            self._key = (
                self.num_qubits,
                tuple((g.kind, g.target, g.theta, g.control) for g in self.gates),
            )
        return self._key

    def inverse(self) -> Circuit:
        """Gate-wise inverse in reverse order; undoes this circuit exactly."""
        return Circuit(self.num_qubits, [g.inverse() for g in reversed(self.gates)])

    def to_wire(self) -> dict:
        gates = []
        for g in self.gates:
            if g.kind == "cx":
                gates.append({"g": "cx", "c": g.control, "t": g.target})
            elif g.kind in _PARAM_KINDS:
                gates.append({"g": g.kind, "q": g.target, "theta": g.theta})
            else:
                gates.append({"g": g.kind, "q": g.target})
        return {"qubits": self.num_qubits, "gates": gates}

    @classmethod
    def from_wire(cls, obj: dict) -> Circuit:
        try:
            n = obj["qubits"]
            raw = obj["gates"]
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed circuit object: {exc}") from exc
        gates = []
        for entry in raw:
            kind = entry.get("g")
            if kind == "cx":
                gates.append(Gate("cx", entry["t"], control=entry["c"]))
            elif kind in _PARAM_KINDS:
                gates.append(Gate(kind, entry["q"], entry["theta"]))
            elif kind == "h":
                gates.append(Gate("h", entry["q"]))
            else:
                raise ValueError(f"unknown gate kind {kind!r} in wire format")
        return cls(n, gates)

    def to_json(self) -> str:
        return json.dumps(self.to_wire())

    @classmethod
    def from_json(cls, text: str) -> Circuit:
        return cls.from_wire(json.loads(text))
