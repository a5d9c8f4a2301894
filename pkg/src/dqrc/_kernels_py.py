"""Pure-numpy gate kernels; fallback when the compiled extension is absent.

All functions mutate a C-contiguous complex128 amplitude array in place.
Qubit ``q`` of an ``n``-qubit register addresses axis ``q`` of the array
viewed as shape ``[2] * n`` (qubit 0 = most significant index bit).  Density
matrices reuse these kernels through their flat view as a ``2n``-qubit
register: row qubit q is register qubit q, column qubit q is ``n + q``.
"""

from __future__ import annotations

import cmath
import math

import numpy as np

IMPLEMENTATION = "python"


def _pair_view(amps: np.ndarray, n: int, q: int) -> np.ndarray:
    return np.moveaxis(amps.reshape([2] * n), q, 0)


def apply_rx(amps: np.ndarray, n: int, q: int, theta: float) -> None:
    v = _pair_view(amps, n, q)
    c = math.cos(theta / 2.0)
    s = math.sin(theta / 2.0)
    a0 = v[0].copy()
    a1 = v[1].copy()
    v[0] = c * a0 + (-1j * s) * a1
    v[1] = (-1j * s) * a0 + c * a1


def apply_rz(amps: np.ndarray, n: int, q: int, theta: float) -> None:
    v = _pair_view(amps, n, q)
    v[0] *= cmath.exp(-0.5j * theta)
    v[1] *= cmath.exp(0.5j * theta)


def apply_h(amps: np.ndarray, n: int, q: int) -> None:
    v = _pair_view(amps, n, q)
    inv = 1.0 / math.sqrt(2.0)
    a0 = v[0].copy()
    a1 = v[1].copy()
    v[0] = inv * (a0 + a1)
    v[1] = inv * (a0 - a1)


def apply_phase(amps: np.ndarray, n: int, q: int, theta: float) -> None:
    v = _pair_view(amps, n, q)
    v[1] *= cmath.exp(1j * theta)


def apply_cnot(amps: np.ndarray, n: int, control: int, target: int) -> None:
    v = np.moveaxis(amps.reshape([2] * n), (control, target), (0, 1))
    tmp = v[1, 0].copy()
    v[1, 0] = v[1, 1]
    v[1, 1] = tmp


def expval_z(amps: np.ndarray, n: int, q: int) -> float:
    p = np.abs(amps) ** 2
    v = np.moveaxis(p.reshape([2] * n), q, 0)
    return float(v[0].sum() - v[1].sum())
