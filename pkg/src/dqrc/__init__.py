"""Distributed quantum reservoir computing for one-step forecasting.

Exact statevector/density-matrix simulation of 4-qubit quantum neurons,
quantum-kernel ridge readouts, four single/distributed architectures, and a
multi-backend orchestrator with a line-protocol worker mode.
"""

from .backends import Backend, IdealBackend, NoisyBackend
from .circuits import Circuit, Gate, cnot, h, phase, rx, rz
from .density import DensityMatrix, NoiseModel
from .kernels import IMPLEMENTATION
from .orchestrator import (
    ArchitectureConfig,
    Assignment,
    BackendSpec,
    Pipeline,
    TrainedPipeline,
    assign_backends,
    build_pipeline,
    make_backend,
    predict,
    train,
)
from .statevector import StateVector

__version__ = "0.1.0"
