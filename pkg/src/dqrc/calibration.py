"""Backend calibration files and their mapping onto noise models.

A calibration file is JSON with fields ``name``, ``sx_error``, ``twoq_error``,
``readout_error``, ``t1_us``, ``t2_us``.  Snapshots for ibm_brisbane,
ibm_marrakesh and ionq_aria1 ship with the package (for the ion trap the
error rates are one minus the vendor's median fidelities).  T1/T2 are
parsed and kept on the record but not simulated; the channel set is
depolarizing plus readout confusion only.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources

from .density import NoiseModel
from .errors import DataError

BUILTIN_BACKENDS = ("ibm_brisbane", "ibm_marrakesh", "ionq_aria1")

_REQUIRED = ("name", "sx_error", "twoq_error", "readout_error", "t1_us", "t2_us")


@dataclass(frozen=True)
class Calibration:
    name: str
    sx_error: float
    twoq_error: float
    readout_error: float
    t1_us: float
    t2_us: float

    def noise_model(self) -> NoiseModel:
        return NoiseModel(
            p1=self.sx_error,
            p2=self.twoq_error,
            p_readout=self.readout_error,
            label=self.name,
        )


def _parse(obj: dict, source: str) -> Calibration:
    missing = [k for k in _REQUIRED if k not in obj]
    if missing:
        raise DataError(f"calibration {source}: missing fields {missing}")
    try:
        return Calibration(
            name=str(obj["name"]),
            sx_error=float(obj["sx_error"]),
            twoq_error=float(obj["twoq_error"]),
            readout_error=float(obj["readout_error"]),
            t1_us=float(obj["t1_us"]),
            t2_us=float(obj["t2_us"]),
        )
    except (TypeError, ValueError) as exc:
        raise DataError(f"calibration {source}: {exc}") from exc


def load_calibration(path: str) -> Calibration:
    try:
        with open(path, encoding="utf-8") as fh:
            obj = json.load(fh)
    except OSError as exc:
        raise DataError(f"cannot read calibration file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DataError(f"calibration file {path} is not valid JSON: {exc}") from exc
    return _parse(obj, path)


def builtin_calibration(name: str) -> Calibration:
    if name not in BUILTIN_BACKENDS:
        raise DataError(f"no builtin calibration {name!r}; have {BUILTIN_BACKENDS}")
    text = resources.files("dqrc").joinpath(f"calibrations/{name}.json").read_text()
    return _parse(json.loads(text), f"builtin:{name}")


def resolve_calibration(ref: str) -> Calibration:
    """Accept either a builtin backend name or a path to a JSON file."""
    if ref in BUILTIN_BACKENDS:
        return builtin_calibration(ref)
    return load_calibration(ref)
