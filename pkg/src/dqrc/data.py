"""Series ingestion, sliding windows, normalization, synthesis, and metrics.

A series of hourly values becomes supervised samples by the sliding-window
rule: sample i is (values[i .. i+w−1], values[i+w]), so a series of length L
yields L − w samples.  Splits are chronological and contiguous; min-max
normalization parameters come from the training split only and are applied
unchanged to validation and test, which therefore may fall slightly outside
[0, 1].
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import DataError, DegenerateRangeError

DEFAULT_WINDOW = 4


@dataclass
class Series:
    values: np.ndarray
    name: str = "series"


@dataclass(frozen=True)
class SplitSpec:
    """Chronological sample counts for train/val/test, in that order."""

    train: int
    val: int
    test: int

    def __post_init__(self):
        if min(self.train, self.val, self.test) < 0 or self.train < 1:
            raise DataError(f"invalid split counts {self}")

    @property
    def total(self) -> int:
        return self.train + self.val + self.test

    @classmethod
    def from_ratios(cls, num_samples: int, train: float = 0.7, val: float = 0.15) -> SplitSpec:
        n_train = int(num_samples * train)
        n_val = int(num_samples * val)
        return cls(n_train, n_val, num_samples - n_train - n_val)


@dataclass
class WindowedDataset:
    windows: np.ndarray  # m × w, normalized
    targets: np.ndarray  # m, normalized
    x_min: float
    x_max: float


@dataclass
class ForecastMetrics:
    mae: float
    rmse: float
    r2: float
    r2_defined: bool = True

    def as_dict(self) -> dict:
        return {
            "mae": self.mae,
            "rmse": self.rmse,
            "r2": self.r2,
            "r2_defined": self.r2_defined,
        }


def load_series(path: str, column: str = "load") -> Series:
    """Read one column of a headered delimited text file, in file order."""
    try:
        fh = open(path, encoding="utf-8", newline="")
    except OSError as exc:
        raise DataError(f"cannot read series file {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"series file {path} is empty") from None
        header = [name.strip() for name in header]
        if column not in header:
            raise DataError(f"column {column!r} not found in {path}; header is {header}")
        col = header.index(column)
        values = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                raise DataError(f"{path}:{lineno}: blank line in data section")
            try:
                values.append(float(row[col]))
            except (ValueError, IndexError) as exc:
                raise DataError(f"{path}:{lineno}: cannot parse value: {exc}") from exc
    if not values:
        raise DataError(f"series file {path} has a header but no data rows")
    return Series(np.asarray(values), name=column)


def sliding_windows(values: np.ndarray, window: int) -> tuple[np.ndarray, np.ndarray]:
    """Raw (un-normalized) windows and next-step targets."""
    values = np.asarray(values, dtype=float)
    if window < 1:
        raise DataError(f"window size must be >= 1, got {window}")
    if values.size < window + 1:
        raise DataError(f"series of length {values.size} too short for window {window}")
    m = values.size - window
    windows = np.lib.stride_tricks.sliding_window_view(values, window)[:m].copy()
    targets = values[window:].copy()
    return windows, targets


def normalize(x, x_min: float, x_max: float):
    if x_max <= x_min:
        raise DegenerateRangeError(f"degenerate range [{x_min}, {x_max}]")
    return (x - x_min) / (x_max - x_min)


def denormalize(x, x_min: float, x_max: float):
    if x_max <= x_min:
        raise DegenerateRangeError(f"degenerate range [{x_min}, {x_max}]")
    return x * (x_max - x_min) + x_min


def make_windows(
    series: Series, window: int, split: SplitSpec
) -> tuple[WindowedDataset, WindowedDataset, WindowedDataset]:
    """Window the series, split chronologically, normalize on the train split."""
    windows, targets = sliding_windows(series.values, window)
    m = targets.size
    if split.total > m:
        raise DataError(f"split counts {split} sum to {split.total} > {m} available samples")
    # Training min/max over every raw value the training samples can see.
    train_raw = series.values[: split.train + window]
    x_min = float(train_raw.min())
    x_max = float(train_raw.max())
    if x_max <= x_min:
        raise DegenerateRangeError("training split has a constant value; cannot normalize")
    datasets = []
    start = 0
    for count in (split.train, split.val, split.test):
        stop = start + count
        datasets.append(
            WindowedDataset(
                windows=normalize(windows[start:stop], x_min, x_max),
                targets=normalize(targets[start:stop], x_min, x_max),
                x_min=x_min,
                x_max=x_max,
            )
        )
        start = stop
    return tuple(datasets)


def synthesize_series(
    length: int,
    seed: int = 0,
    base: float = 1000.0,
    daily_amplitude: float = 300.0,
    weekly_amplitude: float = 150.0,
    trend: float = 0.02,
    noise_std: float = 10.0,
    name: str = "synthetic",
) -> Series:
    """Deterministic synthetic hourly load: daily + weekly sinusoids, linear
    trend, and seeded Gaussian noise."""
    if length < 1:
        raise DataError(f"length must be >= 1, got {length}")
    t = np.arange(length, dtype=float)
    rng = np.random.default_rng(seed)
    values = (
        base
        + daily_amplitude * np.sin(2.0 * np.pi * t / 24.0)
        + weekly_amplitude * np.sin(2.0 * np.pi * t / 168.0)
        + trend * t
        + noise_std * rng.standard_normal(length)
    )
    return Series(values, name=name)


def compute_metrics(y_true: np.ndarray, y_pred: np.ndarray) -> ForecastMetrics:
    """MAE, RMSE and R²; R² is flagged undefined when y_true is constant."""
    y = np.asarray(y_true, dtype=float)
    yhat = np.asarray(y_pred, dtype=float)
    if y.size == 0 or y.shape != yhat.shape:
        raise DataError(f"metric inputs must be equal-length and nonzero: {y.shape} vs {yhat.shape}")
    err = y - yhat
    mae = float(np.mean(np.abs(err)))
    rmse = float(math.sqrt(np.mean(err**2)))
    sst = float(np.sum((y - y.mean()) ** 2))
    if sst == 0.0:
        return ForecastMetrics(mae=mae, rmse=rmse, r2=float("nan"), r2_defined=False)
    r2 = 1.0 - float(np.sum(err**2)) / sst
    return ForecastMetrics(mae=mae, rmse=rmse, r2=r2)


# --------------------------------------------------------------------------
# Dataset artifacts
# --------------------------------------------------------------------------


def dataset_artifact(
    splits: dict[str, WindowedDataset],
    window: int,
    split: SplitSpec,
    seed: int | None,
    source: str,
) -> dict:
    first = next(iter(splits.values()))
    return {
        "window": window,
        "seed": seed,
        "source": source,
        "norm": {"x_min": first.x_min, "x_max": first.x_max},
        "split": {"train": split.train, "val": split.val, "test": split.test},
        "splits": {
            name: {"windows": ds.windows.tolist(), "targets": ds.targets.tolist()}
            for name, ds in splits.items()
        },
    }


def save_dataset(artifact: dict, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(artifact, fh)


def load_dataset(path: str) -> tuple[dict[str, WindowedDataset], dict]:
    """Load a prepared dataset artifact; returns (splits, metadata)."""
    try:
        with open(path, encoding="utf-8") as fh:
            obj = json.load(fh)
    except OSError as exc:
        raise DataError(f"cannot read dataset artifact {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DataError(f"dataset artifact {path} is not valid JSON: {exc}") from exc
    try:
        norm = obj["norm"]
        splits = {
            name: WindowedDataset(
                windows=np.asarray(part["windows"], dtype=float),
                targets=np.asarray(part["targets"], dtype=float),
                x_min=float(norm["x_min"]),
                x_max=float(norm["x_max"]),
            )
            for name, part in obj["splits"].items()
        }
    except (KeyError, TypeError) as exc:
        raise DataError(f"dataset artifact {path} is malformed: {exc}") from exc
    meta = {k: obj[k] for k in obj if k != "splits"}
    return splits, meta
