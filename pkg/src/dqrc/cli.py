"""Command-line driver: prepare data, run experiments, sweep grids, serve.

Exit codes are a stable scripting contract: 0 success, 2 data error,
3 config error, 4 service error.  Every command is deterministic given its
flags and seeds; rerunning never changes existing outputs except that
``sweep --resume`` fills in rows that are still missing.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time

from . import data as data_mod
from .calibration import resolve_calibration
from .errors import ConfigError, DataError
from .orchestrator import (
    ArchitectureConfig,
    BackendSpec,
    build_pipeline,
    make_backend,
    predict,
    train,
)
from .readout import DEFAULT_MAX_TRAIN_SAMPLES, save_readout
from .reservoir import save_spec
from .worker import serve_stdio, serve_tcp

EXIT_OK = 0
EXIT_DATA = 2
EXIT_CONFIG = 3
EXIT_SERVICE = 4


# --------------------------------------------------------------------------
# Config parsing
# --------------------------------------------------------------------------


def parse_split(text: str | None, num_samples: int) -> data_mod.SplitSpec:
    if not text:
        return data_mod.SplitSpec.from_ratios(num_samples)
    try:
        train_n, val_n, test_n = (int(part) for part in text.split(","))
    except ValueError as exc:
        raise DataError(f"split must be three comma-separated counts, got {text!r}") from exc
    return data_mod.SplitSpec(train_n, val_n, test_n)


def parse_experiment_config(obj: dict) -> tuple[ArchitectureConfig, list[BackendSpec], dict]:
    if not isinstance(obj, dict):
        raise ConfigError("experiment config must be a JSON object")
    try:
        config = ArchitectureConfig(
            variant=obj["variant"],
            num_reservoirs=int(obj.get("reservoirs", 1)),
            neurons_per_reservoir=int(obj.get("neurons_per_reservoir", 10)),
            ridge_instances=int(obj.get("ridge_instances", 1)),
            kernel_qubits=int(obj.get("kernel_qubits", 10)),
            reservoir_kind=obj.get("reservoir_kind", "quantum"),
            readout_kind=obj.get("readout_kind", "quantum"),
            lam=float(obj.get("lambda", 1e-6)),
            passes=int(obj.get("passes", 3)),
            seed=int(obj.get("seed", 0)),
        )
    except KeyError as exc:
        raise ConfigError(f"experiment config missing key {exc}") from exc
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"experiment config malformed: {exc}") from exc
    config.validate()

    default_shots = obj.get("shots")
    raw_backends = obj.get("backends") or [{"name": "ideal", "mode": "ideal"}]
    backends = []
    for entry in raw_backends:
        spec = BackendSpec(
            name=entry.get("name", "backend"),
            mode=entry.get("mode", "ideal"),
            calibration=entry.get("calibration"),
            shots=entry.get("shots", default_shots),
            remote=entry.get("remote"),
        )
        spec.validate()
        backends.append(spec)

    extras = {
        "max_train_samples": int(obj.get("max_train_samples", DEFAULT_MAX_TRAIN_SAMPLES)),
        "workers": int(obj.get("workers", 1)),
        "eval_splits": list(obj.get("eval_splits", ["test"])),
        "dataset": obj.get("dataset") or {},
    }
    return config, backends, extras


def load_json(path: str, what: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise DataError(f"cannot read {what} {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DataError(f"{what} {path} is not valid JSON: {exc}") from exc


# --------------------------------------------------------------------------
# prepare
# --------------------------------------------------------------------------


def cmd_prepare(args: argparse.Namespace) -> int:
    if args.synthetic:
        series = data_mod.synthesize_series(
            length=args.length,
            seed=args.seed,
            base=args.base,
            daily_amplitude=args.daily_amplitude,
            weekly_amplitude=args.weekly_amplitude,
            trend=args.trend,
            noise_std=args.noise_std,
        )
        source = f"synthetic(length={args.length}, seed={args.seed})"
    else:
        if not args.input:
            raise DataError("either --input or --synthetic is required")
        series = data_mod.load_series(args.input, column=args.column)
        source = args.input
    num_samples = series.values.size - args.window
    split = parse_split(args.split, num_samples)
    train_ds, val_ds, test_ds = data_mod.make_windows(series, args.window, split)
    artifact = data_mod.dataset_artifact(
        {"train": train_ds, "val": val_ds, "test": test_ds},
        window=args.window,
        split=split,
        seed=args.seed if args.synthetic else None,
        source=source,
    )
    data_mod.save_dataset(artifact, args.output)
    print(
        f"prepared {args.output}: {num_samples} samples (window {args.window}), "
        f"split {split.train}/{split.val}/{split.test}, "
        f"norm range [{artifact['norm']['x_min']:.3f}, {artifact['norm']['x_max']:.3f}]"
    )
    return EXIT_OK


# --------------------------------------------------------------------------
# run
# --------------------------------------------------------------------------


def _resolve_dataset(extras: dict, dataset_path: str | None):
    if dataset_path:
        return data_mod.load_dataset(dataset_path), dataset_path
    ds_cfg = extras["dataset"]
    if "path" in ds_cfg:
        return data_mod.load_dataset(ds_cfg["path"]), ds_cfg["path"]
    raise DataError("no dataset given: pass --dataset or set dataset.path in the config")


def run_experiment(
    config: ArchitectureConfig,
    backend_specs: list[BackendSpec],
    splits: dict[str, data_mod.WindowedDataset],
    max_train_samples: int,
    workers: int,
    eval_splits: list[str],
) -> dict:
    """Train on the train split and report metrics per requested split."""
    window = splits["train"].windows.shape[1]
    missing = [name for name in eval_splits if name not in splits]
    if missing:
        raise ConfigError(f"requested eval splits {missing} not present in dataset")
    backends = [make_backend(spec) for spec in backend_specs]
    pipeline = build_pipeline(config, window)
    started = time.perf_counter()
    trained = train(
        pipeline,
        splits["train"].windows,
        splits["train"].targets,
        backends,
        max_train_samples=max_train_samples,
        workers=workers,
    )
    metrics = {}
    for name in eval_splits:
        preds = predict(trained, splits[name].windows, backends, workers=workers)
        metrics[name] = data_mod.compute_metrics(splits[name].targets, preds).as_dict()
    elapsed = time.perf_counter() - started
    return {
        "config": {
            "variant": config.variant,
            "reservoirs": config.num_reservoirs,
            "neurons_per_reservoir": config.neurons_per_reservoir,
            "ridge_instances": config.ridge_instances,
            "kernel_qubits": config.kernel_qubits,
            "reservoir_kind": config.reservoir_kind,
            "readout_kind": config.readout_kind,
            "lambda": config.lam,
            "passes": config.passes,
        },
        "seed": config.seed,
        "metrics": metrics,
        "wall_seconds": elapsed,
        "dispatch_counts": {b.name: b.dispatch_count for b in backends},
        "_trained": trained,  # stripped before serialization
    }


def _result_row(result: dict) -> dict:
    cfg = result["config"]
    row = {
        "variant": cfg["variant"],
        "reservoirs": cfg["reservoirs"],
        "neurons_per_reservoir": cfg["neurons_per_reservoir"],
        "ridge_instances": cfg["ridge_instances"],
        "reservoir_kind": cfg["reservoir_kind"],
        "readout_kind": cfg["readout_kind"],
        "seed": result["seed"],
    }
    for split_name, m in result["metrics"].items():
        row[f"{split_name}_mae"] = f"{m['mae']:.6f}"
        row[f"{split_name}_rmse"] = f"{m['rmse']:.6f}"
        row[f"{split_name}_r2"] = f"{m['r2']:.6f}"
    return row


def cmd_run(args: argparse.Namespace) -> int:
    config, backend_specs, extras = parse_experiment_config(load_json(args.config, "config"))
    (splits, meta), dataset_path = _resolve_dataset(extras, args.dataset)
    if "window" in extras["dataset"] and extras["dataset"]["window"] != meta.get("window"):
        raise ConfigError(
            f"config expects window {extras['dataset']['window']} but dataset "
            f"{dataset_path} has window {meta.get('window')}"
        )
    workers = args.workers or extras["workers"]
    result = run_experiment(
        config,
        backend_specs,
        splits,
        max_train_samples=extras["max_train_samples"],
        workers=workers,
        eval_splits=extras["eval_splits"],
    )
    trained = result.pop("_trained")

    os.makedirs(args.out, exist_ok=True)
    artifacts = {}
    for i, spec in enumerate(trained.pipeline.reservoirs):
        path = os.path.join(args.out, f"reservoir_{i}.json")
        save_spec(spec, path)
        artifacts[f"reservoir_{i}"] = path
    readout_path = os.path.join(args.out, "readout.json")
    save_readout(trained.readout, readout_path)
    artifacts["readout"] = readout_path
    result["artifacts"] = artifacts
    result["dataset"] = dataset_path

    with open(os.path.join(args.out, "result.json"), "w", encoding="utf-8") as fh:
        json.dump(result, fh, indent=2)
    row = _result_row(result)
    with open(os.path.join(args.out, "result.csv"), "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(row))
        writer.writeheader()
        writer.writerow(row)

    for split_name, m in result["metrics"].items():
        print(
            f"{config.variant} {config.num_reservoirs}x{config.neurons_per_reservoir} "
            f"[{config.reservoir_kind}/{config.readout_kind}] {split_name}: "
            f"MAE={m['mae']:.4f} RMSE={m['rmse']:.4f} R2={m['r2']:.4f}"
        )
    return EXIT_OK


# --------------------------------------------------------------------------
# sweep
# --------------------------------------------------------------------------


def _row_label(cfg_obj: dict) -> str:
    return (
        f"{cfg_obj.get('variant')}_{cfg_obj.get('reservoirs', 1)}x"
        f"{cfg_obj.get('neurons_per_reservoir', 10)}_i{cfg_obj.get('ridge_instances', 1)}_"
        f"{cfg_obj.get('reservoir_kind', 'quantum')}-{cfg_obj.get('readout_kind', 'quantum')}_"
        f"s{cfg_obj.get('seed', 0)}"
    )


def cmd_sweep(args: argparse.Namespace) -> int:
    grid = load_json(args.grid, "grid config")
    rows = grid.get("configs")
    if not rows:
        raise ConfigError("grid config needs a non-empty 'configs' list")
    base = grid.get("base", {})
    shared = {
        k: grid[k]
        for k in ("backends", "shots", "max_train_samples", "workers", "eval_splits", "dataset")
        if k in grid
    }
    os.makedirs(args.out_dir, exist_ok=True)
    rows_dir = os.path.join(args.out_dir, "rows")
    os.makedirs(rows_dir, exist_ok=True)

    results = []
    for entry in rows:
        cfg_obj = {**base, **shared, **entry}
        label = _row_label(cfg_obj)
        row_path = os.path.join(rows_dir, f"{label}.json")
        if args.resume and os.path.exists(row_path):
            results.append(load_json(row_path, "sweep row"))
            print(f"[resume] {label}")
            continue
        try:
            config, backend_specs, extras = parse_experiment_config(cfg_obj)
            (splits, _meta), _ = _resolve_dataset(extras, args.dataset)
            result = run_experiment(
                config,
                backend_specs,
                splits,
                max_train_samples=extras["max_train_samples"],
                workers=args.workers or extras["workers"],
                eval_splits=extras["eval_splits"],
            )
            result.pop("_trained")
            result["label"] = label
            mode = "noisy" if any(s.mode == "noisy" for s in backend_specs) else "ideal"
            result["mode"] = mode
        except Exception as exc:  # record the failure, keep sweeping
            result = {"label": label, "error": f"{type(exc).__name__}: {exc}"}
            print(f"[failed] {label}: {result['error']}", file=sys.stderr)
        with open(row_path, "w", encoding="utf-8") as fh:
            json.dump(result, fh, indent=2)
        results.append(result)
        if "error" not in result:
            print(f"[done] {label}")

    _write_sweep_tables(results, args.out_dir)
    return EXIT_OK


def _write_sweep_tables(results: list[dict], out_dir: str) -> None:
    """Per-architecture wide tables plus a long-format file for plotting."""
    ok = [r for r in results if "error" not in r]
    long_path = os.path.join(out_dir, "metrics_long.csv")
    with open(long_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            [
                "label",
                "variant",
                "reservoirs",
                "neurons_per_reservoir",
                "total_neurons",
                "ridge_instances",
                "reservoir_kind",
                "readout_kind",
                "mode",
                "split",
                "metric",
                "value",
            ]
        )
        for r in ok:
            cfg = r["config"]
            total = cfg["reservoirs"] * cfg["neurons_per_reservoir"]
            for split_name, m in r["metrics"].items():
                for metric in ("mae", "rmse", "r2"):
                    writer.writerow(
                        [
                            r["label"],
                            cfg["variant"],
                            cfg["reservoirs"],
                            cfg["neurons_per_reservoir"],
                            total,
                            cfg["ridge_instances"],
                            cfg["reservoir_kind"],
                            cfg["readout_kind"],
                            r.get("mode", "ideal"),
                            split_name,
                            metric,
                            f"{m[metric]:.6f}",
                        ]
                    )

    for variant in sorted({r["config"]["variant"] for r in ok}):
        rows_v = [r for r in ok if r["config"]["variant"] == variant]
        shapes = sorted(
            {
                (r["config"]["reservoirs"], r["config"]["neurons_per_reservoir"], r["config"]["ridge_instances"])
                for r in rows_v
            }
        )
        combos = sorted(
            {
                (r["config"]["reservoir_kind"], r["config"]["readout_kind"], r.get("mode", "ideal"))
                for r in rows_v
            }
        )
        path = os.path.join(out_dir, f"table_{variant}.csv")
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            header = ["shape"]
            for rk, ok_, mode in combos:
                prefix = f"{rk}_res/{ok_}_ridge/{mode}"
                header += [f"{prefix}/mae", f"{prefix}/rmse", f"{prefix}/r2"]
            writer.writerow(header)
            for shape in shapes:
                res_n, neur, inst = shape
                row = [f"{res_n}x{neur}(i{inst})"]
                for combo in combos:
                    match = [
                        r
                        for r in rows_v
                        if (
                            r["config"]["reservoirs"],
                            r["config"]["neurons_per_reservoir"],
                            r["config"]["ridge_instances"],
                        )
                        == shape
                        and (
                            r["config"]["reservoir_kind"],
                            r["config"]["readout_kind"],
                            r.get("mode", "ideal"),
                        )
                        == combo
                    ]
                    if match:
                        m = match[0]["metrics"].get("test") or next(
                            iter(match[0]["metrics"].values())
                        )
                        row += [f"{m['mae']:.6f}", f"{m['rmse']:.6f}", f"{m['r2']:.6f}"]
                    else:
                        row += ["", "", ""]
                writer.writerow(row)


# --------------------------------------------------------------------------
# worker
# --------------------------------------------------------------------------


def cmd_worker(args: argparse.Namespace) -> int:
    default_noise = None
    if args.calibration:
        default_noise = resolve_calibration(args.calibration).noise_model()
    if args.stdio:
        serve_stdio(default_noise)
        return EXIT_OK
    if not args.listen:
        raise ConfigError("worker needs --stdio or --listen host:port")
    host, _, port = args.listen.rpartition(":")
    try:
        serve_tcp(host or "127.0.0.1", int(port), default_noise)
    except OSError as exc:
        print(f"cannot bind {args.listen}: {exc}", file=sys.stderr)
        return EXIT_SERVICE
    return EXIT_OK


# --------------------------------------------------------------------------
# entry point
# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dqrc", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("prepare", help="window, normalize and split a series")
    p.add_argument("--input", help="delimited text file with a header row")
    p.add_argument("--column", default="load")
    p.add_argument("--synthetic", action="store_true", help="generate a synthetic series")
    p.add_argument("--length", type=int, default=2400)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--base", type=float, default=1000.0)
    p.add_argument("--daily-amplitude", type=float, default=300.0)
    p.add_argument("--weekly-amplitude", type=float, default=150.0)
    p.add_argument("--trend", type=float, default=0.02)
    p.add_argument("--noise-std", type=float, default=10.0)
    p.add_argument("--window", type=int, default=data_mod.DEFAULT_WINDOW)
    p.add_argument("--split", help="train,val,test sample counts (default 70/15/15)")
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_prepare)

    p = sub.add_parser("run", help="train and evaluate one configured experiment")
    p.add_argument("--config", required=True)
    p.add_argument("--dataset", help="dataset artifact (overrides config dataset.path)")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--workers", type=int, default=0, help="override worker count")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="run a grid of experiments and emit tables")
    p.add_argument("--grid", required=True)
    p.add_argument("--dataset", help="dataset artifact (overrides grid dataset.path)")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--workers", type=int, default=0)
    p.add_argument("--resume", action="store_true", help="skip rows already completed")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("worker", help="serve the circuit-execution worker protocol")
    p.add_argument("--listen", help="host:port to bind")
    p.add_argument("--stdio", action="store_true", help="serve on stdin/stdout")
    p.add_argument("--calibration", help="default noise calibration (path or builtin name)")
    p.set_defaults(func=cmd_worker)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"service error: {exc}", file=sys.stderr)
        return EXIT_SERVICE


if __name__ == "__main__":
    sys.exit(main())
