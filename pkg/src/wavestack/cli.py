"""Operator entry point: decompose, train, forecast, eval and ablation
grids, all emitting deterministic CSV artifacts.

Exit codes: 0 success, 2 config/validation error, 3 runtime error.
"""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, replace
from pathlib import Path

import numpy as np

from . import dataio, ensemble as ens, training as tr
from . import model as md
from .autodiff import Tape
from .config import RunConfig, load_run_config, resolved_config_text
from .errors import (
    ConfigError,
    ConfigMismatch,
    EmptySeries,
    MissingColumn,
    NonNumericCell,
    PartitionTooShort,
    SeriesTooShort,
    WavestackError,
)
from .wavelet import mdwd

_VALIDATION_ERRORS = (ConfigError, ConfigMismatch, MissingColumn,
                      NonNumericCell, EmptySeries, PartitionTooShort,
                      SeriesTooShort, FileNotFoundError, ValueError)

ABLATION_AXES = ("alpha", "stacks", "conv", "ensemble_size", "noise")


def _load_series(run: RunConfig) -> np.ndarray:
    if run["data"]:
        return dataio.load_csv(run["data"], run["value_column"])
    return dataio.multi_frequency_benchmark(
        length=run["synthetic.length"], noise_level=run["synthetic.noise"],
        seed=run["synthetic.seed"])


def _prepare(run: RunConfig, series=None):
    """Split, optionally standardize, and window the series."""
    if series is None:
        series = _load_series(run)
    t, h = run.model.lookback, run.model.horizon
    dataset = dataio.split(series, run["split.train"], run["split.val"],
                           run["split.test"], min_len=t + h)
    scaler = None
    if run["standardize"]:
        dataset, scaler = dataio.standardize(dataset)
    stride = run["stride"]
    windows = {
        name: tr.make_windows(part, t, h, stride)
        for name, part in (("train", dataset.train), ("val", dataset.val),
                           ("test", dataset.test))
    }
    return dataset, scaler, windows


def _write_resolved_config(run: RunConfig, out: Path) -> None:
    (out / "resolved_config.txt").write_text(resolved_config_text(run))


def _apply_seed(run: RunConfig, seed) -> RunConfig:
    if seed is None:
        return run
    return RunConfig(
        model=replace(run.model, seed=seed),
        train=replace(run.train, seed=seed),
        ensemble=replace(run.ensemble, base_seed=seed),
        options=dict(run.options))


# --- commands ------------------------------------------------------------

def cmd_decompose(run: RunConfig, out: Path) -> None:
    series = _load_series(run)
    levels = run["decompose.levels"]
    kind = run["decompose.kind"]
    stem = Path(run["data"]).stem if run["data"] else "synthetic"
    pyramid = mdwd(series, levels, kind)
    for lvl in range(1, levels + 1):
        dataio.save_csv(out / f"{stem}.L{lvl}.approx.csv",
                        pyramid.approx[lvl - 1])
        dataio.save_csv(out / f"{stem}.L{lvl}.detail.csv",
                        pyramid.detail[lvl - 1])
    recon = pyramid.approx[-1] + sum(pyramid.detail)
    recon_error = float(np.max(np.abs(recon - series)))
    (out / "recon_error.txt").write_text(f"{recon_error!r}\n")
    _write_resolved_config(run, out)
    print(f"decomposed {len(series)} points into {levels} levels ({kind}); "
          f"max-abs reconstruction error {recon_error:.3e}")


def cmd_train(run: RunConfig, out: Path) -> None:
    _, _, windows = _prepare(run)
    result = tr.train(run.model, windows["train"], windows["val"], run.train)
    tr.save_checkpoint(out / "checkpoint.txt", result.params, run.model,
                       epoch=result.best_epoch, val_loss=result.best_val)
    tr.save_history(out / "history.csv", result.history)
    _write_resolved_config(run, out)
    train_metrics = tr.evaluate(windows["train"], result.params, run.model)
    val_metrics = tr.evaluate(windows["val"], result.params, run.model)
    print(f"best epoch {result.best_epoch} "
          f"(early stop: {result.stopped_early})")
    print(f"train mse {train_metrics['mse']:.6f} mae {train_metrics['mae']:.6f}")
    print(f"val   mse {val_metrics['mse']:.6f} mae {val_metrics['mae']:.6f}")


def cmd_forecast(run: RunConfig, out: Path, checkpoint: str) -> None:
    dataset, _, _ = _prepare(run)
    params, _ = tr.load_checkpoint(checkpoint, run.model)
    window = dataset.raw[-run.model.lookback:]
    bundle = md.model_forward(window, params, run.model, Tape())
    dataio.save_csv(out / "global.csv", bundle.global_forecast)
    for i in range(1, run.model.n_stacks + 1):
        dataio.save_csv(out / f"stack{i}.forecast.csv",
                        bundle.per_stack_forecast[i - 1])
        dataio.save_csv(out / f"stack{i}.backcast.csv",
                        bundle.per_stack_backcast[i - 1])
        infused = bundle.infused_signals[i - 1]
        if infused is None:
            infused = np.zeros(run.model.lookback)
        dataio.save_csv(out / f"stack{i}.infused.csv", infused)
    _write_resolved_config(run, out)
    total = np.sum(bundle.per_stack_forecast, axis=0)
    print(f"forecast horizon {run.model.horizon}; stack-sum max dev "
          f"{np.max(np.abs(total - bundle.global_forecast)):.3e}")


def _persistence_forecast(x, horizon):
    return np.full(horizon, x[-1])


def cmd_eval(run: RunConfig, out: Path, checkpoint: str,
             baseline: bool = False) -> None:
    _, scaler, windows = _prepare(run)
    params, _ = tr.load_checkpoint(checkpoint, run.model)
    test = windows["test"]
    rows = []

    def metric_rows(label, forecasts):
        scaled_mse = np.mean([tr.mse(f, y) for f, y in
                              zip(forecasts, test.targets)])
        scaled_mae = np.mean([tr.mae(f, y) for f, y in
                              zip(forecasts, test.targets)])
        rows.append(("standardized", label, scaled_mse, scaled_mae))
        if scaler is not None:
            raw_f = [dataio.destandardize(f, scaler) for f in forecasts]
            raw_y = [dataio.destandardize(y, scaler) for y in test.targets]
            rows.append((
                "original", label,
                np.mean([tr.mse(f, y) for f, y in zip(raw_f, raw_y)]),
                np.mean([tr.mae(f, y) for f, y in zip(raw_f, raw_y)])))

    model_forecasts = [
        md.model_forward(x, params, run.model, Tape()).global_forecast
        for x in test.inputs]
    metric_rows("model", model_forecasts)
    if baseline:
        metric_rows("persistence", [
            _persistence_forecast(x, run.model.horizon)
            for x in test.inputs])
    with open(out / "metrics.csv", "w") as fh:
        fh.write("scale,model,mse,mae\n")
        for scale, label, m, a in rows:
            fh.write(f"{scale},{label},{float(m)!r},{float(a)!r}\n")
    _write_resolved_config(run, out)
    for scale, label, m, a in rows:
        print(f"{scale:12s} {label:12s} mse {m:.6f} mae {a:.6f}")


# --- ablation driver -----------------------------------------------------

def _run_cell(args):
    """One seeded (cell, repetition) experiment; returns test MSE/MAE."""
    run, axis, value, rep = args
    seed = run.model.seed + 101 * rep
    model_cfg = replace(run.model, seed=seed)
    train_cfg = replace(run.train, seed=seed)
    series = None
    if axis == "alpha":
        model_cfg = replace(model_cfg, alpha=float(value))
    elif axis == "stacks":
        model_cfg = md.ModelConfig(**{
            **asdict(model_cfg), "n_stacks": int(value),
            "kernel_sizes": None})
    elif axis == "conv":
        model_cfg = replace(model_cfg, conv_variant=str(value))
    elif axis == "noise":
        series = dataio.multi_frequency_benchmark(
            length=run["synthetic.length"], noise_level=float(value),
            seed=run["synthetic.seed"] + rep)
    run = RunConfig(model=model_cfg, train=train_cfg,
                    ensemble=run.ensemble, options=dict(run.options))
    _, _, windows = _prepare(run, series=series)
    if axis == "ensemble_size":
        ens_cfg = ens.EnsembleConfig(
            size=int(value), aggregation=run.ensemble.aggregation,
            bootstrap=run.ensemble.bootstrap, base_seed=seed)
        members = ens.train_ensemble(model_cfg, windows["train"],
                                     windows["val"], train_cfg, ens_cfg)
        forecasts = []
        for x in windows["test"].inputs:
            forecasts.append(ens.ensemble_forecast(
                x, members, model_cfg, method=ens_cfg.aggregation).aggregated)
    else:
        result = tr.train(model_cfg, windows["train"], windows["val"],
                          train_cfg)
        forecasts = [
            md.model_forward(x, result.params, model_cfg, Tape())
            .global_forecast
            for x in windows["test"].inputs]
    targets = windows["test"].targets
    return (np.mean([tr.mse(f, y) for f, y in zip(forecasts, targets)]),
            np.mean([tr.mae(f, y) for f, y in zip(forecasts, targets)]))


def cmd_ablate(run: RunConfig, out: Path, axis: str, jobs: int = 1) -> None:
    if axis not in ABLATION_AXES:
        raise ConfigError(f"unknown ablation axis {axis!r}; "
                          f"expected one of {ABLATION_AXES}")
    grid = {
        "alpha": run["ablate.alpha_grid"],
        "stacks": run["ablate.stacks_grid"],
        "conv": run["ablate.conv_grid"],
        "ensemble_size": run["ablate.ensemble_grid"],
        "noise": run["ablate.noise_grid"],
    }[axis]
    reps = run["ablate.repetitions"]
    tasks = [(run, axis, value, rep) for value in grid
             for rep in range(reps)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            raw = list(pool.map(_run_cell, tasks))
        results = dict(zip(range(len(tasks)), ((r, None) for r in raw)))
    else:
        results = {}
        for idx, task in enumerate(tasks):
            try:
                results[idx] = (_run_cell(task), None)
            except Exception as exc:  # record, keep the grid going
                results[idx] = (None, f"{type(exc).__name__}: {exc}")
    with open(out / f"ablation_{axis}.csv", "w") as fh:
        fh.write(f"{axis},repetitions,mse_mean,mse_std,mae_mean,mae_std,"
                 f"failures\n")
        for gi, value in enumerate(grid):
            cell = [results[gi * reps + r] for r in range(reps)]
            ok = [m for m, err in cell if m is not None]
            failures = ";".join(err for _, err in cell if err) or ""
            if ok:
                mses = [m[0] for m in ok]
                maes = [m[1] for m in ok]
                fh.write(f"{value},{len(ok)},{float(np.mean(mses))!r},"
                         f"{float(np.std(mses))!r},{float(np.mean(maes))!r},"
                         f"{float(np.std(maes))!r},{failures}\n")
            else:
                fh.write(f"{value},0,,,,,{failures}\n")
    _write_resolved_config(run, out)
    print(f"ablation over {axis}: {len(grid)} cells x {reps} repetitions "
          f"-> {out / f'ablation_{axis}.csv'}")


# --- argument parsing ----------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wavestack",
        description="Wavelet-infused doubly-residual forecasting")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="run config path")
        p.add_argument("--seed", type=int, default=None,
                       help="override all seeds in the config")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--jobs", type=int, default=1,
                       help="parallel workers where supported")

    common(sub.add_parser("decompose", help="write per-level branch CSVs"))
    common(sub.add_parser("train", help="train and checkpoint a model"))
    p = sub.add_parser("forecast", help="emit the per-stack forecast bundle")
    common(p)
    p.add_argument("--checkpoint", required=True)
    p = sub.add_parser("eval", help="test-set metrics table")
    common(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--baseline", action="store_true",
                   help="include a persistence baseline row")
    p = sub.add_parser("ablate", help="run an ablation grid")
    common(p)
    p.add_argument("--axis", required=True, choices=ABLATION_AXES)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        run = _apply_seed(load_run_config(args.config), args.seed)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
    except _VALIDATION_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        if args.command == "decompose":
            cmd_decompose(run, out)
        elif args.command == "train":
            cmd_train(run, out)
        elif args.command == "forecast":
            cmd_forecast(run, out, args.checkpoint)
        elif args.command == "eval":
            cmd_eval(run, out, args.checkpoint, baseline=args.baseline)
        elif args.command == "ablate":
            cmd_ablate(run, out, args.axis, jobs=args.jobs)
    except _VALIDATION_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except WavestackError as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
