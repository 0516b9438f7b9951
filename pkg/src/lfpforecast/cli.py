"""Command-line entry point: simulate, analyze, fit, benchmark, export.

Every command writes ``config_echo.json`` into its output directory; feeding
that file back through ``--config`` reproduces the run.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import config as config_mod
from .coherence import mean_coherence, wcoh, wcoh_batch
from .config import ExperimentConfig
from .cv import cross_validate
from .errors import ConfigError, LFPError, SingleChannelData
from .export import write_matrix_csv, write_pgm
from .persist import save_model
from .signal import make_windows, pearson_corr, read_csv, write_csv
from .synth import generate
from .training import evaluate, train
from .wavelet import cwt

log = logging.getLogger("lfpforecast")


# -- shared helpers ---------------------------------------------------------------------

def _out_dir(cfg: ExperimentConfig) -> Path:
    d = Path(cfg.output_dir)
    d.mkdir(parents=True, exist_ok=True)
    return d


def _write_json(path: Path, doc) -> None:
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _echo(cfg: ExperimentConfig, out: Path) -> None:
    (out / "config_echo.json").write_text(cfg.to_json() + "\n")


def load_data(cfg: ExperimentConfig, regime=None):
    """Channels from the configured CSV, or freshly simulated ones."""
    if cfg.csv is not None:
        path = Path(cfg.csv)
        if not path.exists():
            raise ConfigError(f"data file {path} does not exist")
        return read_csv(path)
    syn = cfg.synthetic if regime is None else replace(cfg.synthetic, regime=regime)
    return list(generate(syn))


def _labels(chans):
    return [c.label or f"ch{i}" for i, c in enumerate(chans)]


def _window_slice(chans, cfg: ExperimentConfig, index: int):
    L = cfg.window.window_len
    start = index * cfg.window.stride
    if index < 0 or start + L > len(chans[0]):
        raise ConfigError(f"window {index} lies outside the series")
    return [c.values[start : start + L] for c in chans]


def export_window(chans, cfg: ExperimentConfig, index: int, out: Path, what="all", pgm=True) -> list[Path]:
    """Write scalogram and/or coherence maps of one window; returns the paths written."""
    segs = _window_slice(chans, cfg, index)
    labels = _labels(chans)
    written = []

    def emit(stem, grid):
        p = out / f"{stem}_w{index}.csv"
        write_matrix_csv(p, grid)
        written.append(p)
        if pgm:
            q = p.with_suffix(".pgm")
            write_pgm(q, grid)
            written.append(q)

    if what in ("all", "scalogram"):
        for seg, lab in zip(segs, labels):
            emit(f"scalogram_{lab}", cwt(seg, cfg.wavelet).magnitudes)
    if what in ("all", "coherence"):
        if len(segs) < 2:
            if what == "coherence":
                raise SingleChannelData("coherence export needs two channels")
        else:
            cmap = wcoh(segs[0], segs[1], cfg.wavelet, cfg.smoothing)
            emit("coherence", cmap.values)
    return written


# -- commands -----------------------------------------------------------------------------

def cmd_simulate(cfg: ExperimentConfig) -> dict:
    out = _out_dir(cfg)
    chans = generate(cfg.synthetic)
    path = out / "data.csv"
    write_csv(path, chans)
    _echo(cfg, out)
    corr = pearson_corr(chans[0].values, chans[1].values)
    log.info("wrote %s (%d samples, corr %.3f)", path, len(chans[0]), corr)
    return {"csv": str(path), "n_samples": len(chans[0]), "pearson_corr": corr}


def cmd_analyze(cfg: ExperimentConfig) -> dict:
    out = _out_dir(cfg)
    chans = load_data(cfg)
    if len(chans) < 2:
        raise SingleChannelData("analyze needs a dual-channel series")
    x, y = chans[0], chans[1]
    ds = make_windows([x, y], cfg.window)
    values, flags = wcoh_batch(ds.inputs[:, 0], ds.inputs[:, 1], cfg.wavelet, cfg.smoothing)
    per_window = mean_coherence(values)
    with (out / "coherence_series.csv").open("w") as fh:
        fh.write("start,mean_coherence\n")
        for s, v in zip(ds.start_indices, per_window):
            fh.write(f"{int(s)},{float(v)!r}\n")
    maps = []
    for idx in cfg.analyze_windows:
        maps += [p.name for p in export_window(chans, cfg, idx, out)]
    report = {
        "labels": _labels(chans),
        "n_samples": len(x),
        "n_windows": len(ds),
        "pearson_corr": pearson_corr(x.values, y.values),
        "mean_coherence": float(np.mean(per_window)),
        "std_coherence": float(np.std(per_window)),
        "degenerate_windows": int(np.sum(flags)),
        "maps": maps,
    }
    _write_json(out / "analysis.json", report)
    _echo(cfg, out)
    log.info("corr %.4f, mean coherence %.4f", report["pearson_corr"], report["mean_coherence"])
    return report


def _holdout_split(ds, n_samples, test_fraction, gap):
    cut = int(round(n_samples * (1 - test_fraction)))
    test = np.flatnonzero(ds.start_indices >= cut)
    trainable = np.flatnonzero(ds.span_ends < cut - gap)
    if test.size == 0 or trainable.size == 0:
        raise ConfigError("test_fraction leaves an empty train or test split")
    return ds.subset(trainable), ds.subset(test), cut


def cmd_fit(cfg: ExperimentConfig) -> dict:
    out = _out_dir(cfg)
    chans = load_data(cfg)
    spec = cfg.model_spec()
    if spec.joint and len(chans) < 2:
        raise SingleChannelData(f"{spec.kind.value} needs two channels")
    ds = make_windows(chans, cfg.window)
    gap = cfg.window.span if cfg.cv.purge_gap is None else cfg.cv.purge_gap
    train_ds, test_ds, cut = _holdout_split(ds, len(chans[0]), cfg.test_fraction, gap)
    labels = _labels(chans)
    groups = [tuple(range(len(chans)))] if spec.joint else [(c,) for c in range(len(chans))]
    metrics = {"model": spec.kind.value, "split": {"cut": cut, "n_train": len(train_ds), "n_test": len(test_ds)},
               "fits": {}}
    for group in groups:
        model = spec.build(channel=group[0], seed=cfg.train.seed)
        train(model, train_ds, cfg.train)
        name = "model" if spec.joint else f"model_{labels[group[0]]}"
        save_model(model, out / name)
        metrics["fits"][name] = {
            "channels": [labels[c] for c in model.channels],
            "train": {labels[c]: v for c, v in evaluate(model, train_ds).items()},
            "test": {labels[c]: v for c, v in evaluate(model, test_ds).items()},
            "history": model.history,
            "best_epoch": getattr(model, "best_epoch", None),
        }
    _write_json(out / "metrics.json", metrics)
    _echo(cfg, out)
    return metrics


def _bench_task(args):
    cfg, regime, kind = args
    chans = load_data(cfg, regime)
    spec = cfg.model_spec(kind)
    t0 = time.perf_counter()
    report = cross_validate(spec, chans, k=cfg.cv.k, purge_gap=cfg.cv.purge_gap, cfg=cfg.train,
                            window=cfg.window, min_test_windows=cfg.cv.min_test_windows)
    return regime, kind, report, time.perf_counter() - t0, _labels(chans)


def _fmt_table(header, rows) -> str:
    cells = [header] + rows
    widths = [max(len(r[j]) for r in cells) for j in range(len(header))]
    lines = ["  ".join(c.ljust(w) for c, w in zip(r, widths)) for r in cells]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def cmd_benchmark(cfg: ExperimentConfig) -> dict:
    out = _out_dir(cfg)
    regimes = ("DATA",) if cfg.csv is not None else cfg.regimes
    tasks = [(cfg, None if r == "DATA" else r, m) for r in regimes for m in cfg.models]
    if cfg.jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            results = list(pool.map(_bench_task, tasks))
    else:
        results = [_bench_task(t) for t in tasks]

    grid, timings, reports = {}, {}, {}
    labels = results[0][4]
    for regime, kind, report, total, _ in results:
        rname = regime or "DATA"
        reports.setdefault(rname, {})[kind] = report.to_dict()
        timings.setdefault(rname, {})[kind] = {"folds_s": report.timings, "total_s": total}
        for c in report.channels:
            grid.setdefault(kind, {})[f"{rname}_{labels[c]}"] = report.mean_r2(c)

    columns = [f"{r}_{lab}" for r in regimes for lab in labels]
    with (out / "grid.csv").open("w") as fh:
        fh.write(",".join(["model", *columns]) + "\n")
        for kind in cfg.models:
            vals = [grid[kind].get(col) for col in columns]
            fh.write(",".join([kind, *("" if v is None else repr(v) for v in vals)]) + "\n")
    rows = [[k, *("-" if grid[k].get(c) is None else f"{grid[k][c]:.4f}" for c in columns)] for k in cfg.models]
    (out / "table.txt").write_text(_fmt_table(["model", *columns], rows))
    _write_json(out / "report.json", {"config": cfg.result_dict(), "results": reports})
    _write_json(out / "timings.json", timings)
    _echo(cfg, out)
    log.info("\n%s", (out / "table.txt").read_text())
    return {"grid": grid, "columns": columns}


def cmd_export(cfg: ExperimentConfig, window=0, what="all", pgm=True) -> dict:
    out = _out_dir(cfg)
    chans = load_data(cfg)
    paths = export_window(chans, cfg, window, out, what, pgm)
    _echo(cfg, out)
    return {"files": [p.name for p in paths]}


# -- argument parsing -------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON experiment config")
    common.add_argument("--seed", type=int, help="seed for simulation and training")
    common.add_argument("--out", help="output directory")
    common.add_argument("--model", help="model kind, or a comma list for benchmark")
    common.add_argument("--regime", help="synthetic regime, or a comma list for benchmark")
    common.add_argument("--k-folds", type=int, help="number of CV folds")
    common.add_argument("--jobs", type=int, help="parallel benchmark workers")
    common.add_argument("--csv", help="read data from this CSV instead of simulating")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="lfpforecast", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common], help="write a synthetic dual-channel CSV")
    sub.add_parser("analyze", parents=[common], help="correlation and coherence summary")
    sub.add_parser("fit", parents=[common], help="train one model on a holdout split")
    sub.add_parser("benchmark", parents=[common], help="purged CV grid over models and regimes")
    exp = sub.add_parser("export", parents=[common], help="scalogram and coherence maps of one window")
    exp.add_argument("--window", type=int, default=0, help="window index")
    exp.add_argument("--what", choices=("all", "scalogram", "coherence"), default="all")
    exp.add_argument("--no-pgm", action="store_true", help="skip the PGM images")
    return parser


def resolve_config(args) -> ExperimentConfig:
    cfg = config_mod.load(args.config) if args.config else ExperimentConfig()
    cfg = config_mod.apply_overrides(cfg, seed=args.seed, out=args.out, model=args.model, regime=args.regime,
                                     k_folds=args.k_folds, jobs=args.jobs)
    if args.csv is not None:
        cfg = replace(cfg, csv=args.csv)
    return cfg


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args)
        if args.command == "simulate":
            cmd_simulate(cfg)
        elif args.command == "analyze":
            cmd_analyze(cfg)
        elif args.command == "fit":
            cmd_fit(cfg)
        elif args.command == "benchmark":
            cmd_benchmark(cfg)
        else:
            cmd_export(cfg, args.window, args.what, not args.no_pgm)
    except LFPError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (OSError, ValueError, TypeError) as exc:
        # unclassified failures inside a command
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
