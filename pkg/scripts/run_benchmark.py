#!/usr/bin/env python3
"""Run the model x regime benchmark and print the accuracy grid.

A thin wrapper over ``lfpforecast benchmark`` with a reduced default size so
that a laptop run finishes in minutes. Pass ``--full`` for the 20000-sample,
10-fold setting.
"""
import argparse
import json
import sys
from pathlib import Path

from lfpforecast.cli import main

QUICK = {
    "synthetic": {"n_samples": 4000},
    "wavelet": {"n_scales": 8},
    "architecture": {"encoder_filters": [8, 4]},
    "train": {"learning_rate": 0.01, "max_epochs": 20, "early_stop_patience": 3},
    "cv": {"k": 3},
}


def parse_args():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--out", default="bench_out")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--models", default="AR,VAR,LSTM,WCLSA,WCOH_CLSA")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--full", action="store_true", help="use the library defaults instead of the quick preset")
    return p.parse_args()


if __name__ == "__main__":
    args = parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    cfg = out / "bench_config.json"
    cfg.write_text(json.dumps({} if args.full else QUICK, indent=2))
    code = main(["benchmark", "--config", str(cfg), "--seed", str(args.seed), "--model", args.models,
                 "--jobs", str(args.jobs), "--out", str(out), "-v"])
    if code == 0:
        print((out / "table.txt").read_text())
    sys.exit(code)
