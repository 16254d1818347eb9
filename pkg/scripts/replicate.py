#!/usr/bin/env python
"""
Multi-seed replication run.

For every seed: synth -> train (all stages in dependency order) -> eval, each
in its own work directory. The per-seed CSV reports are then concatenated and
summarized as mean and standard deviation over seeds.
"""

import sys
import os
import argparse
import pandas as pd

# Add the project root to the Python path
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from pipeline.commands import cmd_eval, cmd_synth, cmd_train
from utils.artifacts import STAGES
from utils.config import load_pipeline_config
from utils.error_handler import as_exit_code
from utils.logger import setup_logger

logger = setup_logger("replicate")

REPORTS = {
    "verification": ["room_type", "j", "variant"],
    "metadata": ["room_type", "j", "target", "estimator"],
    "augmentation": ["room_type", "j", "variant"],
}


def parse_args():
    parser = argparse.ArgumentParser(description="Replicate the e-vector experiments over several seeds")
    parser.add_argument("--config", type=str, default="config/pipeline.yaml", help="Pipeline configuration")
    parser.add_argument("--seeds", type=int, nargs="+", default=[1, 2, 3], help="Seeds to run")
    parser.add_argument("--out", type=str, default="replication", help="Work and report directory")
    parser.add_argument("--workers", type=int, default=1, help="Worker processes")
    return parser.parse_args()


def run_seed(config_path: str, seed: int, out: str, workers: int) -> str:
    """Full pipeline for one seed; returns its report directory."""
    config = load_pipeline_config(config_path, seed_override=seed)
    seed_dir = os.path.join(out, f"seed{seed}")
    manifest = cmd_synth(config, os.path.join(seed_dir, "corpus"), workers=workers)
    models = os.path.join(seed_dir, "models")
    for stage in STAGES:
        cmd_train(config, manifest, stage, models, workers=workers)
    reports = os.path.join(seed_dir, "reports")
    cmd_eval(config, manifest, models, reports, workers=workers)
    return reports


def aggregate(report_dirs, out: str) -> None:
    """Concatenate per-seed tables and write <name>_all.csv and <name>_summary.csv"""
    for name, keys in REPORTS.items():
        frames = [pd.read_csv(os.path.join(d, f"{name}.csv")) for d in report_dirs]
        frames = [f for f in frames if not f.empty]
        if not frames:
            continue
        table = pd.concat(frames, ignore_index=True)
        value = "mae" if name == "metadata" else "eer"
        summary = table.groupby(keys)[value].agg(["mean", "std", "count"]).reset_index()
        table.to_csv(os.path.join(out, f"{name}_all.csv"), index=False)
        summary.to_csv(os.path.join(out, f"{name}_summary.csv"), index=False)
        logger.info(f"{name}: {len(table)} rows over {table['seed'].nunique()} seed(s)")


@as_exit_code
def main(args):
    report_dirs = [run_seed(args.config, seed, args.out, args.workers) for seed in args.seeds]
    aggregate(report_dirs, args.out)
    print(f"Replication reports in {args.out}")


if __name__ == "__main__":
    sys.exit(main(parse_args()))
