"""
Report writers: CSV tables, JSON summary, trial lists and plot-data series.
"""
import json
import os
from typing import Dict, List, Sequence, Tuple

import numpy as np
import pandas as pd

from schemas.report import EvalReport, TrialScore
from utils.artifacts import atomic_write_text
from utils.logger import setup_logger

logger = setup_logger("reports")

VERIFICATION_CSV = "verification.csv"
METADATA_CSV = "metadata.csv"
AUGMENTATION_CSV = "augmentation.csv"
SUMMARY_JSON = "summary.json"
PLOT_DIR = "plots"

VERIFICATION_COLUMNS = ["seed", "room_type", "j", "variant", "eer", "n_trials"]
METADATA_COLUMNS = ["seed", "room_type", "j", "target", "estimator", "mae"]


def rows_frame(rows: Sequence, columns: List[str]) -> pd.DataFrame:
    return pd.DataFrame([r.model_dump(mode="json") for r in rows], columns=columns)


def _write_frame(frame: pd.DataFrame, path: str, sep: str = ",") -> str:
    return atomic_write_text(path, frame.to_csv(index=False, sep=sep, float_format="%.6f"))


def headline_table(report: EvalReport) -> pd.DataFrame:
    """
    One row per room type: EER at the largest j, then SNR / T60 MAE per estimator at that j.
    """
    verification = rows_frame(report.verification, VERIFICATION_COLUMNS)
    if verification.empty:
        return pd.DataFrame()
    j = int(verification["j"].max())
    table = verification[verification["j"] == j].set_index("room_type")[["eer"]]
    table.columns = [f"eer_j{j}"]

    metadata = rows_frame(report.metadata, METADATA_COLUMNS)
    if not metadata.empty:
        at_j = metadata[metadata["j"] == j]
        mae = at_j.pivot_table(index="room_type", columns=["target", "estimator"], values="mae")
        mae.columns = [f"{target}_{estimator}" for target, estimator in mae.columns]
        table = table.join(mae)
    return table.sort_index()


def format_headline(report: EvalReport) -> str:
    table = headline_table(report)
    if table.empty:
        return "(no results)"
    return table.to_string(float_format=lambda v: f"{v:.3f}")


def write_trial_lists(trials: Dict[str, List[TrialScore]], report_dir: str) -> List[str]:
    paths = []
    for room_type, room_trials in sorted(trials.items()):
        path = os.path.join(report_dir, f"trials_{room_type}.txt")
        atomic_write_text(path, "".join(t.to_trial_line() + "\n" for t in room_trials))
        paths.append(path)
    return paths


def write_plot_data(report: EvalReport, det: Dict[Tuple[str, int], Tuple[np.ndarray, np.ndarray]],
                    report_dir: str) -> List[str]:
    """(x, y) series as tab-separated files, one per curve."""
    plot_dir = os.path.join(report_dir, PLOT_DIR)
    paths = []
    verification = rows_frame(report.verification, VERIFICATION_COLUMNS)
    for room_type, group in verification.groupby("room_type", sort=True):
        paths.append(_write_frame(group.sort_values("j")[["j", "eer"]],
                                  os.path.join(plot_dir, f"verification_{room_type}.tsv"), sep="\t"))

    metadata = rows_frame(report.metadata, METADATA_COLUMNS)
    for (room_type, target), group in metadata.groupby(["room_type", "target"], sort=True):
        series = group.pivot_table(index="j", columns="estimator", values="mae").reset_index()
        series.columns.name = None
        prefix = "snr" if target == "snr_db" else "t60"
        paths.append(_write_frame(series, os.path.join(plot_dir, f"{prefix}_mae_{room_type}.tsv"), sep="\t"))

    for (room_type, j), (far, frr) in sorted(det.items()):
        frame = pd.DataFrame({"far": far, "frr": frr})
        paths.append(_write_frame(frame, os.path.join(plot_dir, f"det_{room_type}_j{j}.tsv"), sep="\t"))
    return paths


def write_reports(report: EvalReport, trials: Dict[str, List[TrialScore]],
                  det: Dict[Tuple[str, int], Tuple[np.ndarray, np.ndarray]], report_dir: str) -> List[str]:
    """
    Write every report file of an evaluation run.

    Args:
        report: Collected rows
        trials: Trial lists per room type
        det: DET points per (room type, j)
        report_dir: Output directory

    Returns:
        Paths written
    """
    os.makedirs(report_dir, exist_ok=True)
    paths = [
        _write_frame(rows_frame(report.verification, VERIFICATION_COLUMNS),
                     os.path.join(report_dir, VERIFICATION_CSV)),
        _write_frame(rows_frame(report.metadata, METADATA_COLUMNS),
                     os.path.join(report_dir, METADATA_CSV)),
        _write_frame(rows_frame(report.augmentation, VERIFICATION_COLUMNS),
                     os.path.join(report_dir, AUGMENTATION_CSV)),
    ]
    headline = headline_table(report)
    summary = {
        "seed": report.seed,
        "config_digest": report.config_digest,
        "headline": json.loads(headline.to_json(orient="index")) if not headline.empty else {},
        "augmentation": rows_frame(report.augmentation, VERIFICATION_COLUMNS)
        .pivot_table(index="room_type", columns="variant", values="eer").to_dict(orient="index")
        if report.augmentation else {},
    }
    summary_path = os.path.join(report_dir, SUMMARY_JSON)
    atomic_write_text(summary_path, json.dumps(summary, indent=2, sort_keys=True) + "\n")
    paths.append(summary_path)
    paths.extend(write_trial_lists(trials, report_dir))
    paths.extend(write_plot_data(report, det, report_dir))
    logger.info(f"Wrote {len(paths)} report files to {report_dir}")
    return paths
