"""
Subcommand implementations: synth, train <stage>, eval.

Each command echoes its effective configuration, holds the artifact lock of
its output directory while it runs and writes metrics.prom when it is done.
"""
import os
import time
from typing import Dict, List, Optional

import numpy as np

from evaluation.experiments import run_augmentation_eval, run_metadata_eval, run_verification
from evaluation.reports import format_headline, write_reports
from evector.lda import prepare_ivectors, project
from metadata.bottleneck import predict_bottleneck
from metadata.ridge import predict_ridge
from metadata.wada import wada_estimate
from pipeline.dataset import IVectorTable, load_manifest
from pipeline.stages import (STAGE_TRAINERS, StageContext, load_bottleneck, load_ivectors, load_lda,
                             load_plda, load_ridge, load_wada)
from schemas.report import EvalReport
from sources.base_source import SourceBank
from synthesis.corpus import generate_corpus
from utils.artifacts import STAGES, ArtifactStore, atomic_write_text
from utils.config import AugmentVariant, PipelineConfig, TargetKind, config_digest, dump_config_yaml
from utils.error_handler import MissingArtifactException, ValidationException
from utils.logger import StageLogger, setup_logger
from utils.metrics import record_stage_duration, write_metrics

logger = setup_logger("commands")

EFFECTIVE_CONFIG = "effective_config.yaml"


def echo_config(config: PipelineConfig, directory: str) -> str:
    """Write the effective configuration next to the command's outputs and log its digest."""
    digest = config_digest(config)
    path = atomic_write_text(os.path.join(directory, EFFECTIVE_CONFIG),
                             f"# digest: {digest}\n" + dump_config_yaml(config))
    logger.info(f"Effective configuration {digest[:12]} written to {path}")
    return path


def _finish(stage: str, started: float, directory: str) -> None:
    seconds = time.perf_counter() - started
    record_stage_duration(stage, seconds)
    StageLogger(stage).stage_finished(seconds)
    write_metrics(directory)


def cmd_synth(config: PipelineConfig, out_dir: str, workers: int = 1,
              sources: Optional[SourceBank] = None) -> str:
    """
    Synthesize the corpus and print per-split instance counts.

    Returns:
        Manifest path
    """
    started = time.perf_counter()
    with ArtifactStore(out_dir):
        manifest = generate_corpus(config.corpus, config.seed, out_dir, sources=sources, workers=workers)
        counts = load_manifest(manifest).split_counts()
        echo_config(config, out_dir)
    print(f"synth: {sum(counts.values())} instances "
          + " ".join(f"{split}={n}" for split, n in counts.items()))
    print(f"manifest: {manifest}")
    _finish("synth", started, out_dir)
    return manifest


def cmd_train(config: PipelineConfig, manifest: Optional[str], stage: str, model_dir: str,
              workers: int = 1) -> str:
    """
    Train one stage after checking that its upstream artifacts exist.

    Returns:
        Path of the stage's model artifact
    """
    if stage not in STAGES:
        raise ValidationException(f"Unknown stage '{stage}'", details={"stages": list(STAGES)})
    started = time.perf_counter()
    with ArtifactStore(model_dir) as store:
        store.require_upstream(stage)
        dataset = load_manifest(manifest) if stage != "wada" else None
        path = STAGE_TRAINERS[stage](StageContext(config, store, dataset, workers))
        echo_config(config, model_dir)
    print(f"train {stage}: {path}")
    _finish(stage, started, model_dir)
    return path


def metadata_estimates(config: PipelineConfig, table: IVectorTable, store: ArtifactStore) -> Dict[str, np.ndarray]:
    """SNR and T60 estimates for every table row from the augmentation estimator."""
    j = config.eval.augmentation_j
    estimator = config.eval.augmentation_estimator
    models = load_bottleneck(store) if estimator == "bottleneck" else load_ridge(store)
    predict = predict_bottleneck if estimator == "bottleneck" else predict_ridge
    evectors = project(prepare_ivectors(table.values, config.lda.length_norm), load_lda(store).sliced(j))
    estimates = {}
    for target in (TargetKind.SNR_DB, TargetKind.T60_S):
        key = (target.value, j)
        if key not in models:
            raise MissingArtifactException(estimator, f"No {estimator} model for {target.value} j={j}")
        estimates[target.value] = np.asarray(predict(models[key], evectors), dtype=np.float64)
    return estimates


def cmd_eval(config: PipelineConfig, manifest: Optional[str], model_dir: str, report_dir: str,
             workers: int = 1) -> List[str]:
    """
    Run every experiment, write reports and print the headline table.

    Returns:
        Report paths
    """
    started = time.perf_counter()
    ev = config.eval
    with ArtifactStore(model_dir) as store:
        for stage in STAGES:
            store.require(stage)
        dataset = load_manifest(manifest)
        table = load_ivectors(store)
        lda = load_lda(store)

        verification = run_verification(table, lda, load_plda(store), config.lda.dims, ev.room_types,
                                        config.seed, config.lda.length_norm)

        wada_estimates = None
        if TargetKind.SNR_DB in config.metadata.targets:
            wada = load_wada(store)
            wada_estimates = {r.instance_id: wada_estimate(dataset.clip(r), wada)
                              for r in dataset.select(["test"])}
        metadata_rows = run_metadata_eval(table, lda, load_ridge(store), load_bottleneck(store),
                                          wada_estimates, config.lda.dims, ev.room_types,
                                          config.metadata.targets, config.seed, config.lda.length_norm)

        variants = list(ev.variants)
        if ev.include_constant_control and AugmentVariant.CONSTANT not in variants:
            variants.append(AugmentVariant.CONSTANT)
        augmentation_rows = run_augmentation_eval(
            table, metadata_estimates(config, table, store), variants, ev.room_types,
            ev.augmentation_j, config.seed, plda_regularization=config.plda.regularization,
            length_norm=config.lda.length_norm,
        )

    report = EvalReport(seed=config.seed, config_digest=config_digest(config),
                        verification=verification.rows, metadata=metadata_rows,
                        augmentation=augmentation_rows)
    paths = write_reports(report, verification.trials, verification.det, report_dir)
    paths.append(echo_config(config, report_dir))
    print(format_headline(report))
    _finish("eval", started, report_dir)
    return paths
