"""
Room verification, metadata estimation and augmentation experiments.

All experiments read i-vectors from an IVectorTable so that no audio or
feature work happens at evaluation time (WADA estimates are passed in).
"""
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from evaluation.metrics import compute_eer, compute_mae, det_curve, split_scores
from evector.augment import LeakageGuard, MetadataScaler, augment
from evector.lda import LdaModel, compute_scatter, prepare_ivectors, project, train_lda
from evector.plda import PldaModel, plda_score_matrix, train_plda
from metadata.bottleneck import BottleneckNet, predict_bottleneck
from metadata.ridge import RidgeModel, predict_ridge
from pipeline.dataset import IVectorTable
from schemas.report import MetadataRow, TrialScore, VerificationRow
from utils.config import AugmentVariant, RoomType, TargetKind
from utils.error_handler import InsufficientDataException, MissingArtifactException
from utils.logger import setup_logger
from utils.metrics import record_eer, record_mae

logger = setup_logger("experiments")


@dataclass
class VerificationResult:
    rows: List[VerificationRow] = field(default_factory=list)
    trials: Dict[str, List[TrialScore]] = field(default_factory=dict)
    det: Dict[Tuple[str, int], Tuple[np.ndarray, np.ndarray]] = field(default_factory=dict)


def _eval_splits(table: IVectorTable, room_type: RoomType) -> Tuple[IVectorTable, IVectorTable]:
    enroll = table.select(["enroll"], room_type)
    test = table.select(["test"], room_type)
    if len(enroll) == 0 or len(test) == 0:
        raise InsufficientDataException(
            f"room type {room_type.value} needs enroll and test instances",
            details={"enroll": len(enroll), "test": len(test)}
        )
    return enroll, test


def score_trials(enroll_vectors: np.ndarray, enroll_rooms: Sequence[str],
                 test_vectors: np.ndarray, test_rooms: Sequence[str], test_ids: Sequence[str],
                 plda: PldaModel, test_paths: Optional[Sequence[str]] = None) -> List[TrialScore]:
    """
    Score every enrolled room against every test vector.

    A room's enrollment model is the mean of its enrollment e-vectors.
    """
    rooms = sorted(set(enroll_rooms))
    enroll_rooms = np.asarray(enroll_rooms)
    models = np.vstack([enroll_vectors[enroll_rooms == room].mean(axis=0) for room in rooms])
    scores = plda_score_matrix(models, test_vectors, plda)
    trials = []
    for r, room in enumerate(rooms):
        for i, test_id in enumerate(test_ids):
            trials.append(TrialScore(
                enroll_room_id=room,
                test_instance_id=test_id,
                score=float(scores[r, i]),
                is_target=test_rooms[i] == room,
                test_path=test_paths[i] if test_paths is not None else None,
            ))
    return trials


def run_verification(table: IVectorTable,
                     lda: LdaModel,
                     plda_models: Mapping[int, PldaModel],
                     dims: Sequence[int],
                     room_types: Sequence[RoomType],
                     seed: int,
                     length_norm: bool = False) -> VerificationResult:
    """
    EER per room type and e-vector dimension.

    Args:
        table: I-vectors with enroll and test splits
        lda: LDA trained at max(dims); smaller dimensions use its leading columns
        plda_models: PLDA per dimension
        dims: E-vector dimensions
        room_types: Room types to evaluate
        seed: Seed recorded in the rows
        length_norm: Length-normalize i-vectors before projection

    Returns:
        VerificationResult with one row per (room type, j)
    """
    result = VerificationResult()
    for room_type in room_types:
        room_type = RoomType(room_type)
        enroll, test = _eval_splits(table, room_type)
        for j in dims:
            if j not in plda_models:
                raise MissingArtifactException("plda", f"No PLDA model for j={j}; retrain plda")
            lda_j = lda.sliced(j)
            trials = score_trials(
                project(prepare_ivectors(enroll.values, length_norm), lda_j), enroll.room_ids,
                project(prepare_ivectors(test.values, length_norm), lda_j), test.room_ids,
                test.instance_ids, plda_models[j], test.paths,
            )
            eer = compute_eer(trials)
            _, far, frr = det_curve(*split_scores(trials))
            result.rows.append(VerificationRow(seed=seed, room_type=room_type, j=j, eer=eer,
                                               n_trials=len(trials)))
            result.det[(room_type.value, j)] = (far, frr)
            result.trials[room_type.value] = trials
            record_eer(room_type.value, j, AugmentVariant.NONE.value, eer)
            logger.info(f"Verification {room_type.value} j={j}: EER {eer:.2f}% over {len(trials)} trials")
    return result


def run_metadata_eval(table: IVectorTable,
                      lda: LdaModel,
                      ridge_models: Mapping[Tuple[str, int], RidgeModel],
                      bottleneck_models: Mapping[Tuple[str, int], BottleneckNet],
                      wada_estimates: Optional[Mapping[str, float]],
                      dims: Sequence[int],
                      room_types: Sequence[RoomType],
                      targets: Sequence[TargetKind],
                      seed: int,
                      length_norm: bool = False) -> List[MetadataRow]:
    """
    Test-split MAE of WADA (SNR only), ridge and bottleneck estimators.

    WADA does not depend on j; its MAE is repeated for every j so each
    series has a value at every dimension.
    """
    rows: List[MetadataRow] = []
    for room_type in room_types:
        room_type = RoomType(room_type)
        test = table.select(["test"], room_type)
        if len(test) == 0:
            raise InsufficientDataException(f"room type {room_type.value} has no test instances")
        ivectors = prepare_ivectors(test.values, length_norm)
        for j in dims:
            evectors = project(ivectors, lda.sliced(j))
            for target in targets:
                target = TargetKind(target)
                truth = test.target(target)
                key = (target.value, j)
                if key not in ridge_models:
                    raise MissingArtifactException("ridge", f"No ridge model for {target.value} j={j}")
                if key not in bottleneck_models:
                    raise MissingArtifactException("bottleneck", f"No bottleneck model for {target.value} j={j}")
                maes = {
                    "ridge": compute_mae(predict_ridge(ridge_models[key], evectors), truth),
                    "bottleneck": compute_mae(predict_bottleneck(bottleneck_models[key], evectors), truth),
                }
                if target == TargetKind.SNR_DB and wada_estimates is not None:
                    missing = [i for i in test.instance_ids if i not in wada_estimates]
                    if missing:
                        raise InsufficientDataException(
                            f"{len(missing)} test instance(s) lack a WADA estimate",
                            details={"instances": missing[:10]}
                        )
                    maes["wada"] = compute_mae([wada_estimates[i] for i in test.instance_ids], truth)
                for estimator, mae in sorted(maes.items()):
                    rows.append(MetadataRow(seed=seed, room_type=room_type, j=j, target=target,
                                            estimator=estimator, mae=mae))
                    record_mae(room_type.value, j, target.value, estimator, mae)
        logger.info(f"Metadata evaluation {room_type.value}: {len(test)} test instances")
    return rows


def run_augmentation_eval(table: IVectorTable,
                          estimates: Mapping[str, np.ndarray],
                          variants: Sequence[AugmentVariant],
                          room_types: Sequence[RoomType],
                          j: int,
                          seed: int,
                          plda_regularization: float = 1e-6,
                          length_norm: bool = False,
                          train_splits: Sequence[str] = ("train",),
                          guard: Optional[LeakageGuard] = None) -> List[VerificationRow]:
    """
    Retrain LDA and PLDA on metadata-augmented i-vectors and report EER per variant.

    Args:
        table: I-vectors of all splits
        estimates: Estimated "snr_db" and "t60_s" per table row (never ground truth)
        variants: Augmentation variants
        room_types: Room types to evaluate
        j: E-vector dimension
        seed: Seed recorded in the rows
        plda_regularization: PLDA ridge factor
        length_norm: Length-normalize i-vectors before augmentation
        train_splits: Splits used to fit normalization, LDA and PLDA
        guard: Leakage guard applied to train_splits

    Returns:
        One row per (room type, variant)
    """
    guard = guard or LeakageGuard()
    guard.check(train_splits, "augmentation fitting")
    snr_est = np.asarray(estimates["snr_db"], dtype=np.float64)
    t60_est = np.asarray(estimates["t60_s"], dtype=np.float64)
    if len(snr_est) != len(table) or len(t60_est) != len(table):
        raise InsufficientDataException("metadata estimates must cover every i-vector")

    train = table.mask(train_splits)
    scaler = MetadataScaler.fit(snr_est[train], t60_est[train])
    ivectors = prepare_ivectors(table.values, length_norm)
    train_rooms = [r for r, keep in zip(table.room_ids, train) if keep]

    rows: List[VerificationRow] = []
    for variant in variants:
        variant = AugmentVariant(variant)
        augmented = augment(ivectors, snr_est, t60_est, scaler, variant)
        lda = train_lda(compute_scatter(augmented[train], train_rooms), j)
        evectors = project(augmented, lda)
        plda = train_plda(evectors[train], train_rooms, plda_regularization)
        for room_type in room_types:
            room_type = RoomType(room_type)
            enroll_mask = table.mask(["enroll"], room_type)
            test_mask = table.mask(["test"], room_type)
            if not enroll_mask.any() or not test_mask.any():
                raise InsufficientDataException(f"room type {room_type.value} needs enroll and test instances")
            test_idx = np.flatnonzero(test_mask)
            trials = score_trials(
                evectors[enroll_mask], [table.room_ids[i] for i in np.flatnonzero(enroll_mask)],
                evectors[test_mask], [table.room_ids[i] for i in test_idx],
                [table.instance_ids[i] for i in test_idx], plda,
            )
            eer = compute_eer(trials)
            rows.append(VerificationRow(seed=seed, room_type=room_type, j=j, variant=variant,
                                        eer=eer, n_trials=len(trials)))
            record_eer(room_type.value, j, variant.value, eer)
        logger.info(f"Augmentation variant {variant.value}: LDA/PLDA retrained on "
                    f"{int(train.sum())} vectors")
    return rows
