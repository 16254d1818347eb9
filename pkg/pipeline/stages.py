"""
Per-stage training and artifact loading.

Each trainer reads its inputs from the manifest and the upstream artifacts,
writes one model file (per-dimension models are bundled into one file) and a
pandas training log `<stage>_training.csv`.
"""
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Optional, Tuple, Type

import numpy as np
import pandas as pd

from evector.augment import LeakageGuard
from evector.lda import LdaModel, compute_scatter, prepare_ivectors, project, train_lda
from evector.plda import PldaModel, train_plda
from ivector.gmm import GmmModel, train_ubm
from ivector.stats import accumulate_stats
from ivector.tmatrix import TMatrixModel, extract_ivector, train_tmatrix
from metadata.bottleneck import BottleneckNet, train_bottleneck
from metadata.ridge import RidgeModel, select_ridge_lambda
from metadata.wada import WadaTable, build_wada_table, load_wada_table, save_wada_table
from pipeline.dataset import Dataset, IVectorTable, feature_cache_for, load_features
from utils.artifacts import IVECTOR_ARTIFACT, ArtifactStore, atomic_write_text
from utils.config import PipelineConfig, TargetKind
from utils.error_handler import MissingArtifactException
from utils.logger import StageLogger
from utils.metrics import record_iteration
from utils.model_io import load_model, save_model

ESTIMATOR_SPLITS = ("train", "val")


@dataclass
class StageContext:
    config: PipelineConfig
    store: ArtifactStore
    dataset: Optional[Dataset] = None
    workers: int = 1


def bundle_models(models: Dict[str, Any]) -> Tuple[Dict, Dict[str, np.ndarray]]:
    """Merge several models into one payload, arrays prefixed by their key."""
    meta: Dict[str, Any] = {"models": {}}
    arrays: Dict[str, np.ndarray] = {}
    for key, model in sorted(models.items()):
        model_meta, model_arrays = model.to_payload()
        meta["models"][key] = model_meta
        for name, array in model_arrays.items():
            arrays[f"{key}/{name}"] = array
    return meta, arrays


def unbundle_models(meta: Dict, arrays: Dict[str, np.ndarray], cls: Type) -> Dict[str, Any]:
    models = {}
    for key, model_meta in meta["models"].items():
        prefix = f"{key}/"
        models[key] = cls.from_payload(
            model_meta, {n[len(prefix):]: a for n, a in arrays.items() if n.startswith(prefix)}
        )
    return models


def _dim_key(j: int) -> str:
    return f"j{j}"


def _target_key(target: TargetKind, j: int) -> str:
    return f"{TargetKind(target).value}/j{j}"


def write_training_log(store: ArtifactStore, stage: str, rows: List[Dict[str, Any]]) -> str:
    frame = pd.DataFrame(rows)
    return atomic_write_text(store.path(f"{stage}_training.csv"), frame.to_csv(index=False))


def _iteration_logger(stage: str, rows: List[Dict[str, Any]]) -> Callable[[int, float], None]:
    slog = StageLogger(stage)

    def on_iteration(index: int, objective: float) -> None:
        rows.append({"iteration": index, "objective": objective})
        slog.iteration(index, objective)
        record_iteration(stage, objective)
    return on_iteration


def _save(ctx: StageContext, stage: str, payload) -> str:
    meta, arrays = payload
    path = save_model(ctx.store.stage_path(stage), stage, meta, arrays)
    StageLogger(stage).artifact_written(path)
    return path


def estimator_dims(config: PipelineConfig) -> List[int]:
    """Dimensions the regressors are trained at: the j-list plus the augmentation dimension."""
    return sorted(set(config.lda.dims) | {config.eval.augmentation_j})


# Loaders

def load_ubm(store: ArtifactStore) -> GmmModel:
    return GmmModel.from_payload(*load_model(store.require("ubm"), "ubm"))


def load_tmatrix(store: ArtifactStore) -> TMatrixModel:
    return TMatrixModel.from_payload(*load_model(store.require("tmatrix"), "tmatrix"))


def load_ivectors(store: ArtifactStore) -> IVectorTable:
    store.require("tmatrix")
    path = store.path(IVECTOR_ARTIFACT)
    try:
        return IVectorTable.from_payload(*load_model(path, "ivectors"))
    except FileNotFoundError as e:
        raise MissingArtifactException("tmatrix", f"i-vector table {path} is missing; rerun 'train tmatrix'") from e


def load_lda(store: ArtifactStore) -> LdaModel:
    return LdaModel.from_payload(*load_model(store.require("lda"), "lda"))


def load_plda(store: ArtifactStore) -> Dict[int, PldaModel]:
    models = unbundle_models(*load_model(store.require("plda"), "plda"), PldaModel)
    return {int(key[1:]): model for key, model in models.items()}


def _load_regressors(store: ArtifactStore, stage: str, cls: Type) -> Dict[Tuple[str, int], Any]:
    models = unbundle_models(*load_model(store.require(stage), stage), cls)
    out = {}
    for key, model in models.items():
        target, j = key.split("/")
        out[(target, int(j[1:]))] = model
    return out


def load_ridge(store: ArtifactStore) -> Dict[Tuple[str, int], RidgeModel]:
    return _load_regressors(store, "ridge", RidgeModel)


def load_bottleneck(store: ArtifactStore) -> Dict[Tuple[str, int], BottleneckNet]:
    return _load_regressors(store, "bottleneck", BottleneckNet)


def load_wada(store: ArtifactStore) -> WadaTable:
    return load_wada_table(store.require("wada"))


# Trainers

def train_ubm_stage(ctx: StageContext) -> str:
    cfg = ctx.config
    records = ctx.dataset.select(["train"])
    cache = feature_cache_for(ctx.store.root, cfg.features)
    features = load_features(ctx.dataset, records, cfg.features, cache, ctx.workers)
    rows: List[Dict[str, Any]] = []
    ubm = train_ubm(features, cfg.ubm.components, cfg.ubm.iters, cfg.seed,
                    init_subsample=cfg.ubm.init_subsample, variance_floor=cfg.ubm.variance_floor,
                    on_iteration=_iteration_logger("ubm", rows))
    write_training_log(ctx.store, "ubm", rows)
    return _save(ctx, "ubm", ubm.to_payload())


def train_tmatrix_stage(ctx: StageContext) -> str:
    """Train T on the training split, then extract i-vectors for every manifest record."""
    cfg = ctx.config
    ubm = load_ubm(ctx.store)
    records = ctx.dataset.records
    cache = feature_cache_for(ctx.store.root, cfg.features)
    stats = [accumulate_stats(f, ubm)
             for f in load_features(ctx.dataset, records, cfg.features, cache, ctx.workers)]
    train_stats = [s for s, r in zip(stats, records) if r.split == "train"]

    rows: List[Dict[str, Any]] = []
    model = train_tmatrix(train_stats, ubm, cfg.tmatrix.dim, cfg.tmatrix.iters, cfg.seed,
                          on_iteration=_iteration_logger("tmatrix", rows))
    write_training_log(ctx.store, "tmatrix", rows)
    path = _save(ctx, "tmatrix", model.to_payload())

    values = np.vstack([extract_ivector(s, model).values for s in stats])
    table = IVectorTable.from_records(records, values)
    meta, arrays = table.to_payload()
    ivector_path = save_model(ctx.store.path(IVECTOR_ARTIFACT), "ivectors", meta, arrays)
    StageLogger("tmatrix").artifact_written(ivector_path)
    return path


def _training_evectors(ctx: StageContext, table: IVectorTable, lda: LdaModel, j: int) -> np.ndarray:
    return project(prepare_ivectors(table.values, ctx.config.lda.length_norm), lda.sliced(j))


def train_lda_stage(ctx: StageContext) -> str:
    """LDA at the largest requested dimension; smaller ones are its leading columns."""
    cfg = ctx.config
    train = load_ivectors(ctx.store).select(["train"])
    scatter = compute_scatter(prepare_ivectors(train.values, cfg.lda.length_norm), train.room_ids)
    lda = train_lda(scatter, cfg.max_j)
    write_training_log(ctx.store, "lda", [{"index": i, "eigenvalue": float(v)}
                                          for i, v in enumerate(lda.eigenvalues)])
    return _save(ctx, "lda", lda.to_payload())


def train_plda_stage(ctx: StageContext) -> str:
    cfg = ctx.config
    train = load_ivectors(ctx.store).select(["train"])
    lda = load_lda(ctx.store)
    models, rows = {}, []
    for j in cfg.lda.dims:
        plda = train_plda(_training_evectors(ctx, train, lda, j), train.room_ids, cfg.plda.regularization)
        models[_dim_key(j)] = plda
        rows.append({"j": j, "between_trace": float(np.trace(plda.between_cov)),
                     "within_trace": float(np.trace(plda.within_cov))})
    write_training_log(ctx.store, "plda", rows)
    return _save(ctx, "plda", bundle_models(models))


def estimator_tables(table: IVectorTable, stage: str, splits: Tuple[str, str] = ESTIMATOR_SPLITS,
                     guard: Optional[LeakageGuard] = None) -> Tuple[IVectorTable, IVectorTable]:
    """
    Training and validation rows of a metadata estimator.

    The leakage guard sees the splits of the rows actually selected.
    """
    train_split, val_split = splits
    train, val = table.select([train_split]), table.select([val_split])
    (guard or LeakageGuard()).check(set(train.splits) | set(val.splits), f"{stage} training")
    return train, val


def _estimator_data(ctx: StageContext, stage: str):
    train, val = estimator_tables(load_ivectors(ctx.store), stage)
    return train, val, load_lda(ctx.store)


def train_ridge_stage(ctx: StageContext) -> str:
    cfg = ctx.config
    train, val, lda = _estimator_data(ctx, "ridge")
    models, rows = {}, []
    for j in estimator_dims(cfg):
        X_train = _training_evectors(ctx, train, lda, j)
        X_val = _training_evectors(ctx, val, lda, j)
        for target in cfg.metadata.targets:
            model, history = select_ridge_lambda(X_train, train.target(target), X_val, val.target(target),
                                                 target, cfg.metadata.lambda_grid)
            models[_target_key(target, j)] = model
            rows.extend({"target": TargetKind(target).value, "j": j, **h,
                         "selected": h["lambda"] == model.lam} for h in history)
    write_training_log(ctx.store, "ridge", rows)
    return _save(ctx, "ridge", bundle_models(models))


def train_bottleneck_stage(ctx: StageContext) -> str:
    cfg = ctx.config
    meta_cfg = cfg.metadata
    train, val, lda = _estimator_data(ctx, "bottleneck")
    models, rows = {}, []
    for j in estimator_dims(cfg):
        X_train = _training_evectors(ctx, train, lda, j)
        X_val = _training_evectors(ctx, val, lda, j)
        for t, target in enumerate(meta_cfg.targets):
            seed = int(np.random.SeedSequence([cfg.seed, t, j]).generate_state(1)[0])
            net = train_bottleneck(X_train, train.target(target), target, X_val, val.target(target),
                                   epochs=meta_cfg.epochs, batch_size=meta_cfg.batch_size,
                                   step_size=meta_cfg.step_size, seed=seed, patience=meta_cfg.patience,
                                   hidden=meta_cfg.hidden_layers)
            models[_target_key(target, j)] = net
            rows.extend({"target": TargetKind(target).value, "j": j, **h} for h in net.history)
    write_training_log(ctx.store, "bottleneck", rows)
    return _save(ctx, "bottleneck", bundle_models(models))


def train_wada_stage(ctx: StageContext) -> str:
    cfg = ctx.config
    table = build_wada_table(cfg.seed, cfg.metadata.wada_samples_per_point, cfg.metadata.wada_step_db)
    write_training_log(ctx.store, "wada", [{"snr_db": float(s), "g": float(g)}
                                           for s, g in zip(table.snr_db, table.g)])
    path = save_wada_table(ctx.store.stage_path("wada"), table)
    StageLogger("wada").artifact_written(path)
    return path


STAGE_TRAINERS: Dict[str, Callable[[StageContext], str]] = {
    "ubm": train_ubm_stage,
    "tmatrix": train_tmatrix_stage,
    "lda": train_lda_stage,
    "plda": train_plda_stage,
    "ridge": train_ridge_stage,
    "bottleneck": train_bottleneck_stage,
    "wada": train_wada_stage,
}
