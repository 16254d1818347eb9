"""
Pipeline configuration for the e-vector toolkit.

The pipeline is driven by one YAML file with a section per stage. Sections are
validated with pydantic models; the effective configuration is echoed as YAML
and identified by a digest so every report can be traced to its inputs.
"""
import hashlib
import json
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

import yaml
from pydantic import BaseModel, Field, ValidationError, field_validator, model_validator

from utils.error_handler import ConfigurationException
from utils.logger import setup_logger

# Setup logger
logger = setup_logger("config")

SAMPLE_RATE = 16000


class RoomType(str, Enum):
    """Virtual room taxonomy."""
    COMPLETE_ROOM = "complete_room"
    NO_MUSIC = "no_music"
    MUSIC_RIR = "music_rir"
    NO_STAT_NOISE = "no_stat_noise"
    NO_NONSTAT_NOISE = "no_nonstat_noise"


ALL_ROOM_TYPES = [rt for rt in RoomType]


class AugmentVariant(str, Enum):
    """Metadata augmentation variants of the verification experiment."""
    NONE = "none"
    SNR = "snr"
    T60 = "t60"
    SNR_T60 = "snr_t60"
    CONSTANT = "constant"


class TargetKind(str, Enum):
    """Metadata regression targets."""
    SNR_DB = "snr_db"
    T60_S = "t60_s"


class CorpusSettings(BaseModel):
    """Virtual-room corpus counts and durations."""
    train_rooms: int = Field(40, ge=1)
    instances_per_room: int = Field(10, ge=1)
    val_rooms: int = Field(10, ge=1)
    val_instances_per_room: int = Field(4, ge=1)
    enroll_test_rooms_per_type: int = Field(20, ge=1)
    enroll_instances_per_room: int = Field(4, ge=1)
    test_instances_per_room: int = Field(4, ge=1)
    train_duration_s: float = Field(3.0, ge=2.0)
    test_duration_s: float = Field(2.0, ge=2.0)
    rir_duration_s: float = Field(1.0, gt=0.2)
    snr_range_db: Tuple[float, float] = (5.0, 25.0)
    t60_range_s: Tuple[float, float] = (0.05, 0.5)
    room_types: List[RoomType] = Field(default_factory=lambda: list(ALL_ROOM_TYPES))
    # Directory of recorded sources; synthetic generators when unset
    source_dir: Optional[str] = None

    model_config = {"extra": "forbid"}

    @field_validator("snr_range_db")
    def validate_snr_range(cls, v):
        low, high = v
        if not 5.0 <= low <= high <= 25.0:
            raise ValueError("snr_range_db must lie within [5, 25] dB")
        return v

    @field_validator("t60_range_s")
    def validate_t60_range(cls, v):
        low, high = v
        if not 0.05 <= low <= high <= 0.5:
            raise ValueError("t60_range_s must lie within [0.05, 0.5] s")
        return v


class FeatureSettings(BaseModel):
    """MFCC front end."""
    frame_length: int = Field(400, gt=0)
    frame_shift: int = Field(160, gt=0)
    n_fft: int = 512
    n_filters: int = 26
    n_ceps: int = 19
    pre_emphasis: float = 0.97
    low_hz: float = 0.0
    high_hz: float = 8000.0
    log_floor: float = 1e-10
    use_energy: bool = True
    apply_cmvn: bool = True

    model_config = {"extra": "forbid"}

    @model_validator(mode="after")
    def validate_geometry(self):
        if self.n_fft < self.frame_length:
            raise ValueError("n_fft must be at least frame_length")
        if not 1 <= self.n_ceps < self.n_filters:
            raise ValueError("n_ceps must be in [1, n_filters)")
        if not 0.0 <= self.low_hz < self.high_hz <= SAMPLE_RATE / 2:
            raise ValueError("mel band edges must satisfy 0 <= low_hz < high_hz <= 8000")
        return self

    @property
    def dim(self) -> int:
        return self.n_ceps + (1 if self.use_energy else 0)


class UbmSettings(BaseModel):
    """GMM-UBM training."""
    components: int = Field(64, ge=1)
    iters: int = Field(10, ge=1)
    init_subsample: int = Field(20000, ge=1)
    variance_floor: float = Field(1e-4, gt=0)

    model_config = {"extra": "forbid"}


class TMatrixSettings(BaseModel):
    """Total-variability training."""
    dim: int = Field(100, ge=1)
    iters: int = Field(5, ge=1)

    model_config = {"extra": "forbid"}


class LdaSettings(BaseModel):
    """E-vector projection."""
    dims: List[int] = Field(default_factory=lambda: [5, 10, 20, 30])
    length_norm: bool = False

    model_config = {"extra": "forbid"}

    @field_validator("dims")
    def validate_dims(cls, v):
        if not v or any(j < 1 for j in v):
            raise ValueError("dims must be a non-empty list of positive integers")
        return sorted(set(v))


class PldaSettings(BaseModel):
    """Two-covariance PLDA."""
    regularization: float = Field(1e-6, ge=0)

    model_config = {"extra": "forbid"}


class MetadataSettings(BaseModel):
    """SNR and T60 estimators."""
    targets: List[TargetKind] = Field(default_factory=lambda: [TargetKind.SNR_DB, TargetKind.T60_S])
    lambda_grid: List[float] = Field(default_factory=lambda: [1e-3, 1e-2, 1e-1, 1.0, 10.0, 100.0, 1000.0])
    hidden_layers: List[int] = Field(default_factory=lambda: [20, 5, 20])
    epochs: int = Field(300, ge=1)
    batch_size: int = Field(32, ge=1)
    step_size: float = Field(1e-3, gt=0)
    patience: int = Field(20, ge=1)
    wada_step_db: float = Field(1.0, gt=0, le=1.0)
    wada_samples_per_point: int = Field(20000, ge=100)

    model_config = {"extra": "forbid"}

    @field_validator("lambda_grid")
    def validate_lambda_grid(cls, v):
        if not v or any(lam < 0 for lam in v):
            raise ValueError("lambda_grid must be a non-empty list of non-negative values")
        return v


class EvalSettings(BaseModel):
    """Evaluation experiments."""
    room_types: List[RoomType] = Field(default_factory=lambda: list(ALL_ROOM_TYPES))
    variants: List[AugmentVariant] = Field(
        default_factory=lambda: [AugmentVariant.NONE, AugmentVariant.SNR, AugmentVariant.T60, AugmentVariant.SNR_T60]
    )
    augmentation_j: int = Field(20, ge=1)
    augmentation_estimator: str = "bottleneck"
    include_constant_control: bool = True

    model_config = {"extra": "forbid"}

    @field_validator("augmentation_estimator")
    def validate_estimator(cls, v):
        if v not in ("bottleneck", "ridge"):
            raise ValueError("augmentation_estimator must be 'bottleneck' or 'ridge'")
        return v


class PipelineConfig(BaseModel):
    """Complete pipeline configuration."""
    seed: int
    corpus: CorpusSettings = Field(default_factory=CorpusSettings)
    features: FeatureSettings = Field(default_factory=FeatureSettings)
    ubm: UbmSettings = Field(default_factory=UbmSettings)
    tmatrix: TMatrixSettings = Field(default_factory=TMatrixSettings)
    lda: LdaSettings = Field(default_factory=LdaSettings)
    plda: PldaSettings = Field(default_factory=PldaSettings)
    metadata: MetadataSettings = Field(default_factory=MetadataSettings)
    eval: EvalSettings = Field(default_factory=EvalSettings)

    model_config = {"extra": "forbid"}

    @model_validator(mode="after")
    def validate_dimensions(self):
        supervector = self.ubm.components * self.features.dim
        if self.tmatrix.dim >= supervector:
            raise ValueError(f"tmatrix.dim must be below C*F = {supervector}")
        max_j = min(self.tmatrix.dim, self.corpus.train_rooms - 1)
        if max(self.lda.dims) > max_j:
            raise ValueError(f"lda.dims must not exceed min(D, train_rooms - 1) = {max_j}")
        if self.eval.augmentation_j > max_j:
            raise ValueError(f"eval.augmentation_j must not exceed {max_j}")
        return self

    @property
    def max_j(self) -> int:
        return max(self.lda.dims)


REQUIRED_SECTIONS = ("corpus", "features", "ubm", "tmatrix", "lda", "plda", "metadata", "eval")


def parse_pipeline_config(raw: Dict[str, Any], seed_override: Optional[int] = None) -> PipelineConfig:
    """
    Validate a raw configuration mapping.

    Args:
        raw: Parsed YAML mapping
        seed_override: Seed taking precedence over the file's seed

    Returns:
        Validated pipeline configuration
    """
    if not isinstance(raw, dict):
        raise ConfigurationException("Configuration must be a mapping of sections")
    missing = [s for s in REQUIRED_SECTIONS if s not in raw]
    if missing:
        raise ConfigurationException(
            f"Configuration is missing sections: {', '.join(missing)}",
            details={"missing": missing}
        )
    data = dict(raw)
    if seed_override is not None:
        data["seed"] = seed_override
    if data.get("seed") is None:
        raise ConfigurationException("Configuration must define a seed")
    try:
        return PipelineConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigurationException(
            f"Invalid configuration: {e.error_count()} error(s)",
            details={"errors": e.errors(include_url=False)}
        ) from e


def load_pipeline_config(path: str, seed_override: Optional[int] = None) -> PipelineConfig:
    """
    Load the pipeline configuration from a YAML file.

    Args:
        path: YAML file path
        seed_override: Seed taking precedence over the file's seed

    Returns:
        Validated pipeline configuration
    """
    try:
        with open(path, "r", encoding="utf-8") as f:
            raw = yaml.safe_load(f)
    except FileNotFoundError as e:
        raise ConfigurationException(f"Configuration file not found: {path}") from e
    except yaml.YAMLError as e:
        raise ConfigurationException(f"Configuration file is not valid YAML: {e}") from e

    config = parse_pipeline_config(raw or {}, seed_override=seed_override)
    logger.info(f"Loaded pipeline configuration from {path} (digest {config_digest(config)[:12]})")
    return config


def config_to_dict(config: PipelineConfig) -> Dict[str, Any]:
    """JSON-compatible view of the configuration."""
    return config.model_dump(mode="json")


def config_digest(config: PipelineConfig) -> str:
    """SHA-256 of the canonical JSON form of the configuration."""
    canonical = json.dumps(config_to_dict(config), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def dump_config_yaml(config: PipelineConfig) -> str:
    """Effective configuration as YAML text."""
    return yaml.safe_dump(config_to_dict(config), sort_keys=True, default_flow_style=False)
