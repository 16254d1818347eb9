"""
Prometheus metrics for pipeline runs.

Metrics live in a dedicated registry and are written as a textfile next to
the stage outputs; there is no metrics server.
"""
import os

from prometheus_client import CollectorRegistry, Counter, Gauge, Histogram, write_to_textfile

from utils.logger import setup_logger

# Configure logging
logger = setup_logger("metrics")

REGISTRY = CollectorRegistry()

STAGE_DURATION = Histogram(
    "evector_stage_duration_seconds",
    "Wall-clock duration of pipeline stages",
    ["stage"],
    registry=REGISTRY,
    buckets=(1, 5, 15, 60, 300, 900, 3600),
)

INSTANCES_GENERATED = Counter(
    "evector_instances_generated",
    "Number of room instances synthesized",
    ["split", "room_type"],
    registry=REGISTRY,
)

TRAINING_ITERATIONS = Counter(
    "evector_training_iterations",
    "Number of training iterations or epochs run",
    ["stage"],
    registry=REGISTRY,
)

TRAINING_OBJECTIVE = Gauge(
    "evector_training_objective",
    "Last training objective value per stage",
    ["stage"],
    registry=REGISTRY,
)

VERIFICATION_EER = Gauge(
    "evector_verification_eer_percent",
    "Room verification EER",
    ["room_type", "j", "variant"],
    registry=REGISTRY,
)

METADATA_MAE = Gauge(
    "evector_metadata_mae",
    "Metadata estimation mean absolute error",
    ["room_type", "j", "target", "estimator"],
    registry=REGISTRY,
)


# Helper functions to record metrics
def record_instance(split: str, room_type: str):
    """Record a synthesized instance"""
    try:
        INSTANCES_GENERATED.labels(split=split, room_type=room_type).inc()
    except Exception as e:
        logger.error(f"Error recording instance metric: {e}")


def record_iteration(stage: str, objective: float):
    """Record one training iteration and its objective"""
    try:
        TRAINING_ITERATIONS.labels(stage=stage).inc()
        TRAINING_OBJECTIVE.labels(stage=stage).set(objective)
    except Exception as e:
        logger.error(f"Error recording iteration metric: {e}")


def record_stage_duration(stage: str, seconds: float):
    """Record a stage's wall-clock duration"""
    try:
        STAGE_DURATION.labels(stage=stage).observe(seconds)
    except Exception as e:
        logger.error(f"Error recording stage duration: {e}")


def record_eer(room_type: str, j: int, variant: str, eer: float):
    """Record a verification EER"""
    try:
        VERIFICATION_EER.labels(room_type=room_type, j=str(j), variant=variant).set(eer)
    except Exception as e:
        logger.error(f"Error recording EER metric: {e}")


def record_mae(room_type: str, j: int, target: str, estimator: str, mae: float):
    """Record a metadata MAE"""
    try:
        METADATA_MAE.labels(room_type=room_type, j=str(j), target=target, estimator=estimator).set(mae)
    except Exception as e:
        logger.error(f"Error recording MAE metric: {e}")


def write_metrics(directory: str) -> str:
    """
    Write the registry to <directory>/metrics.prom.

    Args:
        directory: Output directory

    Returns:
        Path of the written textfile
    """
    os.makedirs(directory, exist_ok=True)
    path = os.path.join(directory, "metrics.prom")
    write_to_textfile(path, REGISTRY)
    logger.debug(f"Metrics written to {path}")
    return path
