"""
Artifact directory management.

Writes go through a temporary file in the destination directory followed by
os.replace, so a failed command never leaves a partially written file. An
ArtifactStore owns one model directory, serializes subcommands through a lock
file and enforces the stage dependency order.
"""
import contextlib
import os
import tempfile
from typing import Dict, Iterator, List

from utils.error_handler import MissingArtifactException, ValidationException
from utils.logger import setup_logger

logger = setup_logger("artifacts")

LOCK_NAME = ".evector.lock"

STAGES = ("ubm", "tmatrix", "lda", "plda", "ridge", "bottleneck", "wada")

STAGE_DEPENDENCIES: Dict[str, List[str]] = {
    "ubm": [],
    "tmatrix": ["ubm"],
    "lda": ["tmatrix"],
    "plda": ["lda"],
    "ridge": ["lda"],
    "bottleneck": ["lda"],
    "wada": [],
}

STAGE_ARTIFACTS: Dict[str, str] = {
    "ubm": "ubm.model",
    "tmatrix": "tmatrix.model",
    "lda": "lda.model",
    "plda": "plda.model",
    "ridge": "ridge.model",
    "bottleneck": "bottleneck.model",
    "wada": "wada_table.txt",
}

IVECTOR_ARTIFACT = "ivectors.model"


@contextlib.contextmanager
def atomic_path(path: str) -> Iterator[str]:
    """
    Yield a temporary path that replaces `path` when the block succeeds.

    Args:
        path: Final destination

    Yields:
        Temporary file path in the destination directory
    """
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp_path = tempfile.mkstemp(prefix=".tmp-", suffix=os.path.basename(path), dir=directory)
    os.close(fd)
    try:
        yield tmp_path
        os.replace(tmp_path, path)
    except BaseException:
        if os.path.exists(tmp_path):
            os.remove(tmp_path)
        raise


def atomic_write_bytes(path: str, data: bytes) -> str:
    """Atomically write bytes to path."""
    with atomic_path(path) as tmp:
        with open(tmp, "wb") as f:
            f.write(data)
    return path


def atomic_write_text(path: str, text: str) -> str:
    """Atomically write UTF-8 text to path."""
    return atomic_write_bytes(path, text.encode("utf-8"))


class ArtifactStore:
    """Model directory with stage dependency checks and a single-writer lock."""

    def __init__(self, root: str):
        self.root = root
        self._locked = False

    def path(self, name: str) -> str:
        return os.path.join(self.root, name)

    def stage_path(self, stage: str) -> str:
        if stage not in STAGE_ARTIFACTS:
            raise ValidationException(f"Unknown stage '{stage}'", details={"stages": list(STAGES)})
        return self.path(STAGE_ARTIFACTS[stage])

    def require(self, stage: str) -> str:
        """
        Return the artifact path of a stage, raising if it was never trained.

        Args:
            stage: Stage name

        Returns:
            Artifact path
        """
        path = self.stage_path(stage)
        if not os.path.isfile(path):
            raise MissingArtifactException(stage, details={"path": path})
        return path

    def require_upstream(self, stage: str) -> None:
        """Check that every upstream stage of `stage` has its artifact."""
        if stage not in STAGE_DEPENDENCIES:
            raise ValidationException(f"Unknown stage '{stage}'", details={"stages": list(STAGES)})
        for upstream in STAGE_DEPENDENCIES[stage]:
            self.require(upstream)

    def acquire(self) -> None:
        lock_path = self.path(LOCK_NAME)
        try:
            os.makedirs(self.root, exist_ok=True)
            fd = os.open(lock_path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError as e:
            raise ValidationException(
                f"Artifact directory {self.root} is locked by another command",
                details={"lock": lock_path}
            ) from e
        except OSError as e:
            raise ValidationException(f"Artifact directory {self.root} is not writable: {e}") from e
        with os.fdopen(fd, "w") as f:
            f.write(str(os.getpid()))
        self._locked = True

    def release(self) -> None:
        if self._locked:
            with contextlib.suppress(FileNotFoundError):
                os.remove(self.path(LOCK_NAME))
            self._locked = False

    def __enter__(self) -> "ArtifactStore":
        self.acquire()
        return self

    def __exit__(self, exc_type, exc, tb) -> None:
        self.release()
