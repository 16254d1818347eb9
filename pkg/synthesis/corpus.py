"""
Corpus generation: plans rooms per split, renders their instances (optionally
in worker processes) and writes WAV files plus a JSON-lines manifest.
"""
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from dsp.wavio import save_wav
from schemas.manifest import ManifestRecord
from sources.base_source import SourceBank, SourceKind
from sources.synthetic_source import SyntheticSourceBank
from sources.wav_directory_source import WavDirectorySource
from synthesis.rooms import realize_room_instance, sample_room_spec
from utils.artifacts import atomic_write_text
from utils.config import CorpusSettings, RoomType
from utils.error_handler import ValidationException
from utils.logger import setup_logger
from utils.metrics import record_instance

logger = setup_logger("corpus")

MANIFEST_NAME = "manifest.jsonl"

# Seed-sequence tags keeping the room groups' random streams apart
_GROUP_TRAIN = 0
_GROUP_VAL = 1
_GROUP_ENROLL_TEST = 2


@dataclass(frozen=True)
class RoomPlan:
    """One room to render: its identity and the instances per split."""
    room_id: str
    room_type: RoomType
    group: int
    type_index: int
    room_index: int
    splits: tuple  # ((split, count, duration_s), ...)


def plan_rooms(config: CorpusSettings) -> List[RoomPlan]:
    """Deterministic list of rooms to synthesize."""
    if config.train_rooms < 1 or config.instances_per_room < 1:
        raise ValidationException("infeasible corpus: no training rooms")
    if not config.room_types:
        raise ValidationException("infeasible corpus: no room types")
    plans = []
    for r in range(config.train_rooms):
        plans.append(RoomPlan(
            f"train-{RoomType.COMPLETE_ROOM.value}-{r:04d}", RoomType.COMPLETE_ROOM, _GROUP_TRAIN, 0, r,
            (("train", config.instances_per_room, config.train_duration_s),)
        ))
    for r in range(config.val_rooms):
        plans.append(RoomPlan(
            f"val-{RoomType.COMPLETE_ROOM.value}-{r:04d}", RoomType.COMPLETE_ROOM, _GROUP_VAL, 0, r,
            (("val", config.val_instances_per_room, config.train_duration_s),)
        ))
    for t, room_type in enumerate(config.room_types):
        for r in range(config.enroll_test_rooms_per_type):
            plans.append(RoomPlan(
                f"eval-{room_type.value}-{r:04d}", room_type, _GROUP_ENROLL_TEST, t, r,
                (("enroll", config.enroll_instances_per_room, config.train_duration_s),
                 ("test", config.test_instances_per_room, config.test_duration_s))
            ))
    return plans


def _render_room(plan: RoomPlan, config: CorpusSettings, seed: int, sources: SourceBank,
                 out_dir: str) -> List[ManifestRecord]:
    room_rng = np.random.default_rng(np.random.SeedSequence([seed, plan.group, plan.type_index, plan.room_index]))
    spec = sample_room_spec(
        plan.room_id, plan.room_type, room_rng, sources,
        rir_duration_s=config.rir_duration_s,
        snr_range_db=config.snr_range_db,
        t60_range_s=config.t60_range_s,
    )
    background_s = max(config.train_duration_s, config.test_duration_s) + config.rir_duration_s

    records = []
    used_speech = set()
    k = 0
    for split, count, duration in plan.splits:
        for i in range(count):
            ss = np.random.SeedSequence([seed, plan.group, plan.type_index, plan.room_index, k + 1])
            instance_seed = int(ss.generate_state(1)[0])
            inst_rng = np.random.default_rng(ss)
            speech_id = sources.pick(SourceKind.SPEECH, inst_rng)
            for _ in range(16):
                if speech_id not in used_speech:
                    break
                speech_id = sources.pick(SourceKind.SPEECH, inst_rng)
            used_speech.add(speech_id)

            instance = realize_room_instance(
                spec, sources.get(speech_id, duration), sources, instance_seed,
                speech_id=speech_id, background_duration_s=background_s,
            )
            rel_path = f"{split}/{plan.room_id}/{plan.room_id}_{split}_{i:02d}.wav"
            save_wav(instance.audio, os.path.join(out_dir, rel_path))
            records.append(ManifestRecord(
                path=rel_path,
                instance_id=f"{plan.room_id}/{split}/{i:02d}",
                room_id=plan.room_id,
                room_type=plan.room_type,
                split=split,
                snr_db=spec.snr_db,
                t60_s=spec.t60_s,
                speech_id=speech_id,
                seed=instance_seed,
                rir_id=spec.rir_id,
            ))
            k += 1
    return records


def _render_room_job(args) -> List[ManifestRecord]:
    return _render_room(*args)


def generate_corpus(config: CorpusSettings,
                    seed: int,
                    out_dir: str,
                    sources: Optional[SourceBank] = None,
                    workers: int = 1) -> str:
    """
    Synthesize the labeled virtual-room corpus.

    Args:
        config: Corpus counts, durations and ranges
        seed: Corpus seed
        out_dir: Output directory for WAV files and the manifest
        sources: Source bank (config.source_dir, else synthetic generators)
        workers: Worker processes for rendering rooms

    Returns:
        Path of the JSON-lines manifest
    """
    if sources is None:
        sources = WavDirectorySource(config.source_dir) if config.source_dir else SyntheticSourceBank()
    plans = plan_rooms(config)
    try:
        os.makedirs(out_dir, exist_ok=True)
    except OSError as e:
        raise ValidationException(f"cannot create corpus directory {out_dir}: {e}") from e
    if not os.access(out_dir, os.W_OK):
        raise ValidationException(f"corpus directory {out_dir} is not writable")

    logger.info(f"Synthesizing {len(plans)} rooms into {out_dir} with {workers} worker(s)")
    jobs = [(plan, config, seed, sources, out_dir) for plan in plans]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            per_room = list(pool.map(_render_room_job, jobs))
    else:
        per_room = [_render_room_job(job) for job in jobs]

    records = [r for room in per_room for r in room]
    for r in records:
        record_instance(r.split, r.room_type.value)

    manifest_path = os.path.join(out_dir, MANIFEST_NAME)
    atomic_write_text(manifest_path, "".join(r.to_json_line() + "\n" for r in records))
    logger.info(f"Wrote {len(records)} records to {manifest_path}")
    return manifest_path
