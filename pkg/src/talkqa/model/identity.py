"""Identity consistency: mean cosine similarity between reference and per-frame faces.

Pipeline per subject: locate faces, align, embed, compare each sampled frame's
embedding with the reference-portrait embedding. Subjects are matched across
frames by greedy nearest-centroid assignment (tie-break: smaller x). A face
that disappears in a frame contributes similarity 0 but stays in the
denominator: a vanished subject is an identity failure, not missing data.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol

import numpy as np

from talkqa.errors import MediaError
from talkqa.model.frames import FrameSampleSet


@dataclass(frozen=True)
class FaceBox:
    x: float
    y: float
    w: float
    h: float

    @property
    def centroid(self) -> tuple[float, float]:
        return (self.x + self.w / 2.0, self.y + self.h / 2.0)


class FaceDetector(Protocol):
    def detect(self, frame) -> list[FaceBox]: ...


class FaceAligner(Protocol):
    def align(self, frame, box: FaceBox) -> np.ndarray: ...


class FaceEmbedder(Protocol):
    def embed(self, crop: np.ndarray) -> np.ndarray: ...


@dataclass(frozen=True)
class FacePipeline:
    detector: FaceDetector
    aligner: FaceAligner
    embedder: FaceEmbedder


def cosine_similarity(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    # cosine is scale-invariant; pre-scaling by max-abs avoids overflow
    scale_a = np.abs(a).max() if a.size else 0.0
    scale_b = np.abs(b).max() if b.size else 0.0
    if scale_a == 0.0 or scale_b == 0.0:
        return 0.0
    a = a / scale_a
    b = b / scale_b
    denom = np.linalg.norm(a) * np.linalg.norm(b)
    return float(np.clip((a @ b) / denom, -1.0, 1.0))


def match_boxes(reference: list[FaceBox], candidates: list[FaceBox]) -> dict[int, int]:
    """Greedy nearest-centroid assignment reference-index -> candidate-index.

    Pairs are consumed in order of (distance, candidate x, reference index),
    so equal distances resolve to the smaller x-coordinate deterministically.
    """
    pairs = []
    for ri, rbox in enumerate(reference):
        rc = rbox.centroid
        for ci, cbox in enumerate(candidates):
            cc = cbox.centroid
            dist = (rc[0] - cc[0]) ** 2 + (rc[1] - cc[1]) ** 2
            pairs.append((dist, cbox.x, ri, ci))
    pairs.sort()
    assigned: dict[int, int] = {}
    used_candidates: set[int] = set()
    for _, _, ri, ci in pairs:
        if ri in assigned or ci in used_candidates:
            continue
        assigned[ri] = ci
        used_candidates.add(ci)
    return assigned


def identity_consistency(
    samples: FrameSampleSet, subject_count: int, pipeline: FacePipeline
) -> float:
    """Average reference-to-frame embedding similarity over subjects and frames.

    Result is the double sum over N subjects and L sampled frames divided by
    N*L, and lies in [-1, 1] for any embedder.
    """
    if subject_count < 1:
        raise ValueError(f"subject_count must be >= 1, got {subject_count}")
    ref_boxes = pipeline.detector.detect(samples.reference)
    if not ref_boxes:
        raise MediaError("no face found in the reference portrait")
    if len(ref_boxes) < subject_count:
        raise MediaError(
            f"reference portrait has {len(ref_boxes)} detectable face(s), "
            f"expected {subject_count}"
        )
    ref_boxes = sorted(ref_boxes, key=lambda b: b.x)[:subject_count]
    ref_embeddings = [
        pipeline.embedder.embed(pipeline.aligner.align(samples.reference, box))
        for box in ref_boxes
    ]

    total = 0.0
    n_frames = samples.length
    for frame in samples.sampled:
        frame_boxes = pipeline.detector.detect(frame)
        assignment = match_boxes(ref_boxes, frame_boxes)
        for subject_index in range(subject_count):
            candidate = assignment.get(subject_index)
            if candidate is None:
                continue  # missing face: similarity 0, still counted below
            crop = pipeline.aligner.align(frame, frame_boxes[candidate])
            total += cosine_similarity(ref_embeddings[subject_index], pipeline.embedder.embed(crop))
    return total / (subject_count * n_frames)
