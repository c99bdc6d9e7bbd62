"""Frame sampling: one frame per second, reference portrait prepended at index 0."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from talkqa.errors import MediaError


@dataclass(frozen=True)
class FrameSampleSet:
    """Ordered frames; index 0 is the source portrait, 1..L are video samples."""

    frames: tuple[np.ndarray, ...]

    def __post_init__(self):
        if len(self.frames) < 2:
            raise MediaError("need the reference portrait plus at least one sampled frame")

    @property
    def reference(self) -> np.ndarray:
        return self.frames[0]

    @property
    def sampled(self) -> tuple[np.ndarray, ...]:
        return self.frames[1:]

    @property
    def length(self) -> int:
        """Number of sampled video frames (reference excluded)."""
        return len(self.frames) - 1


def sample_frames(video_path, reference_image_path) -> FrameSampleSet:
    """Decode frames at t = 0, 1, 2, ... seconds (nearest frame) behind the reference.

    The sample count is floor(duration); videos shorter than one second cannot
    produce a sample and are rejected.
    """
    import cv2  # deferred: heavy import, only needed for real media

    video_path = Path(video_path)
    reference_image_path = Path(reference_image_path)
    reference = cv2.imread(str(reference_image_path), cv2.IMREAD_COLOR)
    if reference is None:
        raise MediaError(f"cannot decode reference image {reference_image_path}")

    cap = cv2.VideoCapture(str(video_path))
    try:
        if not cap.isOpened():
            raise MediaError(f"cannot open video {video_path}")
        fps = cap.get(cv2.CAP_PROP_FPS)
        frame_count = int(cap.get(cv2.CAP_PROP_FRAME_COUNT))
        if fps <= 0 or frame_count <= 0:
            raise MediaError(f"undecodable or zero-length video {video_path}")
        duration_s = frame_count / fps
        n_samples = math.floor(duration_s)
        if n_samples < 1:
            raise MediaError(
                f"video {video_path} is {duration_s:.2f}s long, below one 1-fps sample"
            )
        frames: list[np.ndarray] = [reference]
        for t in range(n_samples):
            index = min(round(t * fps), frame_count - 1)
            cap.set(cv2.CAP_PROP_POS_FRAMES, index)
            ok, frame = cap.read()
            if not ok or frame is None:
                raise MediaError(f"failed to decode frame at {t}s (index {index}) of {video_path}")
            frames.append(frame)
    finally:
        cap.release()
    return FrameSampleSet(frames=tuple(frames))


def from_arrays(reference: np.ndarray, sampled: list[np.ndarray]) -> FrameSampleSet:
    """Build a sample set from in-memory frames (tests, synthetic pipelines)."""
    return FrameSampleSet(frames=(reference, *sampled))
