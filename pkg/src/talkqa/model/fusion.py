"""Feature pooling and fusion into the regression input vector."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from talkqa.errors import MissingComponentError


def gap(feature) -> np.ndarray:
    """Global average pooling: mean over all non-channel (leading) axes.

    Scalars and 1-D vectors pass through unchanged, so pooling is the identity
    on already-pooled components.
    """
    arr = np.asarray(feature, dtype=np.float64)
    if arr.ndim == 0:
        return arr.reshape(1)
    if arr.ndim == 1:
        return arr.copy()
    return arr.mean(axis=tuple(range(arr.ndim - 1)))


@dataclass(frozen=True)
class FeatureBundle:
    """The four branch features for one stimulus, plus the fused vector."""

    stimulus_id: str
    f_g: np.ndarray
    f_h: np.ndarray
    f_i: float
    f_s: np.ndarray

    def __post_init__(self):
        for name in ("f_g", "f_h", "f_s"):
            v = getattr(self, name)
            if v is None:
                raise MissingComponentError(f"feature component {name} missing for {self.stimulus_id}")
            if not np.isfinite(np.asarray(v)).all():
                raise ValueError(f"non-finite values in {name} for {self.stimulus_id}")
        if self.f_i is None:
            raise MissingComponentError(f"feature component f_i missing for {self.stimulus_id}")
        if not np.isfinite(self.f_i):
            raise ValueError(f"non-finite f_i for {self.stimulus_id}")
        if not -1.0 <= self.f_i <= 1.0:
            raise ValueError(f"f_i={self.f_i} outside [-1, 1] for {self.stimulus_id}")

    @property
    def fused(self) -> np.ndarray:
        return fuse(self.f_g, self.f_h, self.f_i, self.f_s)


def fuse(f_g, f_h, f_i, f_s) -> np.ndarray:
    """Pool each component and concatenate in fixed order: global, human, identity, sync.

    The identity score is a scalar and passes through pooling unchanged, so the
    fused length is len(gap(f_g)) + len(gap(f_h)) + 1 + len(gap(f_s)).
    """
    parts = {"f_g": f_g, "f_h": f_h, "f_i": f_i, "f_s": f_s}
    for name, value in parts.items():
        if value is None:
            raise MissingComponentError(f"cannot fuse: component {name} is missing")
    return np.concatenate([gap(f_g), gap(f_h), gap(float(f_i)), gap(f_s)])


def mean_frame_features(per_frame: list[np.ndarray]) -> np.ndarray:
    """Arithmetic mean of per-frame feature vectors."""
    if not per_frame:
        raise ValueError("no per-frame features to average")
    stacked = np.stack([np.asarray(f, dtype=np.float64) for f in per_frame])
    return stacked.mean(axis=0)


def frame_averaged_features(samples, extract_frame) -> np.ndarray:
    """Human-branch feature: per-frame extraction averaged over the sampled
    frames. The reference portrait at index 0 is not a video frame and is
    excluded from the average."""
    return mean_frame_features([extract_frame(f) for f in samples.sampled])
