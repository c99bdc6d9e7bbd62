"""Raw subjective ratings to per-stimulus MOS and majority-voted distortion labels.

Pipeline order: screen unreliable raters on raw scores, z-score each retained
rater (sample standard deviation, divisor N-1), linearly rescale all retained
z-scores to [0, 5] with the global min/max, average per stimulus. Distortion
bits are set by strict majority of the retained raters of that stimulus.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np

from talkqa.errors import DegenerateInputError, RatingError

N_DISTORTIONS = 12

# Two of the twelve types carry fixed names; the rest are configuration data.
DEFAULT_DISTORTION_LABELS = (
    "D01",
    "D02",
    "D03",
    "D04",
    "D05",
    "D06",
    "D07",
    "D08",
    "D09",
    "D10",
    "speaker mismatch",
    "static background",
)


@dataclass(frozen=True)
class RatingRecord:
    """One subject's evaluation of one stimulus: score plus 12 distortion bits."""

    subject_id: str
    stimulus_id: str
    q: float
    d: tuple[int, ...]
    timestamp: datetime
    session_id: str

    def __post_init__(self):
        if len(self.d) != N_DISTORTIONS:
            raise RatingError(
                f"distortion vector must have {N_DISTORTIONS} components, got {len(self.d)}"
            )
        if any(bit not in (0, 1) for bit in self.d):
            raise RatingError(f"distortion vector must be binary, got {self.d}")
        if not math.isfinite(self.q):
            raise RatingError(f"non-finite score for {self.subject_id}/{self.stimulus_id}")


@dataclass(frozen=True)
class SubjectStats:
    subject_id: str
    n: int
    mu: float
    sigma: float  # sample standard deviation, divisor n - 1


@dataclass(frozen=True)
class ScreeningConfig:
    """Outlier-counter screening thresholds (kurtosis-gated 2-sigma rule)."""

    outlier_ratio: float = 0.05
    asymmetry_ratio: float = 0.3
    kurtosis_lo: float = 2.0
    kurtosis_hi: float = 4.0
    r_normal: float = 2.0
    r_heavy: float = math.sqrt(20.0)


@dataclass(frozen=True)
class ScreeningResult:
    retained: frozenset[str]
    rejected: dict[str, dict]  # subject_id -> counters + reason

    @property
    def rejected_ids(self) -> frozenset[str]:
        return frozenset(self.rejected)


@dataclass(frozen=True)
class TableRow:
    stimulus_id: str
    mos: float
    n_ratings: int
    distortions: tuple[int, ...]


@dataclass(frozen=True)
class SubjectiveTable:
    rows: tuple[TableRow, ...]
    retained_subjects: frozenset[str]
    rejected_subjects: frozenset[str]

    def mos_map(self) -> dict[str, float]:
        return {r.stimulus_id: r.mos for r in self.rows}


@dataclass
class ProcessingReport:
    rejected: dict[str, dict] = field(default_factory=dict)
    degenerate: dict[str, str] = field(default_factory=dict)
    rescale_bounds: tuple[float, float] | None = None
    excluded_stimuli: list[str] = field(default_factory=list)
    n_ratings_in: int = 0
    n_ratings_used: int = 0
    screening_applied: bool = True

    def to_dict(self) -> dict:
        return {
            "rejected_subjects": self.rejected,
            "degenerate_subjects": self.degenerate,
            "rescale_bounds": list(self.rescale_bounds) if self.rescale_bounds else None,
            "excluded_stimuli": self.excluded_stimuli,
            "n_ratings_in": self.n_ratings_in,
            "n_ratings_used": self.n_ratings_used,
            "screening_applied": self.screening_applied,
        }


def _index(records: list[RatingRecord]):
    """Factorize subject/stimulus ids and pull scores into arrays."""
    subjects = sorted({r.subject_id for r in records})
    stimuli = sorted({r.stimulus_id for r in records})
    subj_pos = {s: i for i, s in enumerate(subjects)}
    stim_pos = {s: i for i, s in enumerate(stimuli)}
    subj_idx = np.array([subj_pos[r.subject_id] for r in records], dtype=np.intp)
    stim_idx = np.array([stim_pos[r.stimulus_id] for r in records], dtype=np.intp)
    q = np.array([r.q for r in records], dtype=np.float64)
    return subjects, stimuli, subj_idx, stim_idx, q


def _check_unique_pairs(records: list[RatingRecord]):
    seen = set()
    for r in records:
        key = (r.subject_id, r.stimulus_id)
        if key in seen:
            raise RatingError(f"duplicate rating for subject/stimulus pair {key}")
        seen.add(key)


def subject_stats(records: list[RatingRecord]) -> dict[str, SubjectStats]:
    out: dict[str, SubjectStats] = {}
    by_subject: dict[str, list[float]] = {}
    for r in records:
        by_subject.setdefault(r.subject_id, []).append(r.q)
    for sid, scores in by_subject.items():
        arr = np.asarray(scores)
        sigma = float(arr.std(ddof=1)) if arr.size >= 2 else 0.0
        out[sid] = SubjectStats(subject_id=sid, n=arr.size, mu=float(arr.mean()), sigma=sigma)
    return out


def zscore_normalize(
    records: list[RatingRecord],
) -> tuple[dict[tuple[str, str], float], dict[str, str]]:
    """Per-subject z-scores (q - mu_i) / sigma_i with the sample standard deviation.

    Subjects with fewer than two ratings or zero variance cannot be z-scored;
    they are excluded and reported in the returned diagnostics map.
    """
    stats = subject_stats(records)
    degenerate: dict[str, str] = {}
    for sid, st in stats.items():
        if st.n < 2:
            degenerate[sid] = f"only {st.n} rating(s), need at least 2"
        elif st.sigma == 0.0:
            degenerate[sid] = "zero variance (constant rater)"
    z: dict[tuple[str, str], float] = {}
    for r in records:
        if r.subject_id in degenerate:
            continue
        st = stats[r.subject_id]
        z[(r.subject_id, r.stimulus_id)] = (r.q - st.mu) / st.sigma
    return z, degenerate


def screen_subjects(
    records: list[RatingRecord], config: ScreeningConfig = ScreeningConfig()
) -> ScreeningResult:
    """Reject unreliable raters via per-stimulus outlier counters.

    For each stimulus rated by at least two subjects: compute the cross-subject
    mean, population standard deviation, and kurtosis beta2 = m4 / m2^2 of the
    scores; the outlier band half-width is r*sigma with r = 2 when
    2 <= beta2 <= 4 (near-normal) and r = sqrt(20) otherwise. A subject is
    rejected iff (P+Q)/N > 0.05 and |P-Q|/(P+Q) < 0.3, where P and Q count
    their ratings strictly above/below the band and N counts their ratings on
    screened stimuli.
    """
    subjects, stimuli, subj_idx, stim_idx, q = _index(records)
    if len(subjects) < 2:
        return ScreeningResult(retained=frozenset(subjects), rejected={})
    n_stim = len(stimuli)
    n_j = np.bincount(stim_idx, minlength=n_stim).astype(np.float64)
    sum_j = np.bincount(stim_idx, weights=q, minlength=n_stim)
    mean_j = np.divide(sum_j, n_j, out=np.zeros(n_stim), where=n_j > 0)
    dev = q - mean_j[stim_idx]
    m2_j = np.divide(
        np.bincount(stim_idx, weights=dev**2, minlength=n_stim), n_j, out=np.zeros(n_stim), where=n_j > 0
    )
    m4_j = np.divide(
        np.bincount(stim_idx, weights=dev**4, minlength=n_stim), n_j, out=np.zeros(n_stim), where=n_j > 0
    )
    with np.errstate(divide="ignore", invalid="ignore"):
        beta2_j = np.where(m2_j > 0, m4_j / np.square(m2_j), np.nan)
    near_normal = (beta2_j >= config.kurtosis_lo) & (beta2_j <= config.kurtosis_hi)
    r_j = np.where(near_normal, config.r_normal, config.r_heavy)
    sigma_j = np.sqrt(m2_j)
    eligible_j = n_j >= 2

    hi = mean_j + r_j * sigma_j
    lo = mean_j - r_j * sigma_j
    use = eligible_j[stim_idx]
    n_subj = len(subjects)
    p_i = np.bincount(subj_idx, weights=(use & (q > hi[stim_idx])).astype(float), minlength=n_subj)
    q_i = np.bincount(subj_idx, weights=(use & (q < lo[stim_idx])).astype(float), minlength=n_subj)
    n_i = np.bincount(subj_idx, weights=use.astype(float), minlength=n_subj)

    rejected: dict[str, dict] = {}
    for i, sid in enumerate(subjects):
        total = p_i[i] + q_i[i]
        if n_i[i] == 0 or total == 0:
            continue
        spread = total / n_i[i]
        asymmetry = abs(p_i[i] - q_i[i]) / total
        if spread > config.outlier_ratio and asymmetry < config.asymmetry_ratio:
            rejected[sid] = {
                "P": int(p_i[i]),
                "Q": int(q_i[i]),
                "N": int(n_i[i]),
                "outlier_ratio": float(spread),
                "asymmetry_ratio": float(asymmetry),
                "reason": "outlier-counter screening",
            }
    retained = frozenset(s for s in subjects if s not in rejected)
    return ScreeningResult(retained=retained, rejected=rejected)


def rescale_to_0_5(
    z: dict[tuple[str, str], float],
) -> tuple[dict[tuple[str, str], float], tuple[float, float]]:
    """Linear map of all retained z-scores onto [0, 5]: min -> 0, max -> 5."""
    if not z:
        raise DegenerateInputError("no z-scores to rescale")
    values = np.fromiter(z.values(), dtype=np.float64, count=len(z))
    z_min = float(values.min())
    z_max = float(values.max())
    if z_max == z_min:
        raise DegenerateInputError("all z-scores identical, cannot span [0, 5]")
    scale = 5.0 / (z_max - z_min)
    return {key: (val - z_min) * scale for key, val in z.items()}, (z_min, z_max)


def compute_mos(scaled: dict[tuple[str, str], float]) -> dict[str, tuple[float, int]]:
    """Arithmetic mean of rescaled scores per stimulus -> (mos, rating count)."""
    sums: dict[str, float] = {}
    counts: dict[str, int] = {}
    for (_, stimulus_id), value in scaled.items():
        sums[stimulus_id] = sums.get(stimulus_id, 0.0) + value
        counts[stimulus_id] = counts.get(stimulus_id, 0) + 1
    return {sid: (sums[sid] / counts[sid], counts[sid]) for sid in sums}


def vote_distortions(
    records: list[RatingRecord], retained: frozenset[str] | set[str]
) -> dict[str, tuple[int, ...]]:
    """Strict-majority vote per stimulus over the retained raters of that stimulus."""
    counts: dict[str, np.ndarray] = {}
    raters: dict[str, int] = {}
    for r in records:
        if r.subject_id not in retained:
            continue
        if r.stimulus_id not in counts:
            counts[r.stimulus_id] = np.zeros(N_DISTORTIONS, dtype=np.int64)
            raters[r.stimulus_id] = 0
        counts[r.stimulus_id] += np.asarray(r.d, dtype=np.int64)
        raters[r.stimulus_id] += 1
    return {
        sid: tuple(int(c > raters[sid] / 2.0) for c in counts[sid]) for sid in counts
    }


@dataclass(frozen=True)
class ProcessResult:
    table: SubjectiveTable
    report: ProcessingReport


def process_ratings(
    records: list[RatingRecord],
    raw_scale: tuple[float, float] = (0.0, 5.0),
    screening: bool = True,
    screening_config: ScreeningConfig = ScreeningConfig(),
) -> ProcessResult:
    """Full processing chain: validate, screen, z-score, rescale, average, vote."""
    if not records:
        raise RatingError("no rating records supplied")
    _check_unique_pairs(records)
    lo, hi = raw_scale
    out_of_scale = [r for r in records if not lo <= r.q <= hi]
    if out_of_scale:
        first = out_of_scale[0]
        raise RatingError(
            f"{len(out_of_scale)} rating(s) outside raw scale [{lo}, {hi}], "
            f"first: {first.subject_id}/{first.stimulus_id} q={first.q}"
        )

    report = ProcessingReport(n_ratings_in=len(records), screening_applied=screening)
    if screening:
        screen = screen_subjects(records, screening_config)
        report.rejected = screen.rejected
        kept = [r for r in records if r.subject_id in screen.retained]
    else:
        kept = list(records)

    z, degenerate = zscore_normalize(kept)
    report.degenerate = degenerate
    kept = [r for r in kept if r.subject_id not in degenerate]
    if not z:
        raise DegenerateInputError("no usable subjects after screening")

    scaled, bounds = rescale_to_0_5(z)
    report.rescale_bounds = bounds
    report.n_ratings_used = len(kept)

    mos = compute_mos(scaled)
    votes = vote_distortions(kept, frozenset(r.subject_id for r in kept))
    all_stimuli = sorted({r.stimulus_id for r in records})
    report.excluded_stimuli = [sid for sid in all_stimuli if sid not in mos]

    rows = tuple(
        TableRow(
            stimulus_id=sid,
            mos=mos[sid][0],
            n_ratings=mos[sid][1],
            distortions=votes[sid],
        )
        for sid in all_stimuli
        if sid in mos
    )
    retained_subjects = frozenset(r.subject_id for r in kept)
    rejected_subjects = frozenset(report.rejected) | frozenset(report.degenerate)
    table = SubjectiveTable(
        rows=rows, retained_subjects=retained_subjects, rejected_subjects=rejected_subjects
    )
    return ProcessResult(table=table, report=report)


def utc_now() -> datetime:
    return datetime.now(timezone.utc)
