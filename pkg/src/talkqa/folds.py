"""Content-disjoint cross-validation folds keyed by source id.

All stimuli sharing a source portrait land in the same fold, so no content
leaks between train and test splits. Balancing is by source count: generators
have unequal success rates, so stimulus-balanced folds would not be stable.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from pathlib import Path

from talkqa.errors import FoldError
from talkqa.manifest import StimulusSet


@dataclass(frozen=True)
class FoldPlan:
    """Assignment of every source_id to exactly one of k folds."""

    k: int
    seed: int
    assignment: dict[str, int]

    def __post_init__(self):
        if self.k < 2:
            raise FoldError(f"k must be >= 2, got {self.k}")
        bad = {src: f for src, f in self.assignment.items() if not 0 <= f < self.k}
        if bad:
            raise FoldError(f"fold indices out of range [0, {self.k}): {bad}")

    def fold_sources(self) -> list[set[str]]:
        folds: list[set[str]] = [set() for _ in range(self.k)]
        for src, f in self.assignment.items():
            folds[f].add(src)
        return folds

    def fold_of_stimulus(self, source_of: dict[str, str]) -> dict[str, int]:
        """Expand the source-level assignment to stimulus level."""
        missing = sorted(set(source_of.values()) - set(self.assignment))
        if missing:
            raise FoldError(f"sources missing from fold plan: {missing[:5]}")
        return {sid: self.assignment[src] for sid, src in source_of.items()}

    def to_dict(self) -> dict:
        return {"k": self.k, "seed": self.seed, "assignment": dict(sorted(self.assignment.items()))}


def make_folds(sset: StimulusSet, k: int = 5, seed: int = 0) -> FoldPlan:
    """Deterministic balanced split of source ids into k folds (sizes differ <= 1)."""
    if k < 2:
        raise FoldError(f"k must be >= 2, got {k}")
    sources = sset.source_ids()
    if len(sources) < k:
        raise FoldError(f"need at least {k} distinct sources, got {len(sources)}")
    rng = random.Random(seed)
    rng.shuffle(sources)
    return FoldPlan(k=k, seed=seed, assignment={src: i % k for i, src in enumerate(sources)})


def save_folds(plan: FoldPlan, path) -> None:
    Path(path).write_text(json.dumps(plan.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")


def load_folds(path) -> FoldPlan:
    obj = json.loads(Path(path).read_text(encoding="utf-8"))
    try:
        return FoldPlan(
            k=int(obj["k"]),
            seed=int(obj["seed"]),
            assignment={str(s): int(f) for s, f in obj["assignment"].items()},
        )
    except KeyError as exc:
        raise FoldError(f"fold plan file {path} missing key {exc}") from exc
