"""Per-fold metric evaluation and unweighted fold averaging."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from talkqa.errors import CoverageError
from talkqa.folds import FoldPlan
from talkqa.metrics.correlation import MetricReport, compute_metrics


@dataclass(frozen=True)
class FoldEvaluation:
    fold: int
    report: MetricReport

    def to_dict(self) -> dict:
        return {"fold": self.fold, **self.report.to_dict()}


def evaluate_folds(
    predictions: dict[str, float],
    mos: dict[str, float],
    plan: FoldPlan,
    source_of: dict[str, str],
    fit: bool = True,
) -> tuple[MetricReport, list[FoldEvaluation]]:
    """Metrics per fold plus their arithmetic mean.

    ``predictions`` must cover exactly the stimuli of ``mos``; each stimulus is
    scored within the fold its source belongs to. Coverage mismatches raise
    with the offending ids listed.
    """
    missing = set(mos) - set(predictions)
    extra = set(predictions) - set(mos)
    if missing or extra:
        raise CoverageError(
            "prediction coverage mismatch: "
            f"{len(missing)} missing (e.g. {sorted(missing)[:5]}), "
            f"{len(extra)} extra (e.g. {sorted(extra)[:5]})",
            missing=missing,
            extra=extra,
        )
    fold_of = plan.fold_of_stimulus({sid: source_of[sid] for sid in mos})
    per_fold: list[FoldEvaluation] = []
    for fold in range(plan.k):
        sids = sorted(sid for sid in mos if fold_of[sid] == fold)
        if not sids:
            raise CoverageError(f"fold {fold} contains no scored stimuli")
        pred_v = np.array([predictions[sid] for sid in sids])
        mos_v = np.array([mos[sid] for sid in sids])
        per_fold.append(FoldEvaluation(fold=fold, report=compute_metrics(pred_v, mos_v, fit=fit)))
    averaged = MetricReport(
        srcc=float(np.mean([f.report.srcc for f in per_fold])),
        plcc=float(np.mean([f.report.plcc for f in per_fold])),
        krcc=float(np.mean([f.report.krcc for f in per_fold])),
        rmse=float(np.mean([f.report.rmse for f in per_fold])),
        n=int(sum(f.report.n for f in per_fold)),
        logistic_params=None,
        fit_fallback=any(f.report.fit_fallback for f in per_fold),
    )
    return averaged, per_fold
