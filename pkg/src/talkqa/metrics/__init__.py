from talkqa.metrics._kernels import KERNEL_BACKEND, average_ranks, kendall_counts
from talkqa.metrics.correlation import (
    LogisticFit,
    MetricReport,
    compute_metrics,
    krcc,
    logistic_fit,
    pearson,
    plcc,
    rmse,
    rmse_raw,
    srcc,
)
from talkqa.metrics.folds_eval import FoldEvaluation, evaluate_folds

__all__ = [
    "KERNEL_BACKEND",
    "average_ranks",
    "kendall_counts",
    "LogisticFit",
    "MetricReport",
    "compute_metrics",
    "krcc",
    "logistic_fit",
    "pearson",
    "plcc",
    "rmse",
    "rmse_raw",
    "srcc",
    "FoldEvaluation",
    "evaluate_folds",
]
