"""Cross-validated regression training on fused features.

Full-batch gradient descent with adaptive per-parameter steps and momentum on
the mean-squared-error objective. One model per fold, trained on the other
k-1 folds, predicting its own held-out fold; deterministic for a fixed seed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from talkqa.errors import CoverageError, TrainingError
from talkqa.folds import FoldPlan
from talkqa.model.regressor import (
    RegressorParams,
    forward,
    init_params,
    mse_loss_and_grads,
)


@dataclass(frozen=True)
class TrainConfig:
    hidden: int = 128
    learning_rate: float = 1e-3
    epochs: int = 200
    seed: int = 0
    momentum_decay: float = 0.9
    scale_decay: float = 0.999
    eps: float = 1e-8
    standardize: bool = True


@dataclass
class FoldModel:
    fold: int
    params: RegressorParams
    feat_mean: np.ndarray
    feat_std: np.ndarray
    losses: list[float] = field(default_factory=list)

    def predict(self, x) -> np.ndarray:
        x = (np.asarray(x, dtype=np.float64) - self.feat_mean) / self.feat_std
        return forward(self.params, x)


def _fit(x: np.ndarray, y: np.ndarray, cfg: TrainConfig, seed: int) -> tuple[RegressorParams, list[float]]:
    if x.ndim != 2 or x.shape[1] < 1:
        raise TrainingError(f"feature matrix must be (n, d>=1), got {x.shape}")
    rng = np.random.default_rng(seed)
    params = init_params(x.shape[1], hidden=cfg.hidden, rng=rng)
    state: dict[str, tuple] = {
        name: (np.zeros_like(getattr(params, name)), np.zeros_like(getattr(params, name)))
        for name in ("w1", "b1", "w2")
    }
    state["b2"] = (0.0, 0.0)
    losses: list[float] = []
    for epoch in range(1, cfg.epochs + 1):
        loss, grads = mse_loss_and_grads(params, x, y)
        if not np.isfinite(loss):
            raise TrainingError(f"NaN/inf loss at epoch {epoch} (last finite: {losses[-1] if losses else None})")
        losses.append(loss)
        bias1 = 1.0 - cfg.momentum_decay**epoch
        bias2 = 1.0 - cfg.scale_decay**epoch
        for name in ("w1", "b1", "w2", "b2"):
            g = grads[name]
            m, v = state[name]
            m = cfg.momentum_decay * m + (1.0 - cfg.momentum_decay) * g
            v = cfg.scale_decay * v + (1.0 - cfg.scale_decay) * g * g
            state[name] = (m, v)
            step = cfg.learning_rate * (m / bias1) / (np.sqrt(v / bias2) + cfg.eps)
            if name == "b2":
                params.b2 = float(params.b2 - step)
            else:
                setattr(params, name, getattr(params, name) - step)
    return params, losses


def train_cv(
    features: dict[str, np.ndarray],
    mos: dict[str, float],
    plan: FoldPlan,
    source_of: dict[str, str],
    cfg: TrainConfig = TrainConfig(),
) -> tuple[list[FoldModel], dict[str, float]]:
    """Train one model per fold; returns the models and held-out predictions."""
    missing = set(mos) - set(features)
    if missing:
        raise CoverageError(
            f"features missing for {len(missing)} scored stimuli (e.g. {sorted(missing)[:5]})",
            missing=missing,
        )
    sids = sorted(mos)
    fold_of = plan.fold_of_stimulus({sid: source_of[sid] for sid in sids})
    x_all = np.stack([np.asarray(features[sid], dtype=np.float64).ravel() for sid in sids])
    y_all = np.array([mos[sid] for sid in sids])

    models: list[FoldModel] = []
    predictions: dict[str, float] = {}
    for fold in range(plan.k):
        test_mask = np.array([fold_of[sid] == fold for sid in sids])
        if not test_mask.any() or test_mask.all():
            raise CoverageError(f"fold {fold} has a degenerate train/test split")
        x_train = x_all[~test_mask]
        y_train = y_all[~test_mask]
        if cfg.standardize:
            mean = x_train.mean(axis=0)
            std = x_train.std(axis=0)
            std[std == 0.0] = 1.0
        else:
            mean = np.zeros(x_all.shape[1])
            std = np.ones(x_all.shape[1])
        params, losses = _fit((x_train - mean) / std, y_train, cfg, seed=cfg.seed + fold)
        model = FoldModel(fold=fold, params=params, feat_mean=mean, feat_std=std, losses=losses)
        models.append(model)
        test_sids = [sid for sid, is_test in zip(sids, test_mask) if is_test]
        preds = model.predict(x_all[test_mask])
        predictions.update({sid: float(p) for sid, p in zip(test_sids, preds)})
    return models, predictions


def save_models(models: list[FoldModel], out_dir, meta: dict | None = None) -> None:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for model in models:
        np.savez(
            out_dir / f"fold_{model.fold}.npz",
            w1=model.params.w1,
            b1=model.params.b1,
            w2=model.params.w2,
            b2=np.array(model.params.b2),
            feat_mean=model.feat_mean,
            feat_std=model.feat_std,
            losses=np.array(model.losses),
        )
    info = {"k": len(models)}
    if meta:
        info.update(meta)
    (out_dir / "meta.json").write_text(json.dumps(info, indent=2, sort_keys=True) + "\n")


def load_models(model_dir) -> list[FoldModel]:
    model_dir = Path(model_dir)
    meta = json.loads((model_dir / "meta.json").read_text())
    models = []
    for fold in range(meta["k"]):
        data = np.load(model_dir / f"fold_{fold}.npz")
        models.append(
            FoldModel(
                fold=fold,
                params=RegressorParams(
                    w1=data["w1"], b1=data["b1"], w2=data["w2"], b2=float(data["b2"])
                ),
                feat_mean=data["feat_mean"],
                feat_std=data["feat_std"],
                losses=[float(v) for v in data["losses"]],
            )
        )
    return models


def predict_cv(
    models: list[FoldModel],
    features: dict[str, np.ndarray],
    plan: FoldPlan,
    source_of: dict[str, str],
) -> dict[str, float]:
    """Held-out predictions: each stimulus is scored by its own fold's model."""
    fold_of = plan.fold_of_stimulus(source_of)
    by_fold = {m.fold: m for m in models}
    missing_folds = set(fold_of.values()) - set(by_fold)
    if missing_folds:
        raise CoverageError(f"no trained model for folds {sorted(missing_folds)}")
    predictions: dict[str, float] = {}
    for sid, vec in features.items():
        if sid not in fold_of:
            raise CoverageError(f"stimulus {sid!r} not in the fold plan expansion")
        model = by_fold[fold_of[sid]]
        predictions[sid] = float(model.predict(np.asarray(vec).ravel()))
    return predictions
