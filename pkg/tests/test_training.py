import numpy as np
import pytest

from talkqa.errors import CoverageError, TrainingError
from talkqa.folds import make_folds
from talkqa.metrics import evaluate_folds
from talkqa.model.backends import OracleBackendSet, StubBackendSet, extract_features
from talkqa.model.training import TrainConfig, load_models, predict_cv, save_models, train_cv
from talkqa.synth import synth_manifest, synth_mos

CFG = TrainConfig(hidden=16, epochs=120, learning_rate=1e-2, seed=0)


@pytest.fixture(scope="module")
def setup():
    sset = synth_manifest(n_sources=25, seed=9)
    mos = synth_mos(sset, seed=9)
    plan = make_folds(sset, k=5, seed=9)
    backend = OracleBackendSet(mos_map=mos, seed=9)
    bundles = extract_features(sset, backend)
    features = {sid: b.fused for sid, b in bundles.items()}
    return sset, mos, plan, features


def test_same_seed_identical_predictions(setup):
    sset, mos, plan, features = setup
    _, preds_a = train_cv(features, mos, plan, sset.source_of(), CFG)
    _, preds_b = train_cv(features, mos, plan, sset.source_of(), CFG)
    assert preds_a == preds_b


def test_full_batch_loss_nonincreasing_within_tolerance(setup):
    sset, mos, plan, features = setup
    models, _ = train_cv(features, mos, plan, sset.source_of(), CFG)
    for model in models:
        losses = np.array(model.losses)
        increases = np.diff(losses)
        assert increases.max(initial=0.0) <= 1e-3 * losses[0]
        assert losses[-1] < losses[0]


def test_oracle_features_dominate_noise(setup):
    sset, mos, plan, features = setup
    _, oracle_preds = train_cv(features, mos, plan, sset.source_of(), CFG)
    noise_bundles = extract_features(sset, StubBackendSet(seed=9))
    noise_features = {sid: b.fused for sid, b in noise_bundles.items()}
    _, noise_preds = train_cv(noise_features, mos, plan, sset.source_of(), CFG)
    oracle_avg, _ = evaluate_folds(oracle_preds, mos, plan, sset.source_of(), fit=False)
    noise_avg, _ = evaluate_folds(noise_preds, mos, plan, sset.source_of(), fit=False)
    assert oracle_avg.srcc > noise_avg.srcc + 0.3


def test_feature_coverage_checked(setup):
    sset, mos, plan, features = setup
    partial = dict(features)
    partial.pop(next(iter(partial)))
    with pytest.raises(CoverageError):
        train_cv(partial, mos, plan, sset.source_of(), CFG)


def test_nan_loss_aborts(setup):
    sset, mos, plan, features = setup
    poisoned = {sid: v for sid, v in features.items()}
    bad_mos = dict(mos)
    bad_mos[next(iter(bad_mos))] = float("nan")
    with pytest.raises(TrainingError, match="NaN|inf"):
        train_cv(poisoned, bad_mos, plan, sset.source_of(), TrainConfig(hidden=8, epochs=5, seed=0))


def test_zero_dimensional_features_rejected(setup):
    sset, mos, plan, _ = setup
    empty = {sid: np.zeros(0) for sid in mos}
    with pytest.raises(TrainingError, match=r"\(n, d>=1\)"):
        train_cv(empty, mos, plan, sset.source_of(), CFG)


def test_save_load_roundtrip_predictions(tmp_path, setup):
    sset, mos, plan, features = setup
    models, preds = train_cv(features, mos, plan, sset.source_of(), CFG)
    save_models(models, tmp_path / "model", meta={"seed": CFG.seed})
    loaded = load_models(tmp_path / "model")
    re_preds = predict_cv(loaded, features, plan, sset.source_of())
    for sid, value in preds.items():
        assert re_preds[sid] == pytest.approx(value, abs=1e-12)


def test_predict_cv_requires_fold_models(tmp_path, setup):
    sset, mos, plan, features = setup
    models, _ = train_cv(features, mos, plan, sset.source_of(), CFG)
    with pytest.raises(CoverageError, match="folds"):
        predict_cv(models[:3], features, plan, sset.source_of())
