import numpy as np
import pytest

from talkqa.errors import CoverageError, DegenerateInputError
from talkqa.folds import FoldPlan
from talkqa.metrics import (
    compute_metrics,
    evaluate_folds,
    krcc,
    logistic_fit,
    pearson,
    plcc,
    rmse,
    rmse_raw,
    srcc,
)

from _oracles import brute_krcc, brute_rmse, brute_srcc


class TestSrcc:
    def test_perfect_monotone(self):
        assert srcc([1, 2, 3], [10, 20, 30]) == pytest.approx(1.0)

    def test_reversed(self):
        assert srcc([1, 2, 3], [3, 2, 1]) == pytest.approx(-1.0)

    def test_one_swap(self):
        # rank vectors (1,2,3,4) vs (1,3,2,4): Pearson = 4/5
        assert srcc([1, 2, 3, 4], [1, 3, 2, 4]) == pytest.approx(0.8, abs=1e-12)
        assert brute_srcc([1, 2, 3, 4], [1, 3, 2, 4]) == pytest.approx(0.8, abs=1e-12)

    def test_constant_raises(self):
        with pytest.raises(DegenerateInputError):
            srcc([1, 1, 1], [1, 2, 3])


class TestKrcc:
    def test_one_swap_third(self):
        # 3 pairs: 2 concordant, 1 discordant -> (2-1)/3
        assert krcc([1, 2, 3], [1, 3, 2]) == pytest.approx(1 / 3, abs=1e-12)

    def test_identical(self):
        assert krcc([1, 2, 3], [1, 2, 3]) == pytest.approx(1.0)

    def test_reversed(self):
        assert krcc([1, 2, 3], [3, 2, 1]) == pytest.approx(-1.0)


def test_rank_metrics_match_oracle_with_ties():
    for seed in range(500):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(2, 9))
        x = rng.integers(0, 4, size=n).astype(float)
        y = rng.integers(0, 4, size=n).astype(float)
        if np.all(x == x[0]) or np.all(y == y[0]):
            continue
        assert srcc(x, y) == pytest.approx(brute_srcc(list(x), list(y)), abs=1e-12)
        assert krcc(x, y) == pytest.approx(brute_krcc(list(x), list(y)), abs=1e-12)


def test_rank_metrics_invariant_under_monotone_transforms():
    rng = np.random.default_rng(11)
    for _ in range(50):
        n = int(rng.integers(5, 40))
        x = rng.normal(size=n)
        y = rng.normal(size=n)
        fx = np.exp(x) + 3 * x  # strictly increasing
        gy = y**3 + 0.5 * y
        assert srcc(fx, gy) == pytest.approx(srcc(x, y), abs=1e-12)
        assert krcc(fx, gy) == pytest.approx(krcc(x, y), abs=1e-12)


class TestLogistic:
    def test_identity_data_fits_tightly(self):
        rng = np.random.default_rng(0)
        mos = rng.uniform(0, 5, 200)
        fit = logistic_fit(mos, mos)
        assert fit.converged
        assert rmse_raw(fit.apply(mos), mos) < 1e-6

    def test_affine_recoverable(self):
        rng = np.random.default_rng(1)
        mos = rng.uniform(0, 5, 150)
        pred = 2.0 * mos + 1.0
        assert plcc(pred, mos, fitted=True) == pytest.approx(1.0, abs=1e-6)

    def test_constant_pred_raises(self):
        with pytest.raises(DegenerateInputError):
            logistic_fit(np.ones(10), np.arange(10.0))

    def test_fitted_plcc_not_below_raw(self):
        rng = np.random.default_rng(2)
        mos = rng.uniform(0, 5, 120)
        pred = 1.5 * mos - 0.7 + rng.normal(0, 0.4, 120)
        assert plcc(pred, mos, fitted=True) >= plcc(pred, mos, fitted=False) - 1e-9

    def test_fitted_mapping_is_monotone(self):
        rng = np.random.default_rng(3)
        mos = rng.uniform(0, 5, 80)
        pred = mos + rng.normal(0, 0.5, 80)
        fit = logistic_fit(pred, mos)
        grid = np.linspace(pred.min(), pred.max(), 500)
        mapped = fit.apply(grid)
        diffs = np.diff(mapped)
        assert np.all(diffs >= 0) or np.all(diffs <= 0)


class TestPlccRmse:
    def test_exact_prediction(self):
        mos = np.array([1.0, 2.0, 3.0, 4.0, 5.0])
        assert plcc(mos, mos, fitted=False) == pytest.approx(1.0)
        assert rmse(mos, mos, fitted=False) == pytest.approx(0.0)

    def test_anticorrelated_raw(self):
        mos = np.array([1.0, 2.0, 3.0, 4.0, 5.0])
        assert plcc(-mos, mos, fitted=False) == pytest.approx(-1.0)

    def test_uniform_offset_rmse(self):
        mos = np.array([1.0, 2.0, 3.0, 4.0])
        assert rmse(mos + 1.0, mos, fitted=False) == pytest.approx(1.0)
        assert brute_rmse(list(mos + 1.0), list(mos)) == pytest.approx(1.0)

    def test_rmse_zero_iff_equal(self):
        rng = np.random.default_rng(4)
        mos = rng.uniform(0, 5, 30)
        pred = mos.copy()
        pred[7] += 1e-3
        assert rmse_raw(pred, mos) > 0
        assert rmse_raw(mos, mos) == 0.0


def _toy_plan_and_maps(n_sources=25, k=5, seed=0):
    rng = np.random.default_rng(seed)
    assignment = {f"src{i}": i % k for i in range(n_sources)}
    plan = FoldPlan(k=k, seed=seed, assignment=assignment)
    source_of = {}
    mos = {}
    for i in range(n_sources):
        for j in range(4):
            sid = f"st{i}-{j}"
            source_of[sid] = f"src{i}"
            mos[sid] = float(rng.uniform(0, 5))
    return plan, source_of, mos


class TestEvaluateFolds:
    def test_oracle_predictions_are_perfect(self):
        plan, source_of, mos = _toy_plan_and_maps()
        averaged, per_fold = evaluate_folds(dict(mos), mos, plan, source_of)
        assert averaged.srcc == pytest.approx(1.0)
        assert averaged.krcc == pytest.approx(1.0)
        assert averaged.plcc == pytest.approx(1.0, abs=1e-9)
        assert averaged.rmse == pytest.approx(0.0, abs=1e-6)
        assert len(per_fold) == plan.k

    def test_coverage_mismatch_lists_ids(self):
        plan, source_of, mos = _toy_plan_and_maps()
        preds = dict(mos)
        preds.pop("st0-0")
        preds["ghost"] = 1.0
        with pytest.raises(CoverageError) as err:
            evaluate_folds(preds, mos, plan, source_of)
        assert "st0-0" in err.value.missing
        assert "ghost" in err.value.extra

    def test_noisy_predictions_keep_high_srcc(self):
        plan, source_of, mos = _toy_plan_and_maps(n_sources=125, seed=5)
        rng = np.random.default_rng(5)
        preds = {sid: v + rng.normal(0, 0.1) for sid, v in mos.items()}
        averaged, _ = evaluate_folds(preds, mos, plan, source_of, fit=False)
        assert averaged.srcc > 0.95


def test_compute_metrics_report_fields():
    rng = np.random.default_rng(6)
    mos = rng.uniform(0, 5, 60)
    pred = mos + rng.normal(0, 0.3, 60)
    report = compute_metrics(pred, mos)
    assert report.n == 60
    assert abs(report.srcc) <= 1 and abs(report.plcc) <= 1 and abs(report.krcc) <= 1
    assert report.rmse >= 0
    assert report.logistic_params is not None and len(report.logistic_params) == 4
    assert not report.fit_fallback


def test_pearson_matches_numpy():
    rng = np.random.default_rng(7)
    x = rng.normal(size=50)
    y = rng.normal(size=50)
    assert pearson(x, y) == pytest.approx(np.corrcoef(x, y)[0, 1], abs=1e-12)
