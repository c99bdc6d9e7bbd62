import pytest

from talkqa.errors import FoldError
from talkqa.folds import FoldPlan, load_folds, make_folds, save_folds
from talkqa.synth import synth_manifest

from conftest import make_set


def test_divisible_sources_give_equal_folds():
    sset = synth_manifest(n_sources=400, generators=("ga",), seed=1)
    plan = make_folds(sset, k=5, seed=1)
    assert [len(s) for s in plan.fold_sources()] == [80] * 5


def test_fold_sizes_differ_by_at_most_one():
    for n in (7, 23, 101):
        plan = make_folds(synth_manifest(n_sources=n, seed=0), k=5, seed=0)
        sizes = [len(s) for s in plan.fold_sources()]
        assert max(sizes) - min(sizes) <= 1
        assert sum(sizes) == n


def test_stimuli_of_one_source_share_a_fold():
    labels = tuple(f"g{i:02d}" for i in range(15))
    sset = synth_manifest(n_sources=5, generators=labels, seed=2)
    plan = make_folds(sset, k=5, seed=2)
    fold_of = plan.fold_of_stimulus(sset.source_of())
    for src in sset.source_ids():
        folds = {fold_of[s.stimulus_id] for s in sset if s.source_id == src}
        assert len(folds) == 1


def test_deterministic_for_fixed_seed():
    sset = synth_manifest(n_sources=30, seed=3)
    assert make_folds(sset, k=5, seed=42) == make_folds(sset, k=5, seed=42)
    assert make_folds(sset, k=5, seed=42) != make_folds(sset, k=5, seed=43)


def test_disjoint_cover_over_many_seeds():
    sset = synth_manifest(n_sources=37, seed=4)
    all_sources = set(sset.source_ids())
    for seed in range(100):
        plan = make_folds(sset, k=5, seed=seed)
        folds = plan.fold_sources()
        union = set()
        for i, fold in enumerate(folds):
            assert not union & fold
            union |= fold
        assert union == all_sources


def test_k_below_two_rejected(small_set):
    with pytest.raises(FoldError):
        make_folds(small_set, k=1, seed=0)


def test_too_few_sources_rejected():
    sset = make_set(n_sources=3)
    with pytest.raises(FoldError):
        make_folds(sset, k=5, seed=0)


def test_serialization_roundtrip(tmp_path):
    plan = make_folds(synth_manifest(n_sources=12, seed=5), k=3, seed=5)
    path = tmp_path / "folds.json"
    save_folds(plan, path)
    assert load_folds(path) == plan


def test_plan_rejects_out_of_range_assignment():
    with pytest.raises(FoldError):
        FoldPlan(k=2, seed=0, assignment={"a": 0, "b": 5})


def test_expansion_requires_known_sources():
    plan = FoldPlan(k=2, seed=0, assignment={"a": 0, "b": 1})
    with pytest.raises(FoldError, match="missing"):
        plan.fold_of_stimulus({"x1": "a", "x2": "unknown"})
