import json

import numpy as np
import pytest

from gappy_bci.dae import DaeParams
from gappy_bci.errors import ConfigError, EmptyInput, MissingCounterpart, ParseError, SchemaError
from gappy_bci.evaluation import (DROPPED, EvalReport, FeatureTable, Protocol, compare_dae_svm,
                                  extract_features, run_protocol, trial_accuracy, vote,
                                  window_accuracy)
from gappy_bci.signal_model import Trial
from gappy_bci.synthio import SurrogateDatasetSpec, generate_surrogate_dataset

FAST_DAE = DaeParams(hidden_units=20, epochs_pretrain=3, epochs_finetune=10)
FAST_GRID = ((1.0, "1/d"),)


def small_dataset(**kw):
    spec = dict(subjects=1, sessions=3, trials_per_session=6, channels=4, seed=2)
    spec.update(kw)
    return generate_surrogate_dataset(SurrogateDatasetSpec(**spec))


def fast_protocol(**kw):
    base = dict(removal_levels=(0.0, 0.5), dae=FAST_DAE, svm_grid=FAST_GRID, cv_folds=3)
    base.update(kw)
    return Protocol(**base)


def test_window_accuracy_examples():
    assert window_accuracy([1, 0, 1], [1, 0, 1]).accuracy == 1.0
    pred = np.r_[np.ones(13), np.zeros(12)].astype(int)
    assert window_accuracy(pred, np.ones(25, int)).accuracy == pytest.approx(0.52)
    with pytest.raises(EmptyInput):
        window_accuracy([], [])
    with pytest.raises(EmptyInput):
        window_accuracy([DROPPED, DROPPED], [0, 1])


def test_dropped_windows_excluded():
    # remove the first 1.5 s: windows starting at 0 .. 0.5 s are empty
    t = np.arange(1000) / 250.0
    x = np.random.default_rng(0).normal(size=(2, 1000))
    tr = Trial(t, x, 250.0, 4.0, 1).with_mask(t >= 1.5)
    table = extract_features([tr])
    assert int((~table.valid).sum()) == 5
    pred = np.full(25, DROPPED)
    valid = np.flatnonzero(table.valid)
    pred[valid[:10]] = 1
    pred[valid[10:]] = 0
    score = window_accuracy(pred, table.labels)
    assert (score.accuracy, score.valid, score.dropped) == (0.5, 20, 5)
    assert np.isnan(table.X[0]).all()


def test_vote_rules():
    assert vote([1] * 13 + [0] * 12) == 1
    assert vote([0] * 25) == 0
    tie = [1] * 12 + [0] * 11 + [0]
    assert vote(tie) == 0
    assert vote([0] * 12 + [1] * 12) == 1
    assert vote([0, 1, DROPPED]) == 1  # last valid window decides
    assert vote([DROPPED, DROPPED]) is None


def test_trial_accuracy():
    s = trial_accuracy([[1, 1, 0], [0, 0, 0], [DROPPED], [1, 0]], [1, 1, 0, 0])
    assert s.accuracy == pytest.approx(2 / 3) and s.trials == 3 and s.dropped == 1


def test_protocol_validation():
    with pytest.raises(ConfigError):
        Protocol(removal_levels=(0.9,))
    with pytest.raises(ConfigError):
        Protocol(session_pairs=((1, 1),))
    with pytest.raises(ConfigError):
        Protocol(modes=("stripe",))


@pytest.fixture(scope="module")
def report():
    return run_protocol(small_dataset(), fast_protocol())


def test_report_cardinality_and_ranges(report):
    # 2 session pairs x 2 modes x 2 levels x 2 classifiers
    assert len(report.rows) == 16
    for pair in ((1, 2), (2, 3)):
        assert len(report.select(train_session=pair[0], test_session=pair[1])) == 2 * 2 * 2
    for r in report.rows:
        assert 0 <= r["window_accuracy"] <= 1 and 0 <= r["trial_accuracy"] <= 1
        assert r["valid_trials"] + r["dropped_trial_count"] == 6
        assert r["valid_segments"] + r["dropped_segment_count"] == 6 * 25


def test_classifiers_share_masks(report):
    for mode in ("point", "block"):
        for p in (0.0, 0.5):
            rows = report.select(mode=mode, p=p, train_session=1)
            assert len({r["mask_seed"] for r in rows}) == 1
            assert len({r["dropped_segment_count"] for r in rows}) == 1


def test_report_deterministic(report):
    again = run_protocol(small_dataset(), fast_protocol())
    assert again.to_csv() == report.to_csv()
    assert again.to_json() == report.to_json()
    other = run_protocol(small_dataset(), fast_protocol(master_seed=1))
    assert other.to_csv() != report.to_csv()


def test_report_serialisation(report):
    text = report.to_csv()
    assert text.startswith("# gappy_bci version=")
    assert text.splitlines()[1].split(",") == list(EvalReport.COLUMNS)
    doc = json.loads(report.to_json())
    assert len(doc["rows"]) == 16 and doc["metadata"]["master_seed"] == 0
    assert report.mean(mode="point", p=0.0) == pytest.approx(
        np.mean([r["window_accuracy"] for r in report.select(mode="point", p=0.0)]))


def test_single_classifier_and_training_mask():
    rep = run_protocol(small_dataset(sessions=2), fast_protocol(classifiers=("svm",), modes=("point",),
                                                                 mask_training=True))
    assert len(rep.rows) == 2 and {r["classifier"] for r in rep.rows} == {"svm"}
    assert rep.metadata["training"][0]["C"] == 1.0


def test_shuffled_labels_near_chance():
    ds = small_dataset(sessions=2, trials_per_session=10)
    proto = fast_protocol(modes=("point",), removal_levels=(0.8,), classifiers=("svm",))
    real = run_protocol(ds, proto).mean()
    shuffled = np.mean([run_protocol(ds, fast_protocol(modes=("point",), removal_levels=(0.8,),
                                                       classifiers=("svm",), shuffle_labels=True,
                                                       master_seed=s)).mean() for s in range(3)])
    assert real >= shuffled
    assert abs(shuffled - 0.5) < 0.25


def _fake_report(dae, svm):
    rows = []
    for k, (a, b) in enumerate(zip(dae, svm)):
        for clf, v in (("dae", a), ("svm", b)):
            rows.append({"subject": 1, "train_session": 1 + k // 2, "test_session": 2 + k // 2,
                         "mode": "point", "p": 0.1 * (1 + k % 2), "classifier": clf,
                         "window_accuracy": v})
    return EvalReport(rows)


def test_compare_examples():
    cmp = compare_dae_svm(_fake_report([0.9], [0.8]))
    assert cmp.cells[0]["difference"] == pytest.approx(0.1)
    same = compare_dae_svm(_fake_report([0.7, 0.8, 0.6, 0.9], [0.7, 0.8, 0.6, 0.9]))
    assert all(c["difference"] == 0 for c in same.cells) and same.overall == 0
    cmp = compare_dae_svm(_fake_report([0.9, 0.8, 0.7, 0.9], [0.8, 0.8, 0.9, 0.6]))
    assert len(cmp.session_means) == 2
    assert cmp.overall == pytest.approx(np.mean([c["difference"] for c in cmp.cells]))
    assert cmp.overall == pytest.approx(np.mean([s["mean_difference"] for s in cmp.session_means]))
    assert cmp.grand_means["point"] == pytest.approx(cmp.overall)


def test_compare_missing_counterpart():
    rep = _fake_report([0.9], [0.8])
    rep.rows.pop()
    with pytest.raises(MissingCounterpart):
        compare_dae_svm(rep)


def test_feature_table_csv_round_trip():
    ds = small_dataset(sessions=1, trials_per_session=2)
    t = ds.trials[0]
    gappy = t.with_mask(t.times >= 1.5)
    table = extract_features([gappy, ds.trials[1]])
    text = table.to_csv(seed=3)
    assert "dropped_segments=5" in text.splitlines()[0]
    back = FeatureTable.from_csv(text)
    assert len(back) == 45
    np.testing.assert_array_equal(back.X, table.X[table.valid])
    np.testing.assert_array_equal(back.labels, table.labels[table.valid])
    np.testing.assert_array_equal(back.segment_index, table.segment_index[table.valid])
    assert back.n_trials == 2
    with pytest.raises(SchemaError):
        FeatureTable.from_csv("subject,session\n1,2\n")
    with pytest.raises(ParseError):
        FeatureTable.from_csv("subject,session,trial,segment,label,f1\n1,1,1,0,0,abc\n")


@pytest.mark.slow
def test_noise_free_graceful_degradation():
    ds = small_dataset(noise_std=0.0, trials_per_session=10)
    lo, hi = [], []
    for seed in range(10):
        rep = run_protocol(ds, fast_protocol(removal_levels=(0.1, 0.8), modes=("point",), master_seed=seed))
        lo.append(rep.mean(p=0.1))
        hi.append(rep.mean(p=0.8))
    assert np.mean(lo) >= np.mean(hi) - 0.05
