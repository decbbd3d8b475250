"""Session-to-session evaluation under point and block removal.

For every subject, a classifier trained on session ``k`` is tested on session
``k + 1`` after masking the test trials at each removal level.  Accuracy is
reported per sliding window and per trial (majority vote over the trial's
windows).  The DAE network and the SVM always see bit-identical masked data.
"""
from __future__ import annotations

import csv
import io
import json
import logging
from dataclasses import asdict, dataclass, field
from typing import NamedTuple

import numpy as np

from . import __version__
from .corruption import RemovalSpec, apply_removal
from .dae import DaeParams, train_dae_classifier
from .errors import (AllFrequenciesSingular, ConfigError, EmptyBand, EmptyInput,
                     MissingCounterpart, ParseError, SchemaError, TooFewSamples)
from .features import SubbandSpec, segment_features
from .seeding import derive_seed
from .signal_model import SegmentationSpec, segment_trial
from .spectral import BAND_GRID
from .svm import select_hyperparams, to_signed, train_svm

log = logging.getLogger(__name__)

DEFAULT_LEVELS = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8)
CLASSIFIERS = ("dae", "svm")
MODES = ("point", "block")
DROPPED = -1


# ---- accuracy measures ----------------------------------------------------

class WindowScore(NamedTuple):
    accuracy: float
    valid: int
    dropped: int


class TrialScore(NamedTuple):
    accuracy: float
    trials: int
    dropped: int


def window_accuracy(predictions, labels):
    """Fraction of correctly classified windows.

    Windows whose prediction is ``-1`` were dropped (too few samples) and are
    left out of both numerator and denominator.
    """
    pred = np.asarray(predictions)
    lab = np.asarray(labels)
    if pred.size == 0 or pred.shape != lab.shape:
        raise EmptyInput("predictions and labels must be non-empty and equally long")
    ok = pred != DROPPED
    if not ok.any():
        raise EmptyInput("every window was dropped")
    return WindowScore(float(np.mean(pred[ok] == lab[ok])), int(ok.sum()), int((~ok).sum()))


def vote(window_predictions):
    """Majority class of a trial's valid windows; an exact tie goes to the last valid window.

    Returns ``None`` when no window is valid.
    """
    w = np.asarray(window_predictions)
    w = w[w != DROPPED]
    if w.size == 0:
        return None
    ones = int(np.count_nonzero(w == 1))
    zeros = w.size - ones
    if ones == zeros:
        return int(w[-1])
    return 1 if ones > zeros else 0


def trial_accuracy(grouped_predictions, trial_labels):
    """Fraction of trials whose majority vote matches the label.

    Trials without any valid window are excluded and counted as dropped.
    """
    votes = [vote(w) for w in grouped_predictions]
    pairs = [(v, y) for v, y in zip(votes, trial_labels) if v is not None]
    dropped = len(votes) - len(pairs)
    if not pairs:
        raise EmptyInput("no trial has a valid window")
    return TrialScore(float(np.mean([v == y for v, y in pairs])), len(pairs), dropped)


# ---- feature tables -------------------------------------------------------

@dataclass
class FeatureTable:
    """Rows of segment features.  ``valid`` marks segments that produced a vector;
    invalid rows hold NaN features."""

    X: np.ndarray
    labels: np.ndarray
    trial_index: np.ndarray
    segment_index: np.ndarray
    subject: np.ndarray
    session: np.ndarray
    trial_id: np.ndarray
    valid: np.ndarray

    def __len__(self):
        return self.labels.size

    @property
    def n_trials(self):
        return int(self.trial_index.max()) + 1 if len(self) else 0

    def valid_rows(self):
        return self.X[self.valid], self.labels[self.valid]

    def trial_labels(self):
        out = np.empty(self.n_trials, dtype=int)
        out[self.trial_index] = self.labels
        return out

    def group(self, predictions):
        return [predictions[self.trial_index == k] for k in range(self.n_trials)]

    FIXED_COLUMNS = ("subject", "session", "trial", "segment", "label")

    def to_csv(self, **meta):
        """One row per valid segment; dropped segments are omitted."""
        buf = io.StringIO()
        items = {"dropped_segments": int((~self.valid).sum()), **meta}
        buf.write(f"# gappy_bci version={__version__} "
                  + " ".join(f"{k}={v}" for k, v in items.items()) + "\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(list(self.FIXED_COLUMNS) + [f"f{i}" for i in range(1, self.X.shape[1] + 1)])
        for k in np.flatnonzero(self.valid):
            w.writerow([self.subject[k], self.session[k], self.trial_id[k], self.segment_index[k],
                        self.labels[k]] + [repr(float(v)) for v in self.X[k]])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text):
        lines = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
        if not lines:
            raise ParseError("no header row")
        header = next(csv.reader([lines[0]]))
        missing = [c for c in cls.FIXED_COLUMNS if c not in header]
        fcols = [i for i, c in enumerate(header) if c.startswith("f") and c[1:].isdigit()]
        if not fcols:
            missing.append("f1..fK")
        if missing:
            raise SchemaError(missing)
        idx = [header.index(c) for c in cls.FIXED_COLUMNS]
        meta, X = [], []
        for lineno, row in enumerate(csv.reader(lines[1:]), start=2):
            if len(row) != len(header):
                raise ParseError(f"expected {len(header)} fields, got {len(row)}", lineno)
            try:
                meta.append([int(row[i]) for i in idx])
                X.append([float(row[i]) for i in fcols])
            except ValueError as exc:
                raise ParseError(str(exc), lineno) from None
        m = np.array(meta, dtype=int).reshape(-1, 5)
        keys = [tuple(r) for r in m[:, :3]]
        order = {k: n for n, k in enumerate(dict.fromkeys(keys))}
        trial_index = np.array([order[k] for k in keys], dtype=int)
        return cls(np.array(X, dtype=float).reshape(len(meta), len(fcols)), m[:, 4], trial_index,
                   m[:, 3], m[:, 0], m[:, 1], m[:, 2], np.ones(len(meta), dtype=bool))


def extract_features(trials, segmentation=SegmentationSpec(), grid=BAND_GRID, bands=SubbandSpec()):
    rows, meta, valid = [], [], []
    dim = None
    for k, tr in enumerate(trials):
        for s, seg in enumerate(segment_trial(tr, segmentation)):
            try:
                fv = segment_features(seg, grid, bands).values
                dim = fv.size
                ok = True
            except (TooFewSamples, EmptyBand, AllFrequenciesSingular):
                fv, ok = None, False
            rows.append(fv)
            valid.append(ok)
            meta.append((tr.label, k, s, tr.subject_id, tr.session_id, tr.trial_id))
    if dim is None:
        dim = (trials[0].n_channels if trials else 0) * len(bands)
    X = np.array([r if r is not None else np.full(dim, np.nan) for r in rows]).reshape(len(rows), dim)
    m = np.array(meta, dtype=int).reshape(-1, 6)
    return FeatureTable(X, m[:, 0], m[:, 1], m[:, 2], m[:, 3], m[:, 4], m[:, 5],
                        np.array(valid, dtype=bool))


# ---- protocol -------------------------------------------------------------

@dataclass(frozen=True)
class Protocol:
    removal_levels: tuple = DEFAULT_LEVELS
    modes: tuple = MODES
    classifiers: tuple = CLASSIFIERS
    master_seed: int = 0
    mask_training: bool = False
    shuffle_labels: bool = False
    session_pairs: tuple | None = None  # None -> consecutive sessions
    dae: DaeParams = field(default_factory=DaeParams)
    svm_grid: tuple | None = None
    cv_folds: int = 5
    segmentation: SegmentationSpec = field(default_factory=SegmentationSpec)

    def __post_init__(self):
        for p in self.removal_levels:
            if not 0 <= p <= 0.8:
                raise ConfigError(f"removal level {p} outside [0, 0.8]")
        for m in self.modes:
            if m not in MODES:
                raise ConfigError(f"unknown removal mode {m!r}")
        for c in self.classifiers:
            if c not in CLASSIFIERS:
                raise ConfigError(f"unknown classifier {c!r}")
        if self.session_pairs is not None:
            for a, b in self.session_pairs:
                if a == b:
                    raise ConfigError("train and test sessions must differ")


@dataclass
class EvalReport:
    rows: list
    metadata: dict = field(default_factory=dict)

    COLUMNS = ("subject", "train_session", "test_session", "mode", "p", "classifier",
               "window_accuracy", "trial_accuracy", "valid_segments", "dropped_segment_count",
               "valid_trials", "dropped_trial_count", "mask_seed", "classifier_seed")

    def select(self, **where):
        return [r for r in self.rows if all(r[k] == v for k, v in where.items())]

    def mean(self, metric="window_accuracy", **where):
        vals = [r[metric] for r in self.select(**where)]
        if not vals:
            raise EmptyInput(f"no rows match {where}")
        return float(np.mean(vals))

    def to_csv(self):
        buf = io.StringIO()
        meta = " ".join(f"{k}={v}" for k, v in self.metadata.items() if not isinstance(v, (dict, list)))
        buf.write(f"# gappy_bci version={__version__} {meta}".rstrip() + "\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.COLUMNS)
        for r in self.rows:
            w.writerow([repr(r[c]) if isinstance(r[c], float) else r[c] for c in self.COLUMNS])
        return buf.getvalue()

    def to_json(self):
        return json.dumps({"version": __version__, "metadata": self.metadata, "rows": self.rows},
                          indent=2, sort_keys=True) + "\n"


def _consecutive_pairs(dataset, subject):
    s = dataset.sessions(subject)
    return list(zip(s[:-1], s[1:]))


_MODE_CODE = {"point": 1, "block": 2}


def _mask_trials(trials, mode, p, master_seed, spec_kw=None):
    masked = []
    base = None
    for tr in trials:
        seed = derive_seed(master_seed, 11, tr.subject_id, tr.session_id, tr.trial_id,
                           _MODE_CODE[mode], int(round(p * 1000)))
        base = seed if base is None else base
        spec = RemovalSpec(mode=mode, fraction=p, seed=seed, **(spec_kw or {}))
        masked.append(apply_removal(tr, spec)[0])
    return masked, base


class _Trained(NamedTuple):
    predict: object
    seed: int
    info: dict


def _train(kind, table, seed, protocol):
    X, y = table.valid_rows()
    if kind == "dae":
        params = DaeParams(**{**asdict(protocol.dae), "seed": seed})
        clf = train_dae_classifier(X, y, params)
        return _Trained(lambda Z: clf.predict(Z)[0], seed,
                        {"lr_pretrain": clf.lr_pretrain_used, "lr_finetune": clf.lr_finetune_used})
    groups = table.trial_index[table.valid]
    params = select_hyperparams(X, to_signed(y), protocol.svm_grid, protocol.cv_folds, seed, groups)
    model = train_svm(X, to_signed(y), params)
    return _Trained(lambda Z: (model.predict(Z)[0] > 0).astype(int), seed,
                    {"C": params.C, "gamma": params.gamma})


def _predict(trained, table):
    pred = np.full(len(table), DROPPED, dtype=int)
    if table.valid.any():
        pred[table.valid] = trained.predict(table.X[table.valid])
    return pred


def run_protocol(dataset, protocol=Protocol()):
    """Train on each preceding session, test on the following one at every
    removal level and mode.  Returns an :class:`EvalReport` with one row per
    (subject, session pair, mode, level, classifier)."""
    rows = []
    training = []
    seg = protocol.segmentation
    for subject in dataset.subjects():
        pairs = protocol.session_pairs or _consecutive_pairs(dataset, subject)
        for train_s, test_s in pairs:
            train_trials = dataset.select(subject, train_s)
            test_trials = dataset.select(subject, test_s)
            if not train_trials or not test_trials:
                raise ConfigError(f"subject {subject}: sessions {train_s}/{test_s} not both present")
            if protocol.shuffle_labels:
                rng = np.random.default_rng(derive_seed(protocol.master_seed, 13, subject, train_s))
                perm = rng.permutation([t.label for t in train_trials])
                train_trials = [t.relabel(int(l)) for t, l in zip(train_trials, perm)]
            # with clean training data one fit per classifier serves every level
            fitted = {}
            if not protocol.mask_training:
                table = extract_features(train_trials, seg)
                fitted = {k: _fit(k, table, subject, train_s, protocol) for k in protocol.classifiers}
            for mode in protocol.modes:
                for p in protocol.removal_levels:
                    if protocol.mask_training:
                        mtrain, _ = _mask_trials(train_trials, mode, p, protocol.master_seed)
                        table = extract_features(mtrain, seg)
                        fitted = {k: _fit(k, table, subject, train_s, protocol) for k in protocol.classifiers}
                    masked, mask_seed = _mask_trials(test_trials, mode, p, protocol.master_seed)
                    test_table = extract_features(masked, seg)
                    for kind in protocol.classifiers:
                        pred = _predict(fitted[kind], test_table)
                        rows.append(_row(subject, train_s, test_s, mode, p, kind, pred, test_table,
                                         mask_seed, fitted[kind].seed))
            for kind in protocol.classifiers:
                training.append({"subject": int(subject), "train_session": int(train_s),
                                 "classifier": kind, **fitted[kind].info})
            log.info("subject %s sessions %s->%s done", subject, train_s, test_s)
    meta = {"master_seed": protocol.master_seed, "mask_training": protocol.mask_training,
            "shuffle_labels": protocol.shuffle_labels,
            "removal_levels": list(protocol.removal_levels), "modes": list(protocol.modes),
            "classifiers": list(protocol.classifiers), "training": training}
    return EvalReport(rows, meta)


def _fit(kind, table, subject, train_s, protocol):
    seed = derive_seed(protocol.master_seed, 12, CLASSIFIERS.index(kind), subject, train_s)
    return _train(kind, table, seed, protocol)


def _row(subject, train_s, test_s, mode, p, kind, pred, table, mask_seed, clf_seed):
    ws = window_accuracy(pred, table.labels)
    ts = trial_accuracy(table.group(pred), table.trial_labels())
    return {"subject": int(subject), "train_session": int(train_s), "test_session": int(test_s),
            "mode": mode, "p": float(p), "classifier": kind,
            "window_accuracy": ws.accuracy, "trial_accuracy": ts.accuracy,
            "valid_segments": ws.valid, "dropped_segment_count": ws.dropped,
            "valid_trials": ts.trials, "dropped_trial_count": ts.dropped,
            "mask_seed": int(mask_seed), "classifier_seed": int(clf_seed)}


# ---- DAE versus SVM -------------------------------------------------------

@dataclass
class Comparison:
    """DAE minus SVM accuracy per cell, per session pair and overall."""

    cells: list
    session_means: list
    grand_means: dict
    overall: float


def compare_dae_svm(report, metric="window_accuracy"):
    index = {}
    for r in report.rows:
        key = (r["subject"], r["train_session"], r["test_session"], r["mode"], r["p"])
        index.setdefault(key, {})[r["classifier"]] = r[metric]
    cells = []
    for key in sorted(index):
        pair = index[key]
        if "dae" not in pair or "svm" not in pair:
            raise MissingCounterpart(f"cell {key} lacks a {'svm' if 'dae' in pair else 'dae'} result")
        cells.append({"subject": key[0], "train_session": key[1], "test_session": key[2],
                      "mode": key[3], "p": key[4], "difference": pair["dae"] - pair["svm"]})
    if not cells:
        raise EmptyInput("report has no rows")
    sessions = {}
    for c in cells:
        sessions.setdefault((c["subject"], c["train_session"], c["test_session"], c["mode"]), []).append(c["difference"])
    session_means = [{"subject": k[0], "train_session": k[1], "test_session": k[2], "mode": k[3],
                      "mean_difference": float(np.mean(v))} for k, v in sorted(sessions.items())]
    grand = {}
    for s in session_means:
        grand.setdefault(s["mode"], []).append(s["mean_difference"])
    grand_means = {m: float(np.mean(v)) for m, v in grand.items()}
    overall = float(np.mean([s["mean_difference"] for s in session_means]))
    return Comparison(cells, session_means, grand_means, overall)
