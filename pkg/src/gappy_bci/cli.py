"""Command-line entry point.

    gappy-bci simulate   [--levels 0,0.1,...] [--seeds N]
    gappy-bci experiment (--dataset PATH | --generate) [--classifier dae|svm|both]
    gappy-bci train      (--features CSV | --dataset PATH) --classifier dae|svm
    gappy-bci predict    --model JSON (--features CSV | --dataset PATH)
    gappy-bci mask       --dataset PATH --mode point|block --p 0.5
    gappy-bci extract    (--dataset PATH | --generate)

Every command accepts ``--config``, ``--master-seed``, ``--out`` and
``--format``.  Settings resolve as flag > config file > default, and the
effective configuration is written to ``<out>/config.json``.  Exit codes:
0 success, 2 usage or configuration error, 3 runtime error.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
from dataclasses import fields
from pathlib import Path

import numpy as np

from . import __version__
from .corruption import RemovalSpec, apply_removal
from .dae import DaeClassifier, DaeParams, train_dae_classifier
from .errors import ConfigError, GappyError, ParseError, SchemaError
from .evaluation import (CLASSIFIERS, DEFAULT_LEVELS, FeatureTable, Protocol,
                         compare_dae_svm, extract_features, run_protocol)
from .plots import difference_chart, line_chart
from .seeding import derive_seed
from .signal_model import Trial, retained_fraction
from .spectral import MIXTURE_GRID, PowerSpectrum, normalize_by_retention, periodogram
from .svm import SvmModel, select_hyperparams, to_signed, train_svm
from .synthio import (Dataset, MixtureSpec, SurrogateDatasetSpec, dataset_to_csv, generate_mixture,
                      generate_surrogate_dataset, load_dataset, mixture_to_csv)

log = logging.getLogger("gappy_bci")

MODEL_SCHEMA_VERSION = 1
SIMULATE_LEVELS = (0.0,) + DEFAULT_LEVELS

DEFAULTS = {
    "master_seed": 0,
    "out": "out",
    "format": "csv",
    # simulate
    "levels": None,
    "seeds": 1,
    "duration": MixtureSpec.duration,
    "noise_std": None,
    "export_signal": False,
    # experiment / dataset generation
    "dataset": None,
    "generate": False,
    "classifier": "both",
    "modes": "point,block",
    "mask_training": False,
    "shuffle_labels": False,
    "subjects": SurrogateDatasetSpec.subjects,
    "sessions": SurrogateDatasetSpec.sessions,
    "trials": SurrogateDatasetSpec.trials_per_session,
    "channels": SurrogateDatasetSpec.channels,
    "class_effect": SurrogateDatasetSpec.class_effect,
    # train / predict
    "features": None,
    "model": None,
    "session": None,
    # mask
    "mode": "point",
    "p": 0.5,
    # DAE hyperparameters
    **{f"dae_{f.name}": f.default for f in fields(DaeParams) if f.name != "seed"},
}


class ExitError(Exception):
    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


# ---- argument parsing -----------------------------------------------------

def _common(p):
    g = p.add_argument_group("global")
    g.add_argument("--config", help="JSON file with settings (keys as flag names, '_' for '-')")
    g.add_argument("--master-seed", type=int)
    g.add_argument("--out", help="output directory")
    g.add_argument("--format", choices=("csv", "json"))
    g.add_argument("-v", "--verbose", action="store_true")


def _dataset_args(p, generate=True):
    p.add_argument("--dataset", help="dataset CSV")
    if generate:
        p.add_argument("--generate", action="store_true", default=None,
                       help="use the surrogate generator instead of a file")
    p.add_argument("--subjects", type=int)
    p.add_argument("--sessions", type=int)
    p.add_argument("--trials", type=int, help="trials per session")
    p.add_argument("--channels", type=int)
    p.add_argument("--noise-std", type=float)
    p.add_argument("--class-effect", type=float)


def build_parser():
    parser = argparse.ArgumentParser(prog="gappy-bci", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="two-tone mixture spectra under point removal")
    _common(p)
    p.add_argument("--levels", help="comma-separated removal fractions")
    p.add_argument("--seeds", type=int, help="number of mask/phase draws averaged per level")
    p.add_argument("--duration", type=float)
    p.add_argument("--noise-std", type=float)
    p.add_argument("--export-signal", action="store_true", default=None,
                   help="also write the first complete mixture as mixture.csv")

    p = sub.add_parser("experiment", help="session-wise evaluation sweep")
    _common(p)
    _dataset_args(p)
    p.add_argument("--levels")
    p.add_argument("--modes", help="comma-separated subset of point,block")
    p.add_argument("--classifier", choices=("dae", "svm", "both"))
    p.add_argument("--mask-training", action="store_true", default=None)
    p.add_argument("--shuffle-labels", action="store_true", default=None)

    p = sub.add_parser("train", help="train one classifier and save it as JSON")
    _common(p)
    _dataset_args(p)
    p.add_argument("--features", help="feature CSV from 'extract'")
    p.add_argument("--classifier", choices=CLASSIFIERS)
    p.add_argument("--session", type=int, help="only use rows from this session")

    p = sub.add_parser("predict", help="per-segment predictions from a saved model")
    _common(p)
    _dataset_args(p)
    p.add_argument("--model", required=False)
    p.add_argument("--features")
    p.add_argument("--session", type=int)

    p = sub.add_parser("mask", help="apply random removal to a dataset")
    _common(p)
    _dataset_args(p)
    p.add_argument("--mode", choices=("point", "block"))
    p.add_argument("--p", type=float, help="removed fraction")

    p = sub.add_parser("extract", help="segment features of a dataset")
    _common(p)
    _dataset_args(p)
    return parser


def resolve_config(args):
    cfg = dict(DEFAULTS)
    if args.config:
        try:
            with open(args.config) as fh:
                from_file = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ExitError(f"cannot read config {args.config}: {exc}", 2)
        if not isinstance(from_file, dict):
            raise ExitError("config file must hold a JSON object", 2)
        unknown = sorted(set(from_file) - set(cfg))
        if unknown:
            raise ExitError(f"unknown config keys: {', '.join(unknown)}", 2)
        cfg.update(from_file)
    for k, v in vars(args).items():
        if k in ("config", "verbose", "command"):
            continue
        if v is not None:
            cfg[k] = v
    cfg["command"] = args.command
    return cfg


def config_hash(cfg):
    """Hash of the settings that determine output content (the output path excluded)."""
    blob = json.dumps({k: v for k, v in cfg.items() if k != "out"}, sort_keys=True,
                      default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def _floats(text, name):
    if isinstance(text, (list, tuple)):
        return tuple(float(x) for x in text)
    try:
        return tuple(float(x) for x in str(text).split(",") if x.strip())
    except ValueError:
        raise ConfigError(f"--{name} must be a comma-separated list of numbers")


def _dae_params(cfg, seed):
    return DaeParams(**{f.name: cfg[f"dae_{f.name}"] for f in fields(DaeParams) if f.name != "seed"},
                     seed=seed)


# ---- helpers --------------------------------------------------------------

class Output:
    def __init__(self, cfg):
        self.dir = Path(cfg["out"])
        self.dir.mkdir(parents=True, exist_ok=True)
        self.meta = {"seed": cfg["master_seed"], "config_hash": config_hash(cfg)}
        self.written = []

    def comment(self):
        return f"# gappy_bci version={__version__} " + " ".join(f"{k}={v}" for k, v in self.meta.items())

    def write(self, name, text):
        path = self.dir / name
        path.write_text(text)
        self.written.append(str(path))
        return path

    def table(self, name, header, rows, fmt):
        """Write ``rows`` as CSV (with metadata comment) or as JSON records."""
        if fmt == "json":
            doc = {"version": __version__, **self.meta,
                   "rows": [dict(zip(header, r)) for r in rows]}
            return self.write(f"{name}.json", json.dumps(doc, indent=2) + "\n")
        lines = [self.comment(), ",".join(header)]
        lines += [",".join(repr(v) if isinstance(v, float) else str(v) for v in r) for r in rows]
        return self.write(f"{name}.csv", "\n".join(lines) + "\n")


def _surrogate_spec(cfg):
    kw = dict(subjects=cfg["subjects"], sessions=cfg["sessions"],
              trials_per_session=cfg["trials"], channels=cfg["channels"],
              class_effect=cfg["class_effect"], seed=derive_seed(cfg["master_seed"], 1))
    if cfg.get("noise_std") is not None:
        kw["noise_std"] = cfg["noise_std"]
    return SurrogateDatasetSpec(**kw)


def _load_or_generate(cfg, allow_generate=True):
    if cfg.get("dataset"):
        return load_dataset(cfg["dataset"])
    if allow_generate and cfg.get("generate"):
        return generate_surrogate_dataset(_surrogate_spec(cfg))
    raise ConfigError("provide --dataset PATH" + (" or --generate" if allow_generate else ""))


def _feature_table(cfg):
    if cfg.get("features"):
        try:
            text = Path(cfg["features"]).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read features: {exc}")
        table = FeatureTable.from_csv(text)
    else:
        table = extract_features(_load_or_generate(cfg).trials)
    if cfg.get("session") is not None:
        keep = table.session == cfg["session"]
        if not keep.any():
            raise ConfigError(f"no rows for session {cfg['session']}")
        table = _subset(table, keep)
    return table


def _subset(table, keep):
    idx = np.flatnonzero(keep)
    _, trial_index = np.unique(table.trial_index[idx], return_inverse=True)
    return FeatureTable(table.X[idx], table.labels[idx], trial_index, table.segment_index[idx],
                        table.subject[idx], table.session[idx], table.trial_id[idx], table.valid[idx])


def _load_model(path):
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read model {path}: {exc}")
    if doc.get("schema_version") != MODEL_SCHEMA_VERSION:
        raise ConfigError(f"model schema version {doc.get('schema_version')} is not supported "
                          f"(expected {MODEL_SCHEMA_VERSION})")
    if doc.get("kind") == "dae":
        return DaeClassifier.from_dict(doc)
    if doc.get("kind") == "svm":
        return SvmModel.from_dict(doc)
    raise ConfigError(f"unknown model kind {doc.get('kind')!r}")


def model_predict(model, X):
    """Classes in {0, 1} and a score (P(class 1) for DAE, decision value for SVM)."""
    if isinstance(model, DaeClassifier):
        cls, prob = model.predict(X)
        return cls, prob[:, 1]
    signed, value = model.predict(X)
    return (signed > 0).astype(int), value


# ---- commands -------------------------------------------------------------

def cmd_simulate(cfg, out):
    levels = _floats(cfg["levels"], "levels") if cfg["levels"] is not None else SIMULATE_LEVELS
    n_seeds = int(cfg["seeds"])
    if n_seeds < 1:
        raise ConfigError("--seeds must be at least 1")
    spec = MixtureSpec(duration=cfg["duration"], noise_std=cfg["noise_std"] or 0.0)
    if cfg["export_signal"]:
        sig = generate_mixture(spec, derive_seed(cfg["master_seed"], 2, 0))
        out.write("mixture.csv", mixture_to_csv(sig, **out.meta))
    series_list = []
    for p in levels:
        RemovalSpec(mode="point", fraction=p)  # validates the level
        raw = []
        for s in range(n_seeds):
            sig = generate_mixture(spec, derive_seed(cfg["master_seed"], 2, s))
            trial_mask = apply_removal(_as_trial(sig, spec), RemovalSpec("point", p),
                                       derive_seed(cfg["master_seed"], 3, s, int(round(p * 1000))))[0]
            spec_p = periodogram(trial_mask.channels[0], MIXTURE_GRID)
            raw.append(spec_p.powers)
        raw = np.mean(raw, axis=0)
        mean_spec = PowerSpectrum(MIXTURE_GRID, raw, 0)
        norm = normalize_by_retention(mean_spec, p).powers if p > 0 else raw
        rows = [(float(f), float(a), float(b)) for f, a, b in zip(MIXTURE_GRID.frequencies, raw, norm)]
        out.table(f"spectrum_p{p:.2f}", ("frequency_hz", "power", "normalized_power"), rows,
                  cfg["format"])
        series_list.append({"x": MIXTURE_GRID.frequencies, "y": norm, "label": f"p={p:.1f}",
                            "width": 2.5 if p == 0 else 1.2})
    out.write("spectra.svg", line_chart(series_list, "Least-squares spectra under point removal",
                                        "frequency (Hz)", "power / (1 - p)"))


def _as_trial(series, spec):
    return Trial(series.times, series.values[None, :], spec.sample_rate, spec.duration, 0)


def cmd_experiment(cfg, out):
    dataset = _load_or_generate(cfg)
    levels = _floats(cfg["levels"], "levels") if cfg["levels"] is not None else DEFAULT_LEVELS
    modes = tuple(m.strip() for m in str(cfg["modes"]).split(",") if m.strip())
    classifiers = CLASSIFIERS if cfg["classifier"] == "both" else (cfg["classifier"],)
    protocol = Protocol(removal_levels=levels, modes=modes, classifiers=classifiers,
                        master_seed=cfg["master_seed"], mask_training=bool(cfg["mask_training"]),
                        shuffle_labels=bool(cfg["shuffle_labels"]),
                        dae=_dae_params(cfg, 0))
    report = run_protocol(dataset, protocol)
    report.metadata["config_hash"] = out.meta["config_hash"]
    out.write("report.csv", report.to_csv())
    out.write("report.json", report.to_json())
    pairs = sorted({(r["subject"], r["train_session"], r["test_session"]) for r in report.rows})
    for mode in modes:
        for kind in classifiers:
            series = []
            for subj, a, b in pairs:
                rows = sorted(report.select(subject=subj, train_session=a, mode=mode, classifier=kind),
                              key=lambda r: r["p"])
                xs = [r["p"] for r in rows]
                series.append({"x": xs, "y": [r["trial_accuracy"] for r in rows],
                               "color": "#c62828", "width": 0.8})
                series.append({"x": xs, "y": [r["window_accuracy"] for r in rows],
                               "color": "#1f4e9c", "width": 2.5})
            series[0]["label"] = "trial"
            series[1]["label"] = "sliding window"
            out.write(f"accuracy_{mode}_{kind}.svg",
                      line_chart(series, f"{kind.upper()} accuracy, {mode} removal",
                                 "removed fraction", "accuracy", ylim=(0.0, 1.05)))
    if len(classifiers) == 2:
        comp = compare_dae_svm(report)
        out.write("comparison.json", json.dumps(
            {"cells": comp.cells, "session_means": comp.session_means,
             "grand_means": comp.grand_means, "overall": comp.overall}, indent=2) + "\n")
        for mode in modes:
            groups = []
            for subj, a, b in pairs:
                cells = [c for c in comp.cells if c["subject"] == subj and c["train_session"] == a
                         and c["mode"] == mode]
                groups.append((f"S{subj} {a}->{b}", [c["p"] for c in cells],
                               [c["difference"] for c in cells]))
            out.write(f"difference_{mode}.svg",
                      difference_chart(groups, f"DAE minus SVM window accuracy, {mode} removal"))


def cmd_extract(cfg, out):
    dataset = _load_or_generate(cfg)
    table = extract_features(dataset.trials)
    if cfg["format"] == "json":
        header = FeatureTable.FIXED_COLUMNS + tuple(f"f{i}" for i in range(1, table.X.shape[1] + 1))
        rows = [(int(table.subject[k]), int(table.session[k]), int(table.trial_id[k]),
                 int(table.segment_index[k]), int(table.labels[k]), *map(float, table.X[k]))
                for k in np.flatnonzero(table.valid)]
        out.table("features", header, rows, "json")
    else:
        out.write("features.csv", table.to_csv(**out.meta))


def cmd_train(cfg, out):
    kind = cfg["classifier"]
    if kind not in CLASSIFIERS:
        raise ConfigError("--classifier must be dae or svm for train")
    table = _feature_table(cfg)
    X, y = table.valid_rows()
    seed = derive_seed(cfg["master_seed"], 4, CLASSIFIERS.index(kind))
    if kind == "dae":
        model = train_dae_classifier(X, y, _dae_params(cfg, seed))
    else:
        params = select_hyperparams(X, to_signed(y), seed=seed, groups=table.trial_index[table.valid])
        model = train_svm(X, to_signed(y), params)
    pred, _ = model_predict(model, X)
    acc = float(np.mean(pred == y))
    doc = model.to_dict()
    doc["training_accuracy"] = acc
    out.write("model.json", json.dumps(doc) + "\n")
    out.write("train_summary.json", json.dumps(
        {"classifier": kind, "samples": int(len(y)), "training_accuracy": acc,
         "seed": seed, **out.meta}, indent=2) + "\n")
    print(f"training accuracy {acc:.4f} on {len(y)} segments")


def cmd_predict(cfg, out):
    if not cfg.get("model"):
        raise ConfigError("--model is required")
    model = _load_model(cfg["model"])
    table = _feature_table(cfg)
    X, y = table.valid_rows()
    if X.shape[1] != model.input_dim:
        raise ConfigError(f"feature dimension {X.shape[1]} does not match model input {model.input_dim}")
    pred, score = model_predict(model, X)
    v = np.flatnonzero(table.valid)
    rows = [(int(table.subject[k]), int(table.session[k]), int(table.trial_id[k]),
             int(table.segment_index[k]), int(table.labels[k]), int(c), float(s))
            for k, c, s in zip(v, pred, score)]
    out.table("predictions", ("subject", "session", "trial", "segment", "label", "predicted", "score"),
              rows, cfg["format"])
    print(f"accuracy {float(np.mean(pred == y)):.4f} on {len(y)} segments")


def cmd_mask(cfg, out):
    dataset = _load_or_generate(cfg)
    base = RemovalSpec(mode=cfg["mode"], fraction=float(cfg["p"]))
    masked, lines = [], []
    for tr in dataset.trials:
        seed = derive_seed(cfg["master_seed"], 5, tr.subject_id, tr.session_id, tr.trial_id)
        m_trial, mask = apply_removal(tr, base, seed)
        masked.append(m_trial)
        lines.append(f"{tr.subject_id} {tr.session_id} {tr.trial_id} {mask.to_rle()}")
    ds = Dataset(masked)
    out.write("masked.csv", dataset_to_csv(ds, mode=base.mode, p=base.fraction, **out.meta))
    out.write("masks.txt", out.comment() + "\n" + "\n".join(lines) + "\n")
    mean_kept = float(np.mean([retained_fraction(t) for t in masked]))
    print(f"masked {len(masked)} trials, mean retained fraction {mean_kept:.4f}")


COMMANDS = {"simulate": cmd_simulate, "experiment": cmd_experiment, "train": cmd_train,
            "predict": cmd_predict, "mask": cmd_mask, "extract": cmd_extract}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args)
        out = Output(cfg)
        out.write("config.json", json.dumps(cfg, indent=2, sort_keys=True, default=str) + "\n")
        COMMANDS[args.command](cfg, out)
    except ExitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (ConfigError, ParseError, SchemaError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (GappyError, OSError, ValueError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
