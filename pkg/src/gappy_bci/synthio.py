"""Synthetic signals and dataset persistence.

Two generators live here: the two-tone mixture used to check spectral
estimates under point removal, and a surrogate two-class motor-imagery
dataset (subjects x sessions x trials x channels) whose classes differ in
8-12 Hz amplitude over opposite channel halves.

Datasets are stored as CSV with one row per retained sampling instant::

    # gappy_bci version=0.1.0 sample_rate=250 duration=4
    subject,session,trial,label,time_s,ch1,...,chN

Removed instants are simply absent rows.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .errors import ConfigError, ParseError, SchemaError
from .seeding import derive_seed
from .signal_model import TimeStampedSeries, Trial

KEY_COLUMNS = ("subject", "session", "trial", "label", "time_s")


@dataclass(frozen=True)
class MixtureSpec:
    tones: tuple = ((3.0, 1.5), (6.0, 1.0))
    duration: float = 4.0
    sample_rate: float = 250.0
    noise_std: float = 0.0

    def __post_init__(self):
        if self.duration <= 0 or self.sample_rate <= 0:
            raise ConfigError("duration and sample_rate must be positive")
        for f, _ in self.tones:
            if not 0 < f < self.sample_rate / 2:
                raise ConfigError(f"tone at {f} Hz is outside (0, Nyquist)")
        if self.noise_std < 0:
            raise ConfigError("noise_std must be non-negative")


def generate_mixture(spec=MixtureSpec(), seed=0):
    """Evenly sampled sum of sines with seeded random phases plus optional white noise."""
    rng = np.random.default_rng(seed)
    n = int(round(spec.duration * spec.sample_rate))
    t = np.arange(n) / spec.sample_rate
    y = np.zeros(n)
    for f, a in spec.tones:
        y += a * np.sin(2 * np.pi * f * t + rng.uniform(0, 2 * np.pi))
    if spec.noise_std > 0:
        y += rng.normal(0.0, spec.noise_std, n)
    return TimeStampedSeries(t, y)


@dataclass(frozen=True)
class SurrogateDatasetSpec:
    """Layout and difficulty of the surrogate dataset.

    Every channel carries an alpha tone (random frequency in ``alpha_range``)
    whose amplitude waxes and wanes with a slow envelope of relative depth
    ``burst_depth``, three beta tones near 15, 20 and 25 Hz, a low-frequency
    (1-4 Hz) background rhythm, and white noise.  Phases are random and
    amplitudes carry log-normal jitter.  Class 0 multiplies the alpha
    amplitude of the first half of the channels by ``class_effect``, class 1
    that of the second half.
    """

    subjects: int = 3
    sessions: int = 4
    trials_per_session: int = 15
    channels: int = 14
    sample_rate: float = 250.0
    trial_duration: float = 4.0
    class_effect: float = 2.0
    alpha_amplitude: float = 1.0
    alpha_range: tuple = (9.0, 11.0)
    beta_amplitude: float = 0.5
    delta_amplitude: float = 3.0
    burst_depth: float = 0.5
    amplitude_jitter: float = 0.1
    noise_std: float = 3.0
    seed: int = 0

    def __post_init__(self):
        for name in ("subjects", "sessions", "trials_per_session", "channels"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        if self.channels < 2:
            raise ConfigError("need at least two channels for the lateralised class effect")
        if self.sample_rate <= 0 or self.trial_duration <= 0:
            raise ConfigError("sample_rate and trial_duration must be positive")
        if self.class_effect <= 0 or self.noise_std < 0 or self.amplitude_jitter < 0:
            raise ConfigError("class_effect must be positive; noise and jitter non-negative")
        if not 0 <= self.burst_depth < 1:
            raise ConfigError("burst_depth must lie in [0, 1)")


@dataclass
class Dataset:
    trials: list = field(default_factory=list)

    def __len__(self):
        return len(self.trials)

    def __iter__(self):
        return iter(self.trials)

    def __eq__(self, other):
        if not isinstance(other, Dataset) or len(self) != len(other):
            return False
        return all(_trials_equal(a, b) for a, b in zip(self.trials, other.trials))

    def subjects(self):
        return sorted({t.subject_id for t in self.trials})

    def sessions(self, subject):
        return sorted({t.session_id for t in self.trials if t.subject_id == subject})

    def select(self, subject, session):
        return [t for t in self.trials if t.subject_id == subject and t.session_id == session]


def _trials_equal(a, b):
    return (a.label == b.label and a.subject_id == b.subject_id and a.session_id == b.session_id
            and a.trial_id == b.trial_id and a.sample_rate == b.sample_rate
            and a.nominal_duration == b.nominal_duration
            and np.array_equal(a.times, b.times) and np.array_equal(a.values, b.values))


def _session_labels(n, rng):
    labels = np.arange(n) % 2
    return labels[rng.permutation(n)]


def generate_surrogate_dataset(spec=SurrogateDatasetSpec()):
    n = int(round(spec.sample_rate * spec.trial_duration))
    t = np.arange(n) / spec.sample_rate
    half = spec.channels // 2
    trials = []
    for subj in range(1, spec.subjects + 1):
        # fixed per-subject channel gains, shared by all of that subject's sessions
        subj_rng = np.random.default_rng(derive_seed(spec.seed, subj))
        gains = np.exp(subj_rng.normal(0.0, 0.2, spec.channels))
        for sess in range(1, spec.sessions + 1):
            rng = np.random.default_rng(derive_seed(spec.seed, subj, sess))
            labels = _session_labels(spec.trials_per_session, rng)
            for k, label in enumerate(labels, start=1):
                effect = np.ones(spec.channels)
                if label == 0:
                    effect[:half] = spec.class_effect
                else:
                    effect[half:] = spec.class_effect
                jitter = lambda: np.exp(rng.normal(0.0, spec.amplitude_jitter, spec.channels))
                f_alpha = rng.uniform(*spec.alpha_range, spec.channels)
                amp = spec.alpha_amplitude * gains * effect * jitter()
                phase = rng.uniform(0, 2 * np.pi, spec.channels)
                x = amp[:, None] * np.sin(2 * np.pi * f_alpha[:, None] * t + phase[:, None])
                f_env = rng.uniform(0.5, 2.0, spec.channels)
                phase = rng.uniform(0, 2 * np.pi, spec.channels)
                x *= 1.0 + spec.burst_depth * np.sin(2 * np.pi * f_env[:, None] * t + phase[:, None])
                f_delta = rng.uniform(1.0, 4.0, spec.channels)
                amp = spec.delta_amplitude * gains * jitter()
                phase = rng.uniform(0, 2 * np.pi, spec.channels)
                x += amp[:, None] * np.sin(2 * np.pi * f_delta[:, None] * t + phase[:, None])
                for centre in (15.0, 20.0, 25.0):
                    f = centre + rng.uniform(-1.0, 1.0, spec.channels)
                    amp = spec.beta_amplitude * gains * jitter()
                    phase = rng.uniform(0, 2 * np.pi, spec.channels)
                    x += amp[:, None] * np.sin(2 * np.pi * f[:, None] * t + phase[:, None])
                if spec.noise_std > 0:
                    x += rng.normal(0.0, spec.noise_std, x.shape)
                trials.append(Trial(t, x, spec.sample_rate, spec.trial_duration, int(label),
                                    subj, sess, k))
    return Dataset(trials)


# ---- CSV persistence ------------------------------------------------------

def metadata_line(**items):
    fields = " ".join(f"{k}={v}" for k, v in items.items())
    return f"# gappy_bci version={__version__} {fields}".rstrip()


def _parse_metadata(line):
    out = {}
    for tok in line.lstrip("#").split():
        if "=" in tok:
            k, v = tok.split("=", 1)
            out[k] = v
    return out


def dataset_to_csv(dataset, **meta):
    if not dataset.trials:
        raise ConfigError("dataset is empty")
    first = dataset.trials[0]
    n_ch = first.n_channels
    buf = io.StringIO()
    buf.write(metadata_line(sample_rate=repr(first.sample_rate),
                            duration=repr(first.nominal_duration), **meta) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(list(KEY_COLUMNS) + [f"ch{i}" for i in range(1, n_ch + 1)])
    for tr in dataset.trials:
        if tr.n_channels != n_ch:
            raise ConfigError("all trials must have the same channel count")
        if tr.sample_rate != first.sample_rate or tr.nominal_duration != first.nominal_duration:
            raise ConfigError("all trials must share sample_rate and duration")
        head = [tr.subject_id, tr.session_id, tr.trial_id, tr.label]
        for j, ts in enumerate(tr.times):
            w.writerow(head + [repr(float(ts))] + [repr(float(v)) for v in tr.values[:, j]])
    return buf.getvalue()


def save_dataset(dataset, path, **meta):
    with open(path, "w", newline="") as fh:
        fh.write(dataset_to_csv(dataset, **meta))


def load_dataset(path, sample_rate=None, duration=None):
    with open(path, newline="") as fh:
        return dataset_from_csv(fh.read(), sample_rate, duration)


def dataset_from_csv(text, sample_rate=None, duration=None):
    """Parse dataset CSV text.  ``sample_rate``/``duration`` override the
    metadata line; without either, 250 Hz and 4 s are assumed."""
    lines = text.splitlines()
    meta = {}
    body_start = 0
    while body_start < len(lines) and lines[body_start].startswith("#"):
        meta.update(_parse_metadata(lines[body_start]))
        body_start += 1
    rate = float(sample_rate if sample_rate is not None else meta.get("sample_rate", 250.0))
    dur = float(duration if duration is not None else meta.get("duration", 4.0))
    if body_start >= len(lines):
        raise ParseError("no header row", body_start + 1)
    header = next(csv.reader([lines[body_start]]))
    missing = [c for c in KEY_COLUMNS if c not in header]
    channels = [c for c in header if c.startswith("ch") and c[2:].isdigit()]
    if not channels:
        missing.append("ch1..chN")
    if missing:
        raise SchemaError(missing)
    channels.sort(key=lambda c: int(c[2:]))
    col = {c: header.index(c) for c in list(KEY_COLUMNS) + channels}

    groups = {}
    order = []
    for lineno, row in enumerate(csv.reader(lines[body_start + 1:]), start=body_start + 2):
        if not row or row[0].startswith("#"):
            continue
        if len(row) != len(header):
            raise ParseError(f"expected {len(header)} fields, got {len(row)}", lineno)
        try:
            key = (int(row[col["subject"]]), int(row[col["session"]]), int(row[col["trial"]]))
            label = int(row[col["label"]])
            t = float(row[col["time_s"]])
            vals = [float(row[col[c]]) for c in channels]
        except ValueError as exc:
            raise ParseError(str(exc), lineno) from None
        if key not in groups:
            groups[key] = {"label": label, "t": [], "v": [], "line": lineno}
            order.append(key)
        g = groups[key]
        if label != g["label"]:
            raise ParseError(f"label changes within trial {key}", lineno)
        if g["t"] and t <= g["t"][-1]:
            raise ParseError(f"time_s not strictly increasing within trial {key} (row {lineno})", lineno)
        g["t"].append(t)
        g["v"].append(vals)

    trials = []
    for key in order:
        g = groups[key]
        values = np.array(g["v"], dtype=float).T.reshape(len(channels), -1)
        try:
            trials.append(Trial(np.array(g["t"]), values, rate, dur, g["label"], *key))
        except ConfigError as exc:
            raise ParseError(f"trial {key}: {exc}", g["line"]) from None
    return Dataset(trials)


def mixture_to_csv(series, **meta):
    buf = io.StringIO()
    buf.write(metadata_line(**meta) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["time_s", "value"])
    for t, v in zip(series.times, series.values):
        w.writerow([repr(float(t)), repr(float(v))])
    return buf.getvalue()
