"""Denoising-autoencoder pretraining and the fine-tuned three-layer classifier.

Pretraining corrupts each (min-max scaled) input by zeroing a fixed fraction
of its entries, encodes with ``h = sigmoid(W x~ + b)``, decodes with
``z = sigmoid(W' h + b')`` and minimises the mean over samples of
``||x - z||^2`` by minibatch SGD.  The encoder then initialises the hidden
layer of a network whose softmax top layer is trained jointly with it on
cross-entropy.  Everything is plain numpy.
"""
from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import ConfigError, DimensionMismatch, NonFiniteLoss
from .seeding import derive_seed

log = logging.getLogger(__name__)

N_CLASSES = 2


@dataclass(frozen=True)
class DaeParams:
    corruption_fraction: float = 0.3
    hidden_units: int = 120
    minibatch: int = 25
    lr_pretrain: float = 0.9
    epochs_pretrain: int = 20
    lr_finetune: float = 0.9
    epochs_finetune: int = 50
    seed: int = 0

    def __post_init__(self):
        if not 0 <= self.corruption_fraction < 1:
            raise ConfigError("corruption_fraction must lie in [0, 1)")
        if self.hidden_units <= 0 or self.minibatch <= 0:
            raise ConfigError("hidden_units and minibatch must be positive")
        if self.lr_pretrain <= 0 or self.lr_finetune <= 0:
            raise ConfigError("learning rates must be positive")
        if self.epochs_pretrain < 0 or self.epochs_finetune < 0:
            raise ConfigError("epoch counts must be non-negative")


def sigmoid(a):
    # split form avoids overflow warnings for large |a|
    out = np.empty_like(a)
    pos = a >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-a[pos]))
    e = np.exp(a[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def softmax(logits):
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


@dataclass(frozen=True)
class MinMaxScaler:
    """Per-feature map of the training range onto [0, 1]; constant features map to 0.5."""

    mins: np.ndarray
    maxs: np.ndarray

    @classmethod
    def fit(cls, features):
        x = np.asarray(features, dtype=float)
        return cls(x.min(axis=0), x.max(axis=0))

    def transform(self, features):
        x = np.atleast_2d(np.asarray(features, dtype=float))
        if x.shape[1] != self.mins.size:
            raise DimensionMismatch(f"expected {self.mins.size} features, got {x.shape[1]}")
        span = self.maxs - self.mins
        flat = span <= 0
        out = (x - self.mins) / np.where(flat, 1.0, span)
        out[:, flat] = 0.5
        return np.clip(out, 0.0, 1.0)


def scale_inputs(features, scaler):
    return scaler.transform(features)


def corrupt(batch, fraction, seed, epoch=0):
    """Zero exactly ``round(fraction * dim)`` randomly chosen entries of every row.

    The draw for row ``i`` depends only on ``(seed, epoch, i)`` and the batch
    shape, so corrupting a full training set once per epoch is reproducible.
    """
    x = np.array(batch, dtype=float, copy=True)
    x = np.atleast_2d(x)
    k = int(round(fraction * x.shape[1]))
    if k == 0:
        return x
    rng = np.random.default_rng([int(seed), int(epoch)])
    keys = rng.random(x.shape)
    idx = np.argpartition(keys, k - 1, axis=1)[:, :k]
    np.put_along_axis(x, idx, 0.0, axis=1)
    return x


# ---- losses and gradients -------------------------------------------------

def reconstruction_loss_and_grads(W, b, W_dec, b_dec, x_in, x_target):
    """Mean over rows of ``||x_target - z||^2`` and its gradients.

    Returns ``(loss, {"W", "b", "W_dec", "b_dec"})``.
    """
    n = x_in.shape[0]
    h = sigmoid(x_in @ W.T + b)
    z = sigmoid(h @ W_dec.T + b_dec)
    diff = z - x_target
    loss = float(np.sum(diff * diff) / n)
    d2 = (2.0 / n) * diff * z * (1.0 - z)
    dh = d2 @ W_dec
    d1 = dh * h * (1.0 - h)
    grads = {"W": d1.T @ x_in, "b": d1.sum(axis=0),
             "W_dec": d2.T @ h, "b_dec": d2.sum(axis=0)}
    return loss, grads


def classification_loss_and_grads(W, b, V, c, x, labels):
    """Mean cross-entropy of the softmax network and its gradients."""
    n = x.shape[0]
    h = sigmoid(x @ W.T + b)
    p = softmax(h @ V.T + c)
    rows = np.arange(n)
    loss = float(-np.mean(np.log(np.maximum(p[rows, labels], 1e-300))))
    dlog = p.copy()
    dlog[rows, labels] -= 1.0
    dlog /= n
    dh = dlog @ V
    d1 = dh * h * (1.0 - h)
    grads = {"W": d1.T @ x, "b": d1.sum(axis=0), "V": dlog.T @ h, "c": dlog.sum(axis=0)}
    return loss, grads


# ---- training -------------------------------------------------------------

@dataclass
class PretrainResult:
    W: np.ndarray
    b: np.ndarray
    W_dec: np.ndarray
    b_dec: np.ndarray
    losses: list = field(default_factory=list)


def _uniform(rng, shape, fan_in):
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)


def init_autoencoder(input_dim, params):
    rng = np.random.default_rng(derive_seed(params.seed, 0))
    h = params.hidden_units
    return PretrainResult(_uniform(rng, (h, input_dim), input_dim), np.zeros(h),
                          _uniform(rng, (input_dim, h), h), np.zeros(input_dim))


def _batches(n, size, rng):
    order = rng.permutation(n)
    return [order[i:i + size] for i in range(0, n, size)]


def pretrain(train_features, params=DaeParams(), lr=None):
    """Unsupervised denoising pretraining on scaled features.

    ``losses[0]`` is the reconstruction loss of the clean training set before
    any update and ``losses[e]`` the same quantity after epoch ``e``.
    """
    x = np.atleast_2d(np.asarray(train_features, dtype=float))
    lr = params.lr_pretrain if lr is None else lr
    state = init_autoencoder(x.shape[1], params)
    W, b, W_dec, b_dec = state.W, state.b, state.W_dec, state.b_dec
    shuffle_rng = np.random.default_rng(derive_seed(params.seed, 1))
    corrupt_seed = derive_seed(params.seed, 2)
    losses = [reconstruction_loss_and_grads(W, b, W_dec, b_dec, x, x)[0]]
    for epoch in range(params.epochs_pretrain):
        noisy = corrupt(x, params.corruption_fraction, corrupt_seed, epoch)
        for idx in _batches(x.shape[0], params.minibatch, shuffle_rng):
            loss, g = reconstruction_loss_and_grads(W, b, W_dec, b_dec, noisy[idx], x[idx])
            if not np.isfinite(loss):
                raise NonFiniteLoss(epoch, "pretraining")
            W = W - lr * g["W"]
            b = b - lr * g["b"]
            W_dec = W_dec - lr * g["W_dec"]
            b_dec = b_dec - lr * g["b_dec"]
        epoch_loss = reconstruction_loss_and_grads(W, b, W_dec, b_dec, x, x)[0]
        if not np.isfinite(epoch_loss):
            raise NonFiniteLoss(epoch, "pretraining")
        losses.append(epoch_loss)
    return PretrainResult(W, b, W_dec, b_dec, losses)


@dataclass
class DaeClassifier:
    """Fine-tuned network: sigmoid hidden layer (``W``, ``b``) and softmax top layer (``V``, ``c``).

    ``W_dec``/``b_dec`` are the pretrained decoder, unused for prediction but
    kept for inspection.  Inputs are raw feature vectors; the stored scaler is
    applied first.
    """

    W: np.ndarray
    b: np.ndarray
    V: np.ndarray
    c: np.ndarray
    scaler: MinMaxScaler
    W_dec: np.ndarray | None = None
    b_dec: np.ndarray | None = None
    params: DaeParams = field(default_factory=DaeParams)
    pretrain_losses: list = field(default_factory=list)
    finetune_losses: list = field(default_factory=list)
    lr_pretrain_used: float | None = None
    lr_finetune_used: float | None = None

    @property
    def input_dim(self):
        return self.W.shape[1]

    def hidden(self, features):
        return sigmoid(self.scaler.transform(features) @ self.W.T + self.b)

    def predict_proba(self, features):
        x = np.atleast_2d(np.asarray(features, dtype=float))
        if x.shape[1] != self.input_dim:
            raise DimensionMismatch(f"classifier expects {self.input_dim} features, got {x.shape[1]}")
        return softmax(self.hidden(x) @ self.V.T + self.c)

    def predict(self, features):
        """Class ids (argmax, ties to class 0) and class probabilities."""
        p = self.predict_proba(features)
        return np.argmax(p, axis=1), p

    def to_dict(self):
        def arr(a):
            return None if a is None else np.asarray(a).tolist()
        return {
            "kind": "dae",
            "schema_version": 1,
            "input_dim": int(self.input_dim),
            "hidden_units": int(self.W.shape[0]),
            "scaler": {"mins": arr(self.scaler.mins), "maxs": arr(self.scaler.maxs)},
            "W": arr(self.W), "b": arr(self.b), "V": arr(self.V), "c": arr(self.c),
            "W_dec": arr(self.W_dec), "b_dec": arr(self.b_dec),
            "params": asdict(self.params),
            "seed": self.params.seed,
            "pretrain_losses": list(self.pretrain_losses),
            "finetune_losses": list(self.finetune_losses),
            "lr_pretrain_used": self.lr_pretrain_used,
            "lr_finetune_used": self.lr_finetune_used,
        }

    @classmethod
    def from_dict(cls, d):
        def arr(a):
            return None if a is None else np.array(a, dtype=float)
        return cls(arr(d["W"]), arr(d["b"]), arr(d["V"]), arr(d["c"]),
                   MinMaxScaler(arr(d["scaler"]["mins"]), arr(d["scaler"]["maxs"])),
                   arr(d.get("W_dec")), arr(d.get("b_dec")), DaeParams(**d["params"]),
                   list(d.get("pretrain_losses", [])), list(d.get("finetune_losses", [])),
                   d.get("lr_pretrain_used"), d.get("lr_finetune_used"))


def finetune(pretrained, train_features, labels, params=DaeParams(), scaler=None,
             lr=None, top_init="random"):
    """Supervised training of encoder + softmax top layer; the decoder is discarded.

    ``train_features`` are raw features when ``scaler`` is given, otherwise
    they must already be scaled (an identity scaler is stored).
    """
    labels = np.asarray(labels, dtype=int)
    x_raw = np.atleast_2d(np.asarray(train_features, dtype=float))
    if labels.shape != (x_raw.shape[0],):
        raise DimensionMismatch("one label per sample is required")
    if np.any((labels < 0) | (labels >= N_CLASSES)):
        raise ConfigError("labels must be 0 or 1")
    if scaler is None:
        d = x_raw.shape[1]
        scaler = MinMaxScaler(np.zeros(d), np.ones(d))
    x = scaler.transform(x_raw)
    lr = params.lr_finetune if lr is None else lr
    W, b = pretrained.W.copy(), pretrained.b.copy()
    h = W.shape[0]
    if top_init == "zeros":
        V, c = np.zeros((N_CLASSES, h)), np.zeros(N_CLASSES)
    else:
        V = _uniform(np.random.default_rng(derive_seed(params.seed, 3)), (N_CLASSES, h), h)
        c = np.zeros(N_CLASSES)
    shuffle_rng = np.random.default_rng(derive_seed(params.seed, 4))
    losses = [classification_loss_and_grads(W, b, V, c, x, labels)[0]]
    for epoch in range(params.epochs_finetune):
        for idx in _batches(x.shape[0], params.minibatch, shuffle_rng):
            loss, g = classification_loss_and_grads(W, b, V, c, x[idx], labels[idx])
            if not np.isfinite(loss):
                raise NonFiniteLoss(epoch, "fine-tuning")
            W = W - lr * g["W"]
            b = b - lr * g["b"]
            V = V - lr * g["V"]
            c = c - lr * g["c"]
        epoch_loss = classification_loss_and_grads(W, b, V, c, x, labels)[0]
        if not np.isfinite(epoch_loss):
            raise NonFiniteLoss(epoch, "fine-tuning")
        losses.append(epoch_loss)
    return DaeClassifier(W, b, V, c, scaler, pretrained.W_dec, pretrained.b_dec, params,
                         list(pretrained.losses), losses, None, lr)


def predict(classifier, features):
    return classifier.predict(features)


def train_dae_classifier(features, labels, params=DaeParams(), max_halvings=6):
    """Fit scaler, pretrain, fine-tune.  A learning rate that produces a
    non-finite loss is halved and the stage retried."""
    features = np.atleast_2d(np.asarray(features, dtype=float))
    scaler = MinMaxScaler.fit(features)
    x = scaler.transform(features)

    def with_backoff(stage, lr0, fn):
        lr = lr0
        for _ in range(max_halvings + 1):
            try:
                return fn(lr), lr
            except NonFiniteLoss:
                log.warning("%s diverged at lr=%g, halving", stage, lr)
                lr /= 2
        raise NonFiniteLoss(-1, stage)

    pre, lr_pre = with_backoff("pretraining", params.lr_pretrain, lambda lr: pretrain(x, params, lr))
    clf, lr_fine = with_backoff("fine-tuning", params.lr_finetune,
                                lambda lr: finetune(pre, features, labels, params, scaler, lr))
    clf.lr_pretrain_used = lr_pre
    clf.lr_finetune_used = lr_fine
    return clf
