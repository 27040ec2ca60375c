"""Minibatch training loop and evaluation."""

from dataclasses import asdict, dataclass, field
import math

import numpy as np

from .. import streams
from . import augment as augment_mod
from .layers import softmax_cross_entropy
from .network import backward, forward, init_state
from .optim import AdamW, adamw_update

EVAL_BATCH = 1000


@dataclass(frozen=True)
class Hyper:
    epochs: int = 10
    batch_size: int = 128
    lr: float = 0.01
    weight_decay: float = 0.0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    schedule: str = "constant"  # or "cosine"
    restart_periods: tuple = ()  # cosine cycle lengths in epochs; empty means one cycle over all epochs
    lr_min: float = 0.0
    augment: bool = False
    dtype: str = "float32"

    def __post_init__(self):
        object.__setattr__(self, "restart_periods", tuple(int(p) for p in self.restart_periods))
        if self.epochs < 0 or self.batch_size < 2:
            raise ValueError("epochs must be >= 0 and batch_size >= 2")
        if self.lr <= 0:
            raise ValueError("learning rate must be positive")
        if self.schedule not in ("constant", "cosine"):
            raise ValueError(f"unknown learning-rate schedule {self.schedule!r}")
        if any(p < 1 for p in self.restart_periods):
            raise ValueError("restart periods must be positive")
        if self.dtype not in ("float32", "float64"):
            raise ValueError("dtype must be float32 or float64")

    def optimizer(self):
        return AdamW(self.beta1, self.beta2, self.eps, self.weight_decay)

    def lr_at(self, epoch):
        """Learning rate for a (0-based) epoch."""
        if self.schedule == "constant":
            return self.lr
        periods = self.restart_periods or (max(self.epochs, 1),)
        e = epoch
        for p in periods:
            if e < p:
                return self.lr_min + 0.5 * (self.lr - self.lr_min) * (1 + math.cos(math.pi * e / p))
            e -= p
        return self.lr_min

    def to_dict(self):
        d = asdict(self)
        d["restart_periods"] = list(self.restart_periods)
        return d

    @classmethod
    def from_dict(cls, d):
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown hyperparameter keys: {sorted(unknown)}")
        return cls(**d)


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    train_acc: float
    test_acc: float = float("nan")


@dataclass
class History:
    records: list = field(default_factory=list)

    def rows(self):
        return [(r.epoch, r.train_loss, r.train_acc, r.test_acc) for r in self.records]


def _check(dataset):
    if len(dataset.y) == 0:
        raise ValueError("dataset is empty")
    if len(dataset.x) != len(dataset.y):
        raise ValueError("dataset images and labels differ in length")


def evaluate(net, state, dataset, weights=None, batch_size=EVAL_BATCH):
    """Top-1 accuracy in inference mode (running batch-norm statistics)."""
    _check(dataset)
    correct = 0
    for s in range(0, len(dataset.y), batch_size):
        logits, _ = forward(net, dataset.x[s:s + batch_size], state, training=False, weights=weights)
        correct += int((logits.argmax(axis=1) == dataset.y[s:s + batch_size]).sum())
    return correct / len(dataset.y)


def train_step(net, state, x, y, opt):
    """Forward, cross-entropy, backward, AdamW. Returns ``(loss, n_correct)``."""
    logits, cache = forward(net, x, state, training=True)
    loss, dlogits = softmax_cross_entropy(logits, y)
    grads = backward(net, dlogits, cache)
    clipped = {f"{i}.weight" for i in net.weight_layers() if net.layers[i].weight_mode.quantized}
    adamw_update(state, grads, opt, clipped)
    return loss, int((logits.argmax(axis=1) == y).sum())


def train(net, dataset, hyper, seed, state=None, test=None, on_epoch=None):
    """Train until ``state.epoch == hyper.epochs``; returns ``(state, history)``.

    Each epoch shuffles with its own stream ``(seed, "train", epoch)``, so a
    run resumed from a checkpoint sees the same batches as an uninterrupted one.
    A trailing partial batch of one sample is dropped (batch-norm needs two).
    """
    _check(dataset)
    if state is None:
        state = init_state(net, streams.generator(seed, "train", "init"), hyper.lr, hyper.dtype)
    opt = hyper.optimizer()
    history = History()
    n = len(dataset.y)
    while state.epoch < hyper.epochs:
        e = state.epoch
        state.lr = hyper.lr_at(e)
        rng = streams.generator(seed, "train", e)
        order = rng.permutation(n)
        loss_sum = 0.0
        correct = 0
        seen = 0
        for s in range(0, n, hyper.batch_size):
            idx = order[s:s + hyper.batch_size]
            if idx.size < 2:
                break
            x = dataset.x[idx]
            if hyper.augment:
                x = augment_mod.augment_batch(x, rng)
            loss, c = train_step(net, state, x, dataset.y[idx], opt)
            loss_sum += loss * idx.size
            correct += c
            seen += idx.size
        state.epoch += 1
        rec = EpochRecord(state.epoch, loss_sum / seen, correct / seen)
        if test is not None:
            rec.test_acc = evaluate(net, state, test)
        history.records.append(rec)
        if on_epoch is not None:
            on_epoch(state, rec)
    return state, history
