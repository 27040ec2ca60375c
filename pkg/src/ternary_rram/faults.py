"""Type 1/2/3 weight-error injection at inference and accuracy-degradation sweeps."""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
import math

import numpy as np

from . import streams
from .qnn.network import forward, quantized_weights

EVAL_BATCH = 128


@dataclass(frozen=True)
class ErrorSpec:
    p1: float = 0.0  # +-1 -> -+1
    p2: float = 0.0  # +-1 -> 0
    p3: float = 0.0  # 0 -> +-1, fair-coin sign

    def __post_init__(self):
        for name in ("p1", "p2", "p3"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and 0 <= v <= 1):
                raise ValueError(f"{name} must be a probability in [0, 1], got {v!r}")
        if self.p1 + self.p2 > 1:
            raise ValueError("p1 + p2 must not exceed 1 (both act on the same +-1 weights)")

    @classmethod
    def single(cls, error_type, rate):
        if error_type not in (1, 2, 3):
            raise ValueError(f"error type must be 1, 2 or 3, got {error_type!r}")
        return cls(**{f"p{error_type}": float(rate)})

    @property
    def clean(self):
        return self.p1 == self.p2 == self.p3 == 0

    def to_dict(self):
        return asdict(self)


def _inject_one(w, spec, rng):
    w = np.asarray(w)
    if w.size and not np.isin(w, (-1, 0, 1)).all():
        raise ValueError("injection needs quantized weights in {-1, 0, +1}")
    u = rng.random(w.shape)
    coin = rng.random(w.shape) < 0.5
    nz = w != 0
    out = w.copy()
    out[nz & (u < spec.p1)] *= -1
    out[nz & (u >= spec.p1) & (u < spec.p1 + spec.p2)] = 0
    flip0 = ~nz & (u < spec.p3)
    out[flip0] = np.where(coin[flip0], 1, -1)
    return out


def inject(weights, spec, rng, binary=False):
    """Corrupted copy of a ternary tensor or of a ``{name: tensor}`` dict.

    With ``binary=True`` only Type 1 errors are defined.
    """
    if binary and (spec.p2 > 0 or spec.p3 > 0):
        raise ValueError("binary networks only admit Type 1 errors (p2 = p3 = 0)")
    if isinstance(weights, dict):
        return {k: _inject_one(weights[k], spec, rng) for k in sorted(weights)}
    return _inject_one(weights, spec, rng)


def _check_net(net, spec):
    kind = net.weight_kind
    if kind not in ("binary", "ternary"):
        raise ValueError(f"fault injection needs a binary or ternary network, got {kind!r} weights")
    if kind == "binary" and (spec.p2 > 0 or spec.p3 > 0):
        raise ValueError("binary networks only admit Type 1 errors (p2 = p3 = 0)")
    return kind == "binary"


def _pass_accuracy(net, state, wq, spec, dataset, seed, k, per_batch, batch_size, binary):
    correct = 0
    rng = None if per_batch else streams.generator(seed, "inject", k)
    w = wq
    if not per_batch and not spec.clean:
        w = inject(wq, spec, rng, binary)
    for b, s in enumerate(range(0, len(dataset.y), batch_size)):
        if per_batch and not spec.clean:
            w = inject(wq, spec, streams.generator(seed, "inject", k, b), binary)
        logits, _ = forward(net, dataset.x[s:s + batch_size], state, training=False, weights=w)
        correct += int((logits.argmax(axis=1) == dataset.y[s:s + batch_size]).sum())
    return correct / len(dataset.y)


def eval_under_errors(net, state, spec, dataset, n_passes=5, seed=0, per_batch=True,
                      batch_size=EVAL_BATCH, threads=1):
    """Mean and sample std of test accuracy over ``n_passes`` corrupted passes.

    Errors are redrawn for every mini-batch from stream ``(seed, "inject", pass, batch)``
    or, with ``per_batch=False``, once per pass from ``(seed, "inject", pass)``.
    Passes may run on ``threads`` workers; results do not depend on it.
    """
    if n_passes < 1:
        raise ValueError("n_passes must be >= 1")
    if len(dataset.y) == 0:
        raise ValueError("dataset is empty")
    binary = _check_net(net, spec)
    wq = quantized_weights(net, state)
    run = lambda k: _pass_accuracy(net, state, wq, spec, dataset, seed, k, per_batch, batch_size, binary)
    if threads and threads > 1 and n_passes > 1:
        with ThreadPoolExecutor(min(threads, n_passes)) as ex:
            accs = list(ex.map(run, range(n_passes)))
    else:
        accs = [run(k) for k in range(n_passes)]
    accs = np.array(accs)
    std = float(accs.std(ddof=1)) if n_passes > 1 else 0.0
    return float(accs.mean()), std, accs


@dataclass(frozen=True)
class CurvePoint:
    error_type: int
    rate: float
    mean_acc: float
    std_acc: float
    n_passes: int

    def row(self):
        return (self.error_type, self.rate, self.mean_acc, self.std_acc, self.n_passes)


def sweep(net, state, error_type, rates, dataset, seed=0, n_passes=5, per_batch=True, threads=1):
    """Accuracy-vs-rate curve for one error type, the other two held at zero."""
    rates = [float(r) for r in rates]
    if any(b < a for a, b in zip(rates, rates[1:])):
        raise ValueError("rates must be sorted ascending")
    out = []
    for r in rates:
        spec = ErrorSpec.single(error_type, r)
        mean, std, _ = eval_under_errors(net, state, spec, dataset, n_passes, seed, per_batch, threads=threads)
        out.append(CurvePoint(error_type, r, mean, std, n_passes))
    return out
