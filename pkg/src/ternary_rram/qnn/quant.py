"""Binary / ternary quantisers, XNOR and GXNOR gates, straight-through estimator."""

from dataclasses import dataclass

import numpy as np

DEFAULT_DELTA = 5e-2
KINDS = ("binary", "ternary", "real")


@dataclass(frozen=True)
class QuantMode:
    kind: str
    delta: float = DEFAULT_DELTA

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"quantisation kind must be one of {KINDS}, got {self.kind!r}")
        if self.kind == "ternary" and not self.delta >= 0:
            raise ValueError("ternary threshold delta must be >= 0")

    @classmethod
    def parse(cls, value, delta=DEFAULT_DELTA):
        """Accept a QuantMode, ``"ternary"``, ``"ternary:0.05"`` or a dict."""
        if value is None or isinstance(value, cls):
            return value
        if isinstance(value, dict):
            return cls(value["kind"], float(value.get("delta", delta)))
        kind, _, d = str(value).partition(":")
        return cls(kind, float(d) if d else delta)

    @property
    def quantized(self):
        return self.kind != "real"

    def weights(self, w):
        """Quantise hidden weights (real mode returns them unchanged)."""
        if self.kind == "binary":
            return sign_quantize(w)
        if self.kind == "ternary":
            return ternary_quantize(w, self.delta)
        return w

    def activation(self, x):
        """Quantise an activation; real mode is a ReLU."""
        if self.kind == "binary":
            return sign_quantize(x)
        if self.kind == "ternary":
            return ternary_quantize(x, self.delta)
        return np.maximum(x, 0)

    def activation_grad(self, upstream, pre):
        if self.kind == "real":
            return upstream * (pre > 0)
        return ste_backward(upstream, pre)

    def to_dict(self):
        return {"kind": self.kind, "delta": self.delta} if self.kind == "ternary" else {"kind": self.kind}


def sign_quantize(x):
    """+1 where x >= 0, -1 elsewhere (sign(0) = +1)."""
    x = np.asarray(x)
    dtype = x.dtype if x.dtype.kind == "f" else np.float32
    return np.where(x >= 0, 1, -1).astype(dtype)


def ternary_quantize(x, delta=DEFAULT_DELTA):
    """+1 above ``delta``, -1 below ``-delta``, 0 in between (both bounds strict)."""
    if delta < 0:
        raise ValueError("delta must be >= 0")
    x = np.asarray(x)
    dtype = x.dtype if x.dtype.kind == "f" else np.float32
    return ((x > delta).astype(dtype) - (x < -delta).astype(dtype))


def _check(values, allowed, what):
    v = np.asarray(values)
    if not np.isin(v, allowed).all():
        raise ValueError(f"{what} inputs must be in {allowed}")
    return v


def xnor(w, x):
    """Binary XNOR on {-1, +1}: +1 when the operands agree."""
    w = _check(w, (-1, 1), "XNOR")
    x = _check(x, (-1, 1), "XNOR")
    return np.where(w == x, 1, -1)


def gxnor(w, x):
    """Gated XNOR on {-1, 0, +1}: 0 if either operand is 0, else XNOR."""
    w = _check(w, (-1, 0, 1), "GXNOR")
    x = _check(x, (-1, 0, 1), "GXNOR")
    return np.where((w == 0) | (x == 0), 0, np.where(w == x, 1, -1))


def neuron_activation(weights, inputs, threshold, mode):
    """Single neuron: ``sign(sum XNOR - T)`` or ``phi(sum GXNOR - T)``."""
    mode = QuantMode.parse(mode)
    if np.shape(weights) != np.shape(inputs):
        raise ValueError("weights and inputs must have the same shape")
    if mode.kind == "binary":
        acc = int(np.sum(xnor(weights, inputs))) - threshold
        return int(sign_quantize(acc))
    if mode.kind == "ternary":
        acc = int(np.sum(gxnor(weights, inputs))) - threshold
        return int(ternary_quantize(acc, mode.delta))
    raise ValueError("neuron_activation needs a binary or ternary mode")


def ste_backward(upstream, pre_activation):
    """Hardtanh straight-through estimator: pass the gradient where |x| <= 1."""
    upstream = np.asarray(upstream)
    pre_activation = np.asarray(pre_activation)
    if upstream.shape != pre_activation.shape:
        raise ValueError("gradient and pre-activation shapes differ")
    return upstream * (np.abs(pre_activation) <= 1)
