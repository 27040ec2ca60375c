"""Layer specs, network state, forward pass with quantized weights, and backpropagation."""

from dataclasses import dataclass, field
import math

import numpy as np

from . import layers
from .quant import QuantMode

KINDS = ("dense", "conv", "maxpool", "batchnorm")
BN_EPSILON = 1e-5
BN_MOMENTUM = 0.1


@dataclass(frozen=True)
class LayerSpec:
    """One layer. ``fan_in``/``fan_out`` are features (dense) or channels (conv, batchnorm).

    ``activation`` quantizes this layer's output; ``None`` leaves it linear.
    """

    kind: str
    fan_in: int = 0
    fan_out: int = 0
    weight_mode: QuantMode = None
    activation: QuantMode = None
    kernel: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"layer kind must be one of {KINDS}, got {self.kind!r}")
        object.__setattr__(self, "weight_mode", QuantMode.parse(self.weight_mode))
        object.__setattr__(self, "activation", QuantMode.parse(self.activation))
        if self.kind in ("dense", "conv"):
            if self.fan_in < 1 or self.fan_out < 1:
                raise ValueError(f"{self.kind} layer needs positive fan_in and fan_out")
            if self.weight_mode is None:
                raise ValueError(f"{self.kind} layer needs a weight_mode")
        if self.kind == "conv" and not self.kernel:
            object.__setattr__(self, "kernel", 3)
        if self.kind == "maxpool" and not self.kernel:
            object.__setattr__(self, "kernel", 2)
        if self.kind == "batchnorm" and self.fan_in < 1:
            raise ValueError("batchnorm layer needs a positive feature count")

    @property
    def has_weight(self):
        return self.kind in ("dense", "conv")

    def weight_shape(self):
        if self.kind == "dense":
            return (self.fan_out, self.fan_in)
        if self.kind == "conv":
            return (self.fan_out, self.fan_in, self.kernel, self.kernel)
        return None

    def to_dict(self):
        d = {"kind": self.kind}
        if self.kind != "maxpool":
            d["fan_in"] = self.fan_in
        if self.has_weight:
            d["fan_out"] = self.fan_out
            d["weight_mode"] = self.weight_mode.to_dict()
        if self.kind in ("conv", "maxpool"):
            d["kernel"] = self.kernel
        if self.activation is not None:
            d["activation"] = self.activation.to_dict()
        return d

    @classmethod
    def from_dict(cls, d):
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown layer keys: {sorted(unknown)}")
        return cls(**d)


@dataclass(frozen=True)
class Network:
    layers: tuple

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        if not self.layers:
            raise ValueError("network has no layers")
        if self.layers[-1].activation is not None:
            raise ValueError("the last layer must not quantize its output")

    @property
    def weight_kind(self):
        """Common weight quantization kind, or ``"mixed"``."""
        kinds = {l.weight_mode.kind for l in self.layers if l.has_weight}
        return kinds.pop() if len(kinds) == 1 else "mixed"

    def weight_layers(self):
        return [i for i, l in enumerate(self.layers) if l.has_weight]

    def to_dict(self):
        return {"layers": [l.to_dict() for l in self.layers]}

    @classmethod
    def from_dict(cls, d):
        unknown = set(d) - {"layers"}
        if unknown:
            raise ValueError(f"unknown network keys: {sorted(unknown)}")
        return cls(tuple(LayerSpec.from_dict(l) for l in d["layers"]))


@dataclass
class TrainerState:
    """Hidden weights, batch-norm parameters and buffers, Adam moments and counters."""

    params: dict
    buffers: dict
    m: dict
    v: dict
    lr: float
    step: int = 0
    epoch: int = 0
    bn_epsilon: float = BN_EPSILON
    dtype: str = "float32"
    extra: dict = field(default_factory=dict)

    def copy(self):
        c = lambda d: {k: a.copy() for k, a in d.items()}
        return TrainerState(c(self.params), c(self.buffers), c(self.m), c(self.v), self.lr,
                            self.step, self.epoch, self.bn_epsilon, self.dtype, dict(self.extra))


def init_state(net, rng, lr=0.01, dtype="float32", bn_epsilon=BN_EPSILON):
    """Glorot-uniform hidden weights (clipped to [-1, 1]), gamma = 1, beta = 0."""
    dt = np.dtype(dtype)
    params, buffers = {}, {}
    for i, l in enumerate(net.layers):
        if l.has_weight:
            shape = l.weight_shape()
            rf = int(np.prod(shape[2:])) if len(shape) > 2 else 1
            limit = math.sqrt(6.0 / ((l.fan_in + l.fan_out) * rf))
            w = rng.uniform(-limit, limit, size=shape)
            if l.weight_mode.quantized:
                w = np.clip(w, -1, 1)
            params[f"{i}.weight"] = w.astype(dt)
        elif l.kind == "batchnorm":
            params[f"{i}.gamma"] = np.ones(l.fan_in, dt)
            params[f"{i}.beta"] = np.zeros(l.fan_in, dt)
            buffers[f"{i}.running_mean"] = np.zeros(l.fan_in, dt)
            buffers[f"{i}.running_var"] = np.ones(l.fan_in, dt)
    zeros = {k: np.zeros_like(a) for k, a in params.items()}
    return TrainerState(params, buffers, zeros, {k: a.copy() for k, a in zeros.items()},
                        float(lr), dtype=dt.name, bn_epsilon=bn_epsilon)


def quantized_weights(net, state):
    """W^Q = Quantize(W^h) for every weighted layer, keyed like ``state.params``."""
    return {f"{i}.weight": net.layers[i].weight_mode.weights(state.params[f"{i}.weight"])
            for i in net.weight_layers()}


def forward(net, x, state, training=False, weights=None):
    """Run the network; ``weights`` overrides W^Q (used for fault injection).

    The input is never quantized. Returns ``(logits, cache)``.
    """
    wq = quantized_weights(net, state) if weights is None else weights
    a = np.asarray(x, dtype=state.dtype)
    cache = []
    for i, l in enumerate(net.layers):
        if l.kind == "dense":
            z, c = layers.dense_forward(a, wq[f"{i}.weight"])
        elif l.kind == "conv":
            z, c = layers.conv_forward(a, wq[f"{i}.weight"])
        elif l.kind == "maxpool":
            z, c = layers.maxpool_forward(a, l.kernel)
        else:
            if a.shape[1] != l.fan_in:
                raise ValueError(f"batchnorm layer {i} expects {l.fan_in} features, got {a.shape[1]}")
            running = (state.buffers[f"{i}.running_mean"], state.buffers[f"{i}.running_var"])
            z, c = layers.batchnorm_forward(
                a, state.params[f"{i}.gamma"], state.params[f"{i}.beta"], state.bn_epsilon,
                running=running, training=training, momentum=BN_MOMENTUM,
            )
        a = z if l.activation is None else l.activation.activation(z)
        cache.append((c, z))
    return a, cache


def backward(net, dlogits, cache):
    """Gradients of the cost for every entry of ``state.params``.

    Weight gradients are taken w.r.t. W^Q and are meant to be applied to W^h.
    """
    grads = {}
    g = dlogits
    for i in range(len(net.layers) - 1, -1, -1):
        l = net.layers[i]
        c, z = cache[i]
        if l.activation is not None:
            g = l.activation.activation_grad(g, z)
        if l.kind == "dense":
            g, grads[f"{i}.weight"] = layers.dense_backward(g, c)
        elif l.kind == "conv":
            g, grads[f"{i}.weight"] = layers.conv_backward(g, c)
        elif l.kind == "maxpool":
            g = layers.maxpool_backward(g, c)
        else:
            g, grads[f"{i}.gamma"], grads[f"{i}.beta"] = layers.batchnorm_backward(g, c)
    return grads


def mlp(sizes, weight_mode="ternary", activation=None):
    """Dense -> batchnorm -> activation blocks; the output block stays linear.

    ``activation`` defaults to ``weight_mode`` (real weights use ReLU).
    """
    if len(sizes) < 2:
        raise ValueError("an MLP needs at least input and output sizes")
    wm = QuantMode.parse(weight_mode)
    am = wm if activation is None else QuantMode.parse(activation)
    out = []
    n = len(sizes) - 1
    for k in range(n):
        last = k == n - 1
        out.append(LayerSpec("dense", sizes[k], sizes[k + 1], weight_mode=wm))
        out.append(LayerSpec("batchnorm", sizes[k + 1], activation=None if last else am))
    return Network(tuple(out))


def vgg(n_filters=128, weight_mode="ternary", activation=None, in_channels=3, image_size=32,
        hidden=512, classes=10):
    """Six 3x3 conv layers (N, N, 2N, 2N, 4N, 4N), max-pool every two, one hidden dense layer."""
    wm = QuantMode.parse(weight_mode)
    am = wm if activation is None else QuantMode.parse(activation)
    out = []
    c = in_channels
    size = image_size
    for k, width in enumerate((n_filters, n_filters, 2 * n_filters, 2 * n_filters, 4 * n_filters, 4 * n_filters)):
        out.append(LayerSpec("conv", c, width, weight_mode=wm))
        if k % 2 == 1:
            out.append(LayerSpec("maxpool"))
            size //= 2
        out.append(LayerSpec("batchnorm", width, activation=am))
        c = width
    flat = c * size * size
    out.append(LayerSpec("dense", flat, hidden, weight_mode=wm))
    out.append(LayerSpec("batchnorm", hidden, activation=am))
    out.append(LayerSpec("dense", hidden, classes, weight_mode=wm))
    out.append(LayerSpec("batchnorm", classes))
    return Network(tuple(out))
