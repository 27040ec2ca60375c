"""Quantized (binary / ternary) neural-network engine."""

from .network import LayerSpec, Network, TrainerState, backward, forward, init_state, mlp, quantized_weights, vgg
from .optim import AdamW, adamw_update
from .quant import QuantMode, gxnor, neuron_activation, sign_quantize, ste_backward, ternary_quantize, xnor
from .train import History, Hyper, evaluate, train

__all__ = [
    "AdamW", "History", "Hyper", "LayerSpec", "Network", "QuantMode", "TrainerState",
    "adamw_update", "backward", "evaluate", "forward", "gxnor", "init_state", "mlp",
    "neuron_activation", "quantized_weights", "sign_quantize", "ste_backward",
    "ternary_quantize", "train", "vgg", "xnor",
]
