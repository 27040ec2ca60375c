"""AdamW with decoupled weight decay and hidden-weight clipping."""

from dataclasses import asdict, dataclass

import numpy as np


@dataclass(frozen=True)
class AdamW:
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 0.0
    clip: float = 1.0  # hidden weights of quantized layers live in [-clip, clip]

    def __post_init__(self):
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ValueError("Adam betas must be in [0, 1)")
        if self.eps <= 0 or self.weight_decay < 0 or self.clip <= 0:
            raise ValueError("eps and clip must be positive, weight_decay >= 0")

    def to_dict(self):
        return asdict(self)


def adamw_update(state, grads, opt, clipped=()):
    """One in-place AdamW step on ``state``.

    Decay applies only to weight tensors (names ending in ``.weight``) and is
    decoupled: ``w <- (1 - lr * wd) * w - lr * m_hat / (sqrt(v_hat) + eps)``.
    Names in ``clipped`` are then clipped to ``[-opt.clip, opt.clip]``.
    """
    if state.step < 0:
        raise ValueError("optimizer step must be >= 0")
    state.step += 1
    t = state.step
    bc1 = 1 - opt.beta1 ** t
    bc2 = 1 - opt.beta2 ** t
    lr = state.lr
    for name, p in state.params.items():
        g = grads.get(name)
        m, v = state.m[name], state.v[name]
        if g is None:
            g = np.zeros_like(p)
        m *= opt.beta1
        m += (1 - opt.beta1) * g
        v *= opt.beta2
        v += (1 - opt.beta2) * (g * g)
        if opt.weight_decay and name.endswith(".weight"):
            p *= 1 - lr * opt.weight_decay
        p -= (lr * (m / bc1) / (np.sqrt(v / bc2) + opt.eps)).astype(p.dtype)
        if name in clipped:
            np.clip(p, -opt.clip, opt.clip, out=p)
    return state
