"""Forward/backward kernels for the layer kinds (NCHW layout, bias-free)."""

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


def dense_forward(x, w):
    x2 = x.reshape(x.shape[0], -1)
    if x2.shape[1] != w.shape[1]:
        raise ValueError(f"dense layer expects {w.shape[1]} inputs, got {x2.shape[1]}")
    return x2 @ w.T, (x2, w, x.shape)


def dense_backward(g, cache):
    x2, w, shape = cache
    return (g @ w).reshape(shape), g.T @ x2


def _im2col(x, k):
    n, c, h, wd = x.shape
    p = k // 2
    xp = np.pad(x, ((0, 0), (0, 0), (p, p), (p, p)))
    win = sliding_window_view(xp, (k, k), axis=(2, 3))  # n, c, h, w, k, k
    return win.transpose(0, 2, 3, 1, 4, 5).reshape(n * h * wd, c * k * k)


def conv_forward(x, w):
    """Stride-1 'same' convolution with an odd square kernel."""
    if x.ndim != 4 or x.shape[1] != w.shape[1]:
        raise ValueError(f"conv layer expects (N, {w.shape[1]}, H, W) input, got {x.shape}")
    n, _, h, wd = x.shape
    out_c, _, k, _ = w.shape
    cols = _im2col(x, k)
    z = cols @ w.reshape(out_c, -1).T
    return z.reshape(n, h, wd, out_c).transpose(0, 3, 1, 2), (cols, w, x.shape)


def conv_backward(g, cache):
    cols, w, shape = cache
    n, c, h, wd = shape
    out_c, _, k, _ = w.shape
    g2 = g.transpose(0, 2, 3, 1).reshape(-1, out_c)
    dw = (g2.T @ cols).reshape(w.shape)
    dcols = (g2 @ w.reshape(out_c, -1)).reshape(n, h, wd, c, k, k)
    p = k // 2
    dxp = np.zeros((n, c, h + 2 * p, wd + 2 * p), dtype=g.dtype)
    for i in range(k):
        for j in range(k):
            dxp[:, :, i:i + h, j:j + wd] += dcols[:, :, :, :, i, j].transpose(0, 3, 1, 2)
    return dxp[:, :, p:p + h, p:p + wd], dw


def maxpool_forward(x, k=2):
    n, c, h, wd = x.shape
    if h % k or wd % k:
        raise ValueError(f"max-pool of {k} needs spatial size divisible by {k}, got {h}x{wd}")
    win = x.reshape(n, c, h // k, k, wd // k, k).transpose(0, 1, 2, 4, 3, 5).reshape(n, c, h // k, wd // k, k * k)
    idx = win.argmax(axis=-1)
    out = np.take_along_axis(win, idx[..., None], axis=-1)[..., 0]
    return out, (idx, x.shape, k)


def maxpool_backward(g, cache):
    idx, shape, k = cache
    n, c, h, wd = shape
    win = np.zeros(idx.shape + (k * k,), dtype=g.dtype)
    np.put_along_axis(win, idx[..., None], g[..., None], axis=-1)
    dx = win.reshape(n, c, h // k, wd // k, k, k).transpose(0, 1, 2, 4, 3, 5).reshape(shape)
    return dx


def _bn_axes(x):
    return (0,) if x.ndim == 2 else (0, 2, 3)


def _bn_shape(x):
    return (1, -1) if x.ndim == 2 else (1, -1, 1, 1)


def batchnorm_forward(x, gamma, beta, eps, running=None, training=True, momentum=0.1):
    """Per-feature (2-D) or per-channel (4-D) normalisation.

    In training mode the batch statistics are used and ``running`` (a
    ``(mean, var)`` pair of arrays) is updated in place; otherwise the running
    statistics are used.
    """
    axes = _bn_axes(x)
    shp = _bn_shape(x)
    if training:
        if x.shape[0] < 2:
            raise ValueError("batch normalisation in training mode needs a batch of at least 2")
        mean = x.mean(axis=axes)
        var = x.var(axis=axes)
        if running is not None:
            m = x.size // mean.size
            running[0][...] = (1 - momentum) * running[0] + momentum * mean
            running[1][...] = (1 - momentum) * running[1] + momentum * var * m / max(m - 1, 1)
    else:
        mean, var = running
    inv = 1.0 / np.sqrt(var + eps)
    xhat = (x - mean.reshape(shp)) * inv.reshape(shp)
    y = gamma.reshape(shp) * xhat + beta.reshape(shp)
    return y, (xhat, inv, gamma, training)


def batchnorm_backward(g, cache):
    xhat, inv, gamma, training = cache
    axes = _bn_axes(g)
    shp = _bn_shape(g)
    dgamma = (g * xhat).sum(axis=axes)
    dbeta = g.sum(axis=axes)
    dxhat = g * gamma.reshape(shp)
    if not training:
        return dxhat * inv.reshape(shp), dgamma, dbeta
    m = g.size // gamma.size
    dx = (inv.reshape(shp) / m) * (
        m * dxhat
        - dxhat.sum(axis=axes).reshape(shp)
        - xhat * (dxhat * xhat).sum(axis=axes).reshape(shp)
    )
    return dx, dgamma, dbeta


def softmax_cross_entropy(logits, labels):
    """Mean cross-entropy over the batch and its gradient w.r.t. the logits."""
    z = logits - logits.max(axis=1, keepdims=True)
    logp = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
    n = logits.shape[0]
    loss = -logp[np.arange(n), labels].mean()
    grad = np.exp(logp)
    grad[np.arange(n), labels] -= 1
    return float(loss), (grad / n).astype(logits.dtype)
