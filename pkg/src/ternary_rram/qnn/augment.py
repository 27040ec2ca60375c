"""Random flips, shifted crops and small rotations for colour image batches (N, C, H, W)."""

import numpy as np
from scipy import ndimage


def augment_batch(x, rng, pad=4, max_degrees=10.0):
    x = np.asarray(x)
    if x.ndim != 4:
        raise ValueError("augmentation expects (N, C, H, W) images")
    n, _, h, w = x.shape
    out = np.empty_like(x)
    flips = rng.random(n) < 0.5
    dy = rng.integers(-pad, pad + 1, n)
    dx = rng.integers(-pad, pad + 1, n)
    angles = rng.uniform(-max_degrees, max_degrees, n)
    padded = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    for k in range(n):
        img = padded[k, :, pad + dy[k]:pad + dy[k] + h, pad + dx[k]:pad + dx[k] + w]
        if flips[k]:
            img = img[:, :, ::-1]
        out[k] = ndimage.rotate(img, angles[k], axes=(1, 2), reshape=False, order=1, mode="nearest")
    return out
