"""Seed derivation and counter-based per-trial random numbers.

Every random draw in a Monte-Carlo run is a pure function of
``(key, trial_index, slot)``, so the result of a run does not depend on how
the trials are split across threads or chunks.
"""

import zlib

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_TWO_M53 = 1.0 / 9007199254740992.0


def _path_ints(path):
    out = []
    for p in path:
        if isinstance(p, str):
            out.append(zlib.crc32(p.encode("utf-8")))
        else:
            out.append(int(p))
    return tuple(out)


def seed_sequence(master_seed, *path):
    """SeedSequence for a named sub-stream, e.g. ``seed_sequence(7, "ber", 0)``."""
    return np.random.SeedSequence(int(master_seed), spawn_key=_path_ints(path))


def generator(master_seed, *path):
    """Independent numpy Generator for a hierarchical stream path."""
    return np.random.default_rng(seed_sequence(master_seed, *path))


def derive_key(master_seed, *path):
    """64-bit key feeding the counter-based kernels."""
    return int(seed_sequence(master_seed, *path).generate_state(1, np.uint64)[0])


def mix64(x):
    """splitmix64 finaliser on a uint64 array (wrapping arithmetic)."""
    x = np.asarray(x, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = x + _GOLDEN
        z = (z ^ (z >> np.uint64(30))) * _M1
        z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def trial_base(key, trials):
    """Per-trial hash state; slots are derived from it with :func:`slot_uniform`."""
    trials = np.asarray(trials, dtype=np.uint64)
    return mix64(mix64(trials) ^ np.uint64(key))


def slot_uniform(base, slot):
    """Uniform draw in the open interval (0, 1) for one slot of each trial."""
    step = np.uint64(((slot + 1) * 0x9E3779B97F4A7C15) & 0xFFFFFFFFFFFFFFFF)
    with np.errstate(over="ignore"):
        h = mix64(base + step)
    return ((h >> np.uint64(11)).astype(np.float64) + 0.5) * _TWO_M53


def slot_normal(base, slot):
    """Standard normal from slots ``slot`` and ``slot + 1`` (Box-Muller)."""
    u1 = slot_uniform(base, slot)
    u2 = slot_uniform(base, slot + 1)
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)
