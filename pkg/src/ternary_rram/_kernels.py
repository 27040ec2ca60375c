"""Fused encode -> sense -> decode Monte-Carlo kernels.

Two implementations share one draw layout per trial:

    slots 0-1  normal for the BL device
    slots 2-3  normal for the BLb device
    slots 4-5  normal for the multiplicative timing jitter

An exact resistance tie never resolves and reads as 0.

``*_numba`` versions are compiled with numba; ``*_numpy`` versions are the
vectorised fallback. :data:`ber_reads` and :data:`map_counts` point at the
backend chosen in :mod:`ternary_rram._accel`.
"""

import math

import numpy as np

from . import streams
from ._accel import HAVE_NUMBA, njit, prange

_CHUNK = 1 << 18

# ---------------------------------------------------------------- numba ----

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_TWO_M53 = 1.0 / 9007199254740992.0
_TWO_PI = 2.0 * math.pi


@njit(cache=True)
def _mix64(x):
    z = x + _GOLDEN
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


@njit(cache=True)
def _uniform(base, slot):
    h = _mix64(base + np.uint64(slot + 1) * _GOLDEN)
    return (float(h >> _S11) + 0.5) * _TWO_M53


@njit(cache=True)
def _normal(base, slot):
    u1 = _uniform(base, slot)
    u2 = _uniform(base, slot + 1)
    return math.sqrt(-2.0 * math.log(u1)) * math.cos(_TWO_PI * u2)


@njit(cache=True)
def _decode_one(r_bl, r_blb, k, r_on, log_inv_trip, t_reg, jit_sigma, window, base):
    lo = min(r_bl, r_blb)
    hi = max(r_bl, r_blb)
    tau_fast = (lo + r_on) * k
    tau_slow = (hi + r_on) * k
    gap = tau_slow - tau_fast
    if gap <= 0.0:
        return 0
    t = (tau_fast * log_inv_trip + t_reg * tau_slow / gap) * math.exp(jit_sigma * _normal(base, 4))
    if t > window:
        return 0
    return 1 if r_bl < r_blb else -1


@njit(parallel=True, cache=True)
def _ber_reads_numba(key, intended, start, n, lrs_med, lrs_sig, hrs_med, hrs_sig,
                     k, r_on, log_inv_trip, t_reg, jit_sigma, window):
    out = np.empty(n, dtype=np.int8)
    ukey = np.uint64(key)
    for i in prange(n):
        base = _mix64(_mix64(np.uint64(start + i)) ^ ukey)
        z_bl = _normal(base, 0)
        z_blb = _normal(base, 2)
        if intended == 1:
            r_bl = lrs_med * math.exp(lrs_sig * z_bl)
        else:
            r_bl = hrs_med * math.exp(hrs_sig * z_bl)
        if intended == -1:
            r_blb = lrs_med * math.exp(lrs_sig * z_blb)
        else:
            r_blb = hrs_med * math.exp(hrs_sig * z_blb)
        out[i] = _decode_one(r_bl, r_blb, k, r_on, log_inv_trip, t_reg, jit_sigma, window, base)
    return out


@njit(parallel=True, cache=True)
def _map_counts_numba(key, r_bl, r_blb, reads, k, r_on, log_inv_trip, t_reg, jit_sigma, window):
    npts = r_bl.shape[0]
    counts = np.zeros((npts, 3), dtype=np.int64)
    ukey = np.uint64(key)
    for p in prange(npts):
        c_minus = 0
        c_zero = 0
        c_plus = 0
        for j in range(reads):
            base = _mix64(_mix64(np.uint64(p * reads + j)) ^ ukey)
            d = _decode_one(r_bl[p], r_blb[p], k, r_on, log_inv_trip, t_reg, jit_sigma, window, base)
            if d == 1:
                c_plus += 1
            elif d == -1:
                c_minus += 1
            else:
                c_zero += 1
        counts[p, 0] = c_minus
        counts[p, 1] = c_zero
        counts[p, 2] = c_plus
    return counts


# ---------------------------------------------------------------- numpy ----


def _decode_np(r_bl, r_blb, k, r_on, log_inv_trip, t_reg, jit_sigma, window, base):
    tau_fast = (np.minimum(r_bl, r_blb) + r_on) * k
    tau_slow = (np.maximum(r_bl, r_blb) + r_on) * k
    gap = tau_slow - tau_fast
    with np.errstate(divide="ignore", invalid="ignore"):
        t = (tau_fast * log_inv_trip + t_reg * tau_slow / gap) * np.exp(jit_sigma * streams.slot_normal(base, 4))
    conv = (gap > 0) & (t <= window)
    return np.where(conv, np.where(r_bl < r_blb, 1, -1), 0).astype(np.int8)


def _ber_reads_numpy(key, intended, start, n, lrs_med, lrs_sig, hrs_med, hrs_sig,
                     k, r_on, log_inv_trip, t_reg, jit_sigma, window):
    out = np.empty(n, dtype=np.int8)
    for lo in range(0, n, _CHUNK):
        hi = min(n, lo + _CHUNK)
        base = streams.trial_base(key, np.arange(start + lo, start + hi, dtype=np.uint64))
        z_bl = streams.slot_normal(base, 0)
        z_blb = streams.slot_normal(base, 2)
        if intended == 1:
            r_bl = lrs_med * np.exp(lrs_sig * z_bl)
        else:
            r_bl = hrs_med * np.exp(hrs_sig * z_bl)
        if intended == -1:
            r_blb = lrs_med * np.exp(lrs_sig * z_blb)
        else:
            r_blb = hrs_med * np.exp(hrs_sig * z_blb)
        out[lo:hi] = _decode_np(r_bl, r_blb, k, r_on, log_inv_trip, t_reg, jit_sigma, window, base)
    return out


def _map_counts_numpy(key, r_bl, r_blb, reads, k, r_on, log_inv_trip, t_reg, jit_sigma, window):
    npts = r_bl.shape[0]
    counts = np.zeros((npts, 3), dtype=np.int64)
    per = max(1, _CHUNK // max(reads, 1))
    for p0 in range(0, npts, per):
        p1 = min(npts, p0 + per)
        pts = np.repeat(np.arange(p0, p1), reads)
        j = np.tile(np.arange(reads), p1 - p0)
        base = streams.trial_base(key, pts.astype(np.uint64) * np.uint64(reads) + j.astype(np.uint64))
        d = _decode_np(r_bl[pts], r_blb[pts], k, r_on, log_inv_trip, t_reg, jit_sigma, window, base)
        d = d.reshape(p1 - p0, reads)
        counts[p0:p1, 0] = (d == -1).sum(axis=1)
        counts[p0:p1, 1] = (d == 0).sum(axis=1)
        counts[p0:p1, 2] = (d == 1).sum(axis=1)
    return counts


if HAVE_NUMBA:
    ber_reads = _ber_reads_numba
    map_counts = _map_counts_numba
else:
    ber_reads = _ber_reads_numpy
    map_counts = _map_counts_numpy
