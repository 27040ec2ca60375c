"""Monte-Carlo characterisation of ternary read errors and sense-amplifier regions."""

from dataclasses import dataclass
import math

import numpy as np

from . import _accel, _kernels, pcsa, streams
from .device import check_ternary

ERROR_NONE, TYPE1, TYPE2, TYPE3 = "none", "type1", "type2", "type3"
WEIGHTS = (-1, 0, 1)


class NoCrossingError(ValueError):
    pass


def classify_error(intended, read):
    intended, read = check_ternary(intended), check_ternary(read)
    if intended == read:
        return ERROR_NONE
    if intended == 0:
        return TYPE3
    if read == 0:
        return TYPE2
    return TYPE1


def wilson_interval(events, trials, z=1.959963984540054):
    """95 % Wilson score interval for a binomial proportion."""
    if trials <= 0:
        return (0.0, 1.0)
    p = events / trials
    den = 1 + z * z / trials
    centre = (p + z * z / (2 * trials)) / den
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / den
    return (max(0.0, centre - half), min(1.0, centre + half))


@dataclass(frozen=True)
class Rate:
    p: float
    lo: float
    hi: float
    events: int
    trials: int

    @classmethod
    def from_counts(cls, events, trials):
        lo, hi = wilson_interval(events, trials)
        return cls(events / trials if trials else 0.0, lo, hi, int(events), int(trials))


@dataclass(frozen=True)
class ErrorRates:
    type1: Rate
    type2: Rate
    type3: Rate
    trials: int
    counts: np.ndarray  # counts[intended + 1, read + 1]

    @classmethod
    def from_counts(cls, counts):
        counts = np.asarray(counts, dtype=np.int64)
        n_pm = int(counts[0].sum() + counts[2].sum())
        n_zero = int(counts[1].sum())
        t1 = counts[0, 2] + counts[2, 0]
        t2 = counts[0, 1] + counts[2, 1]
        t3 = counts[1, 0] + counts[1, 2]
        return cls(
            Rate.from_counts(t1, n_pm),
            Rate.from_counts(t2, n_pm),
            Rate.from_counts(t3, n_zero),
            int(counts.sum()),
            counts,
        )

    def rows(self):
        """``(intended, read, count)`` records for the CSV report."""
        return [(w, r, int(self.counts[w + 1, r + 1])) for w in WEIGHTS for r in WEIGHTS]

    def summary(self):
        out = {"trials": self.trials}
        for name in (TYPE1, TYPE2, TYPE3):
            r = getattr(self, name)
            out[name] = {"rate": r.p, "ci95": [r.lo, r.hi], "events": r.events, "trials": r.trials}
        return out


def _timing_args(params, corner, window):
    s = pcsa.speed_factor(corner, params)
    return (
        params.node_capacitance / s,
        params.r_on,
        math.log(1.0 / params.v_trip_fraction),
        params.t_reg_base,
        params.jitter_log_sigma,
        window,
    )


def monte_carlo_ber(cond, params, corner, trials_per_weight, seed, window=pcsa.DEFAULT_WINDOW, threads=None):
    """Encode -> sense -> decode ``trials_per_weight`` synapses of each ternary value."""
    if trials_per_weight < 1:
        raise ValueError("trials_per_weight must be positive")
    _accel.set_threads(threads)
    key = np.uint64(streams.derive_key(seed, "ber"))
    timing = _timing_args(params, corner, window)
    counts = np.zeros((3, 3), dtype=np.int64)
    for wi, w in enumerate(WEIGHTS):
        reads = _kernels.ber_reads(
            key, w, wi * trials_per_weight, trials_per_weight,
            cond.lrs_median, cond.lrs_log_sigma, cond.hrs_median, cond.hrs_log_sigma, *timing,
        )
        counts[wi] = np.bincount(reads.astype(np.int64) + 1, minlength=3)
    return ErrorRates.from_counts(counts)


@dataclass(frozen=True)
class SenseMap:
    r_bl: np.ndarray
    r_blb: np.ndarray
    counts: np.ndarray  # (len(r_bl), len(r_blb), 3): reads decoded as -1, 0, +1
    reads: int

    def fraction(self, value):
        return self.counts[..., value + 1] / self.reads

    def convergence(self):
        return (self.counts[..., 0] + self.counts[..., 2]) / self.reads

    def regions(self):
        """Per point: "+1", "-1", "0" when every read agrees, else "mixed"."""
        out = np.full(self.counts.shape[:2], "mixed", dtype=object)
        out[self.counts[..., 2] == self.reads] = "+1"
        out[self.counts[..., 0] == self.reads] = "-1"
        out[self.counts[..., 1] == self.reads] = "0"
        return out

    def rows(self):
        reg = self.regions()
        for i, rb in enumerate(self.r_bl):
            for j, rbb in enumerate(self.r_blb):
                c = self.counts[i, j]
                yield (float(rb), float(rbb), int(c[2]), int(c[0]), int(c[1]), reg[i, j])


def sense_map(r_values, reads_per_point, params, corner, seed, window=pcsa.DEFAULT_WINDOW,
              r_blb_values=None, threads=None):
    """Decode ``reads_per_point`` senses for each ``(r_bl, r_blb)`` on the grid."""
    r_bl = np.asarray(r_values, dtype=np.float64)
    r_blb = r_bl if r_blb_values is None else np.asarray(r_blb_values, dtype=np.float64)
    for arr in (r_bl, r_blb):
        if arr.ndim != 1 or arr.size == 0 or (arr <= 0).any() or (np.diff(arr) <= 0).any():
            raise ValueError("resistance grid must be positive and strictly increasing")
    _accel.set_threads(threads)
    key = np.uint64(streams.derive_key(seed, "sense-map"))
    g_bl, g_blb = np.meshgrid(r_bl, r_blb, indexing="ij")
    counts = _kernels.map_counts(
        key, np.ascontiguousarray(g_bl.ravel()), np.ascontiguousarray(g_blb.ravel()),
        int(reads_per_point), *_timing_args(params, corner, window),
    )
    return SenseMap(r_bl, r_blb, counts.reshape(r_bl.size, r_blb.size, 3), int(reads_per_point))


def extract_boundary(smap, opposing=100e3):
    """BL resistance where convergence probability crosses 50 % with BLb fixed at ``opposing``.

    Uses the BLb column nearest to ``opposing`` (in log distance) and
    interpolates linearly in log-resistance between the bracketing points.
    """
    j = int(np.argmin(np.abs(np.log(smap.r_blb / opposing))))
    p = smap.convergence()[:, j]
    x = np.log(smap.r_bl)
    if p[0] < 0.5:
        raise NoCrossingError("no crossing: convergence below 50 % already at the lowest resistance")
    below = np.nonzero(p < 0.5)[0]
    if below.size == 0:
        raise NoCrossingError("no crossing: every point converges in at least 50 % of reads")
    i = int(below[0]) - 1
    frac = (p[i] - 0.5) / (p[i] - p[i + 1])
    return float(math.exp(x[i] + frac * (x[i + 1] - x[i])))


def pvt_sweep(corners, params, seed, r_values=None, reads_per_point=200, opposing=100e3,
              window=pcsa.DEFAULT_WINDOW, threads=None):
    """Boundary per operating corner; all corners share one random stream."""
    corners = list(corners)
    if len(corners) < 2:
        raise ValueError("a PVT sweep needs at least two corners")
    if r_values is None:
        r_values = np.geomspace(1e3, 1e6, 61)
    out = []
    for c in corners:
        smap = sense_map(r_values, reads_per_point, params, c, seed, window, r_blb_values=[opposing], threads=threads)
        out.append((c, extract_boundary(smap, opposing)))
    return out
