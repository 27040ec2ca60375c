"""RRAM programming model: log-normal LRS/HRS draws and differential weight coding."""

from dataclasses import asdict, dataclass, replace
import math

import numpy as np

TERNARY_VALUES = (-1, 0, 1)

# LRS/HRS classification midpoint: geometric mean of the 10 kOhm / 100 kOhm targets.
LRS_HRS_MIDPOINT = math.sqrt(10e3 * 100e3)


def check_ternary(w):
    """Return ``w`` as an int after checking it is one of -1, 0, +1."""
    if isinstance(w, (bool, np.bool_)) or int(w) != w or int(w) not in TERNARY_VALUES:
        raise ValueError(f"ternary weight must be -1, 0 or +1, got {w!r}")
    return int(w)


@dataclass(frozen=True)
class ProgrammingCondition:
    set_compliance: float  # A
    reset_voltage: float  # V
    pulse_width: float  # s
    lrs_median: float  # ohm
    lrs_log_sigma: float
    hrs_median: float  # ohm
    hrs_log_sigma: float

    def __post_init__(self):
        for name in ("set_compliance", "reset_voltage", "pulse_width", "lrs_median", "hrs_median"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be positive and finite, got {v!r}")
        for name in ("lrs_log_sigma", "hrs_log_sigma"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise ValueError(f"{name} must be >= 0, got {v!r}")
        if not self.lrs_median < self.hrs_median:
            raise ValueError("lrs_median must be below hrs_median")
        if self.lrs_log_sigma > self.hrs_log_sigma:
            raise ValueError("LRS distribution must not be broader than HRS")

    def noiseless(self):
        """Same medians with both spreads set to zero."""
        return replace(self, lrs_log_sigma=0.0, hrs_log_sigma=0.0)

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown programming-condition keys: {sorted(unknown)}")
        return cls(**{k: float(v) for k, v in d.items()})


@dataclass(frozen=True)
class ResistancePair:
    r_bl: float
    r_blb: float

    def __post_init__(self):
        for name in ("r_bl", "r_blb"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be positive and finite, got {v!r}")


def preset_strong():
    """100 us programming pulses.

    HRS median fit with ``scripts/calibrate_presets.py`` so that zero weights
    read as +-1 in 6.5 % of senses with the default PCSA parameters.
    """
    return ProgrammingCondition(
        set_compliance=200e-6,
        reset_voltage=2.5,
        pulse_width=100e-6,
        lrs_median=6.0e3,
        lrs_log_sigma=0.15,
        hrs_median=126.2e3,
        hrs_log_sigma=0.70,
    )


def preset_weak():
    """1 us programming pulses: lower HRS, 18.5 % zero-weight read errors."""
    return ProgrammingCondition(
        set_compliance=200e-6,
        reset_voltage=2.5,
        pulse_width=1e-6,
        lrs_median=6.0e3,
        lrs_log_sigma=0.15,
        hrs_median=64.8e3,
        hrs_log_sigma=0.55,
    )


PRESETS = {"strong": preset_strong, "weak": preset_weak}


def get_preset(name):
    try:
        return PRESETS[name]()
    except KeyError:
        raise ValueError(f"unknown device preset {name!r}; choose from {sorted(PRESETS)}") from None


def sample_lrs(cond, rng, size=None):
    return cond.lrs_median * np.exp(cond.lrs_log_sigma * rng.standard_normal(size))


def sample_hrs(cond, rng, size=None):
    return cond.hrs_median * np.exp(cond.hrs_log_sigma * rng.standard_normal(size))


def lognormal_cdf(r, median, log_sigma):
    """P(R <= r) for the log-normal law used by the samplers."""
    r = np.asarray(r, dtype=np.float64)
    if log_sigma == 0:
        return (r >= median).astype(np.float64)
    from scipy.special import ndtr

    return ndtr(np.log(r / median) / log_sigma)


def encode_weight(w, cond, rng):
    """Program one synapse: +1 -> LRS/HRS, -1 -> HRS/LRS, 0 -> HRS/HRS."""
    w = check_ternary(w)
    if w == 1:
        return ResistancePair(float(sample_lrs(cond, rng)), float(sample_hrs(cond, rng)))
    if w == -1:
        return ResistancePair(float(sample_hrs(cond, rng)), float(sample_lrs(cond, rng)))
    return ResistancePair(float(sample_hrs(cond, rng)), float(sample_hrs(cond, rng)))


def encode_weights(weights, cond, rng):
    """Vectorised :func:`encode_weight`; returns ``(r_bl, r_blb)`` arrays shaped like ``weights``."""
    w = np.asarray(weights)
    if w.size and not np.isin(w, TERNARY_VALUES).all():
        raise ValueError("weights must only contain -1, 0 and +1")
    z_bl = rng.standard_normal(w.shape)
    z_blb = rng.standard_normal(w.shape)
    bl_low = w == 1
    blb_low = w == -1
    r_bl = np.where(
        bl_low,
        cond.lrs_median * np.exp(cond.lrs_log_sigma * z_bl),
        cond.hrs_median * np.exp(cond.hrs_log_sigma * z_bl),
    )
    r_blb = np.where(
        blb_low,
        cond.lrs_median * np.exp(cond.lrs_log_sigma * z_blb),
        cond.hrs_median * np.exp(cond.hrs_log_sigma * z_blb),
    )
    return r_bl, r_blb
