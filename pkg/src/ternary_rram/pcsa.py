"""Analytical timing model of the precharge sense amplifier (PCSA) race.

Each branch discharges its precharged output through ``R + r_on`` into the
node capacitance. The faster branch reaches the latch trip point after
``tau_fast * ln(1 / v_trip_fraction)``; the latch then regenerates in a time
that grows like ``tau_slow / (tau_slow - tau_fast)``, diverging when the two
branches are balanced. With the default parameters a 5k/350k pair settles in
about 14 ns while a 320k/350k pair needs several hundred ns, matching the two
timing anchors the model is calibrated to.
"""

from dataclasses import asdict, dataclass, replace
import itertools
import math

import numpy as np
from scipy.special import ndtr, ndtri

T_REF_C = 27.0
DEFAULT_WINDOW = 50e-9


class SubthresholdError(ValueError):
    pass


class CalibrationError(ValueError):
    def __init__(self, message, violated=()):
        super().__init__(message)
        self.violated = list(violated)


@dataclass(frozen=True)
class PcsaParams:
    node_capacitance: float = 1.75e-12  # F
    r_on: float = 2.0e3  # ohm
    v_dd_nominal: float = 1.2  # V
    v_trip_fraction: float = 0.5
    t_reg_base: float = 5.0e-9  # s
    jitter_log_sigma: float = 0.20
    v_th: float = 0.6  # V
    overdrive_exponent: float = 1.3
    temp_slope: float = 1.0e-3  # 1/K

    def __post_init__(self):
        for name in ("node_capacitance", "r_on", "v_dd_nominal", "t_reg_base", "v_th", "overdrive_exponent"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be positive, got {v!r}")
        for name in ("jitter_log_sigma", "temp_slope"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise ValueError(f"{name} must be >= 0, got {v!r}")
        if not 0 < self.v_trip_fraction < 1:
            raise ValueError("v_trip_fraction must lie in (0, 1)")
        if not self.v_th < self.v_dd_nominal:
            raise ValueError("v_th must be below v_dd_nominal")

    def without_jitter(self):
        return replace(self, jitter_log_sigma=0.0)

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown PCSA parameter keys: {sorted(unknown)}")
        return cls(**{k: float(v) for k, v in d.items()})


@dataclass(frozen=True)
class Corner:
    temperature: float  # degC
    v_dd: float  # V

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        unknown = set(d) - {"temperature", "v_dd"}
        if unknown:
            raise ValueError(f"unknown corner keys: {sorted(unknown)}")
        return cls(float(d["temperature"]), float(d["v_dd"]))


SLOW = Corner(0.0, 1.1)
NOMINAL = Corner(27.0, 1.2)
FAST = Corner(60.0, 1.3)
STANDARD_CORNERS = (SLOW, NOMINAL, FAST)


@dataclass(frozen=True)
class SenseOutcome:
    converged: bool
    q_high: bool
    t_conv: float


# Incremented by the number of pairs evaluated in every sense call.
SENSE_COUNTER = {"senses": 0}


def default_params():
    """Parameters calibrated against :func:`default_anchors`."""
    return PcsaParams()


def speed_factor(corner, params):
    if corner.v_dd <= params.v_th:
        raise SubthresholdError(
            f"subthreshold operating point: v_dd={corner.v_dd} V <= v_th={params.v_th} V"
        )
    overdrive = (corner.v_dd - params.v_th) / (params.v_dd_nominal - params.v_th)
    thermal = 1.0 - params.temp_slope * (corner.temperature - T_REF_C)
    if thermal <= 0:
        raise ValueError(f"temperature {corner.temperature} degC outside the model range")
    return overdrive**params.overdrive_exponent * thermal


def base_time(r_bl, r_blb, params, corner):
    """Jitter-free convergence time in seconds (vectorised, +inf on exact ties)."""
    s = speed_factor(corner, params)
    r_bl = np.asarray(r_bl, dtype=np.float64)
    r_blb = np.asarray(r_blb, dtype=np.float64)
    k = params.node_capacitance / s
    tau_fast = (np.minimum(r_bl, r_blb) + params.r_on) * k
    tau_slow = (np.maximum(r_bl, r_blb) + params.r_on) * k
    gap = tau_slow - tau_fast
    with np.errstate(divide="ignore", invalid="ignore"):
        regen = np.where(gap > 0, params.t_reg_base * tau_slow / gap, np.inf)
    t = tau_fast * math.log(1.0 / params.v_trip_fraction) + regen
    return t if t.ndim else float(t)


def convergence_time(pair, params, corner, rng):
    """One stochastic latch race: returns ``(t_conv, q_high)``."""
    t0 = base_time(pair.r_bl, pair.r_blb, params, corner)
    jitter = math.exp(params.jitter_log_sigma * rng.standard_normal())
    if pair.r_bl == pair.r_blb:
        q_high = bool(rng.random() < 0.5)
    else:
        q_high = pair.r_bl < pair.r_blb
    return t0 * jitter, q_high


def sense(pair, params, corner, window, rng):
    if not window > 0:
        raise ValueError("sense window must be positive")
    SENSE_COUNTER["senses"] += 1
    t, q_high = convergence_time(pair, params, corner, rng)
    return SenseOutcome(converged=bool(t <= window), q_high=q_high, t_conv=t)


def sense_batch(r_bl, r_blb, params, corner, window, rng):
    """Vectorised :func:`sense`; returns ``(converged, q_high, t_conv)`` arrays."""
    if not window > 0:
        raise ValueError("sense window must be positive")
    r_bl = np.asarray(r_bl, dtype=np.float64)
    r_blb = np.asarray(r_blb, dtype=np.float64)
    SENSE_COUNTER["senses"] += r_bl.size
    t0 = base_time(r_bl, r_blb, params, corner)
    t = t0 * np.exp(params.jitter_log_sigma * rng.standard_normal(r_bl.shape))
    coin = rng.random(r_bl.shape) < 0.5
    q_high = np.where(r_bl == r_blb, coin, r_bl < r_blb)
    return t <= window, q_high, t


def boundary_resistance(params, corner, window=DEFAULT_WINDOW, opposing=100e3):
    """Resistance of the fast device at which the jitter-free race takes exactly ``window``.

    Solves ``a (R + r_on) + t_reg (Ro + r_on) / (Ro - R) = window`` for R < Ro,
    a quadratic in R. With log-normal jitter of median one this is also the
    50 % convergence point.
    """
    s = speed_factor(corner, params)
    a = params.node_capacitance * math.log(1.0 / params.v_trip_fraction) / s
    b = params.t_reg_base
    p = window - a * params.r_on
    ro = opposing
    qa, qb, qc = a, -(p + a * ro), p * ro - b * (ro + params.r_on)
    disc = qb * qb - 4 * qa * qc
    if disc < 0:
        raise ValueError("no resistance converges within the window")
    root = (-qb - math.sqrt(disc)) / (2 * qa)
    if root <= 0:
        raise ValueError("no resistance converges within the window")
    return root


def column_params(params, n_cols, process_sigma, rng):
    """Per-column PCSA instances with log-normal offsets on t_reg_base and v_trip_fraction."""
    if process_sigma == 0:
        return [params] * n_cols
    out = []
    for _ in range(n_cols):
        z_reg, z_trip = rng.standard_normal(2)
        trip = min(max(params.v_trip_fraction * math.exp(process_sigma * z_trip), 0.05), 0.95)
        out.append(
            replace(params, t_reg_base=params.t_reg_base * math.exp(process_sigma * z_reg), v_trip_fraction=trip)
        )
    return out


# --- calibration -----------------------------------------------------------


@dataclass(frozen=True)
class Anchor:
    """Required behaviour of one resistance pair at one corner."""

    r_bl: float
    r_blb: float
    corner: Corner = NOMINAL
    window: float = DEFAULT_WINDOW
    converge: bool = True
    probability: float = 1.0
    jitter: bool = True
    label: str = ""

    def describe(self):
        verb = "converge" if self.converge else "stay unresolved"
        tag = f"{self.label}: " if self.label else ""
        return (
            f"{tag}({self.r_bl:.4g}, {self.r_blb:.4g}) ohm must {verb} within "
            f"{self.window * 1e9:.3g} ns with p>={self.probability} at "
            f"{self.corner.temperature:g} degC/{self.corner.v_dd:g} V"
        )

    def to_dict(self):
        d = asdict(self)
        d["corner"] = self.corner.to_dict()
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown anchor keys: {sorted(unknown)}")
        if "corner" in d:
            d["corner"] = Corner.from_dict(d["corner"])
        return cls(**d)


def timing_anchors():
    return [
        Anchor(5e3, 350e3, window=50e-9, converge=True, jitter=False, label="LRS/HRS timing"),
        Anchor(320e3, 350e3, window=200e-9, converge=False, jitter=False, label="HRS/HRS timing"),
    ]


def default_anchors():
    """Timing anchors plus the 10 kOhm / 100 kOhm read regions at 99.9 %."""
    return timing_anchors() + [
        Anchor(10e3, 100e3, converge=True, probability=0.999, label="LRS<10k vs HRS>100k"),
        Anchor(100e3, 10e3, converge=True, probability=0.999, label="HRS>100k vs LRS<10k"),
        Anchor(100e3, 1e9, converge=False, probability=0.999, label="both HRS>100k"),
    ]


def anchor_margins(params, anchors):
    """Log-time slack of each anchor; a negative value means it is violated."""
    out = []
    for anc in anchors:
        t0 = base_time(anc.r_bl, anc.r_blb, params, anc.corner)
        sigma = params.jitter_log_sigma if anc.jitter else 0.0
        if sigma > 0:
            z = float(ndtri(anc.probability)) if anc.probability < 1 else math.inf
            need = sigma * z
        else:
            need = 0.0
        slack = math.log(anc.window) - math.log(t0) if math.isfinite(t0) else -math.inf
        out.append(slack - need if anc.converge else -slack - need)
    return out


def convergence_probability(params, anchor):
    t0 = base_time(anchor.r_bl, anchor.r_blb, params, anchor.corner)
    sigma = params.jitter_log_sigma if anchor.jitter else 0.0
    if not math.isfinite(t0):
        return 0.0
    if sigma == 0:
        return 1.0 if t0 <= anchor.window else 0.0
    return float(ndtr((math.log(anchor.window) - math.log(t0)) / sigma))


def _satisfied(margin, anchor):
    return margin >= 0 if anchor.converge else margin > 0


def violated_anchors(params, anchors):
    return [a for a, m in zip(anchors, anchor_margins(params, anchors)) if not _satisfied(m, a)]


def calibrate(anchors, initial=None):
    """Fit the timing model to ``anchors``.

    Returns ``initial`` untouched when it already satisfies every anchor.
    Otherwise searches a grid over node capacitance, trip fraction,
    regeneration time and jitter, and returns the feasible point closest to
    ``initial`` in log-parameter distance.
    """
    anchors = list(anchors)
    if not anchors:
        raise CalibrationError("at least one anchor is required")
    initial = initial or default_params()
    if not violated_anchors(initial, anchors):
        return initial

    c_grid = initial.node_capacitance * np.geomspace(0.2, 5.0, 33)
    trip_grid = np.array([0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8])
    reg_grid = initial.t_reg_base * np.geomspace(0.1, 10.0, 21)
    jit_grid = np.unique(np.r_[0.0, initial.jitter_log_sigma * np.geomspace(0.25, 1.5, 9)])

    best, best_dist = None, math.inf
    worst_case, worst_min = None, -math.inf
    for c, trip, reg, jit in itertools.product(c_grid, trip_grid, reg_grid, jit_grid):
        cand = replace(initial, node_capacitance=float(c), v_trip_fraction=float(trip),
                       t_reg_base=float(reg), jitter_log_sigma=float(jit))
        margins = anchor_margins(cand, anchors)
        ok = all(_satisfied(m, a) for m, a in zip(margins, anchors))
        if ok:
            dist = (
                math.log(c / initial.node_capacitance) ** 2
                + math.log(trip / initial.v_trip_fraction) ** 2
                + math.log(reg / initial.t_reg_base) ** 2
                + ((jit - initial.jitter_log_sigma) / max(initial.jitter_log_sigma, 0.05)) ** 2
            )
            if dist < best_dist:
                best, best_dist = cand, dist
        elif best is None:
            m = min(margins)
            if m > worst_min:
                worst_case, worst_min = cand, m
    if best is None:
        violated = violated_anchors(worst_case, anchors)
        lines = "\n  ".join(a.describe() for a in violated)
        raise CalibrationError(f"infeasible anchor set; violated anchors:\n  {lines}", violated)
    return best
