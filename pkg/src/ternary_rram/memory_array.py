"""2T2R memory array: program a ternary matrix into device pairs and read it back."""

from dataclasses import dataclass, field
import csv
import json
from pathlib import Path

import numpy as np

from . import device, pcsa

DEFAULT_CAPACITY = 1 << 24  # devices


@dataclass(frozen=True)
class ArrayConfig:
    rows: int
    cols: int
    window: float = pcsa.DEFAULT_WINDOW
    per_column_pcsa: bool = False
    process_sigma: float = 0.0
    capacity: int = DEFAULT_CAPACITY

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ValueError("array needs at least one row and one column")
        if 2 * self.rows * self.cols > self.capacity:
            raise ValueError(
                f"{self.rows}x{self.cols} synapses need {2 * self.rows * self.cols} devices, "
                f"capacity is {self.capacity}"
            )
        if not self.window > 0:
            raise ValueError("sense window must be positive")
        if self.process_sigma < 0:
            raise ValueError("process_sigma must be >= 0")


@dataclass(frozen=True)
class ProgrammedArray:
    r_bl: np.ndarray
    r_blb: np.ndarray
    column_params: tuple
    config: ArrayConfig = field(compare=False)

    def __post_init__(self):
        shape = (self.config.rows, self.config.cols)
        if self.r_bl.shape != shape or self.r_blb.shape != shape:
            raise ValueError(f"resistance matrices must be {shape}")
        if len(self.column_params) != self.config.cols:
            raise ValueError("need one PCSA parameter set per column")
        self.r_bl.flags.writeable = False
        self.r_blb.flags.writeable = False

    @property
    def shape(self):
        return self.r_bl.shape

    def pair(self, row, col):
        return device.ResistancePair(float(self.r_bl[row, col]), float(self.r_blb[row, col]))


def program(weights, cond, config, rng, params=None):
    w = np.asarray(weights)
    if w.shape != (config.rows, config.cols):
        raise ValueError(f"weight matrix is {w.shape}, array is {(config.rows, config.cols)}")
    params = params or pcsa.default_params()
    r_bl, r_blb = device.encode_weights(w, cond, rng)
    if config.per_column_pcsa:
        cols = pcsa.column_params(params, config.cols, config.process_sigma, rng)
    else:
        cols = [params] * config.cols
    return ProgrammedArray(r_bl.astype(np.float64), r_blb.astype(np.float64), tuple(cols), config)


def decode(outcome):
    if not outcome.converged:
        return 0
    return 1 if outcome.q_high else -1


def read(array, row, col, corner, rng):
    rows, cols = array.shape
    if not (0 <= row < rows and 0 <= col < cols):
        raise IndexError(f"cell ({row}, {col}) outside {rows}x{cols} array")
    out = pcsa.sense(array.pair(row, col), array.column_params[col], corner, array.config.window, rng)
    return decode(out)


def read_all(array, corner, rng):
    """Row-by-row read of the whole array, one sense per synapse."""
    rows, cols = array.shape
    groups = {}
    for c, p in enumerate(array.column_params):
        groups.setdefault(p, []).append(c)
    out = np.zeros((rows, cols), dtype=np.int8)
    for r in range(rows):
        for p, idx in groups.items():
            conv, q_high, _ = pcsa.sense_batch(
                array.r_bl[r, idx], array.r_blb[r, idx], p, corner, array.config.window, rng
            )
            out[r, idx] = np.where(conv, np.where(q_high, 1, -1), 0)
    return out


# --- file formats ----------------------------------------------------------


def read_ternary_csv(path):
    with open(path, newline="") as fh:
        rows = [[int(v) for v in line] for line in csv.reader(fh) if line]
    if not rows:
        raise ValueError(f"{path}: empty weight file")
    if len({len(r) for r in rows}) != 1:
        raise ValueError(f"{path}: ragged weight matrix")
    w = np.array(rows, dtype=np.int8)
    if not np.isin(w, device.TERNARY_VALUES).all():
        raise ValueError(f"{path}: weights must be -1, 0 or 1")
    return w


def write_ternary_csv(path, weights):
    with open(path, "w", newline="") as fh:
        csv.writer(fh, lineterminator="\n").writerows(np.asarray(weights, dtype=int).tolist())


def save_snapshot(array, directory):
    """Write ``manifest.json`` plus ``resistances.bin`` (float64 LE, r_bl/r_blb interleaved, row-major)."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    buf = np.stack([array.r_bl, array.r_blb], axis=-1).astype("<f8")
    (d / "resistances.bin").write_bytes(buf.tobytes())
    cfg = array.config
    manifest = {
        "format": "ternary-rram-array/1",
        "rows": cfg.rows,
        "cols": cfg.cols,
        "window": cfg.window,
        "per_column_pcsa": cfg.per_column_pcsa,
        "process_sigma": cfg.process_sigma,
        "capacity": cfg.capacity,
        "layout": "row-major, (r_bl, r_blb) interleaved, little-endian float64, ohm",
        "column_params": [p.to_dict() for p in array.column_params],
    }
    (d / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")


def load_snapshot(directory):
    d = Path(directory)
    m = json.loads((d / "manifest.json").read_text())
    cfg = ArrayConfig(m["rows"], m["cols"], m["window"], m["per_column_pcsa"], m["process_sigma"], m["capacity"])
    raw = np.frombuffer((d / "resistances.bin").read_bytes(), dtype="<f8")
    if raw.size != 2 * cfg.rows * cfg.cols:
        raise ValueError(f"{d / 'resistances.bin'}: expected {2 * cfg.rows * cfg.cols} values, found {raw.size}")
    buf = raw.reshape(cfg.rows, cfg.cols, 2).astype(np.float64)
    cols = tuple(pcsa.PcsaParams.from_dict(p) for p in m["column_params"])
    return ProgrammedArray(buf[..., 0].copy(), buf[..., 1].copy(), cols, cfg)
