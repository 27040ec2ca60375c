"""Experiment configuration: a YAML tree of strict sections.

Every section rejects unknown keys. :meth:`ExperimentConfig.resolved` expands
presets and defaults into explicit values; that tree is written beside every
output for provenance.
"""

from dataclasses import asdict, dataclass, field, fields, replace
import os

import yaml

from . import device, pcsa
from .pcsa import DEFAULT_WINDOW
from .faults import ErrorSpec
from .qnn.network import mlp, vgg
from .qnn.quant import DEFAULT_DELTA, QuantMode
from .qnn.train import Hyper


class ConfigError(ValueError):
    pass


def _coerce(value, typ, where):
    # YAML reads "1e3" as a string; numeric fields accept it anyway
    if value is None or typ not in (float, int, "float", "int"):
        return value
    if isinstance(value, bool):
        raise ConfigError(f"{where}: expected a number, got {value!r}")
    try:
        num = float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{where}: expected a number, got {value!r}") from None
    if typ in (int, "int"):
        if num != int(num):
            raise ConfigError(f"{where}: expected an integer, got {value!r}")
        return int(num)
    return num


def _strict(cls, d, where):
    if d is None:
        return cls()
    if not isinstance(d, dict):
        raise ConfigError(f"{where}: expected a mapping, got {type(d).__name__}")
    types = {f.name: f.type for f in fields(cls)}
    unknown = set(d) - set(types)
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")
    kwargs = {k: _coerce(v, types[k], f"{where}.{k}") for k, v in d.items()}
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"{where}: {e}") from e


@dataclass(frozen=True)
class DeviceSection:
    preset: str = "strong"
    condition: dict = field(default_factory=dict)  # ProgrammingCondition fields replacing preset values

    def resolve(self):
        base = device.get_preset(self.preset)
        unknown = set(self.condition) - set(base.to_dict())
        if unknown:
            raise ConfigError(f"device.condition: unknown keys {sorted(unknown)}")
        return replace(base, **{k: float(v) for k, v in self.condition.items()})


@dataclass(frozen=True)
class SenseMapSection:
    r_min: float = 1e3
    r_max: float = 1e6
    points: int = 25
    reads: int = 100

    def __post_init__(self):
        if not 0 < self.r_min < self.r_max or self.points < 2 or self.reads < 1:
            raise ValueError("need 0 < r_min < r_max, points >= 2, reads >= 1")


@dataclass(frozen=True)
class BerSection:
    trials_per_weight: int = 1_000_000

    def __post_init__(self):
        if self.trials_per_weight < 1:
            raise ValueError("trials_per_weight must be positive")


@dataclass(frozen=True)
class PvtSection:
    corners: list = field(default_factory=lambda: [c.to_dict() for c in pcsa.STANDARD_CORNERS])
    r_min: float = 1e3
    r_max: float = 1e6
    points: int = 61
    reads: int = 200
    opposing: float = 100e3

    def __post_init__(self):
        if len(self.corners) < 2:
            raise ValueError("at least two corners are required")
        if not 0 < self.r_min < self.r_max or self.points < 2 or self.reads < 1 or self.opposing <= 0:
            raise ValueError("need 0 < r_min < r_max, points >= 2, reads >= 1, opposing > 0")

    def corner_list(self):
        return [pcsa.Corner.from_dict(c) for c in self.corners]


@dataclass(frozen=True)
class CalibrationSection:
    anchors: object = "default"  # "default", "timing" or a list of anchor mappings

    def anchor_list(self):
        if self.anchors == "default":
            return pcsa.default_anchors()
        if self.anchors == "timing":
            return pcsa.timing_anchors()
        if not isinstance(self.anchors, list):
            raise ConfigError("calibration.anchors must be 'default', 'timing' or a list")
        return [pcsa.Anchor.from_dict(a) for a in self.anchors]


@dataclass(frozen=True)
class ArraySection:
    weights: str = None  # ternary CSV; required by round-trip
    per_column_pcsa: bool = False
    process_sigma: float = 0.0
    reads: int = 1


@dataclass(frozen=True)
class NetworkSection:
    arch: str = "mlp"
    sizes: list = field(default_factory=lambda: [784, 256, 256, 10])
    weight_mode: str = "ternary"
    activation: str = None  # defaults to weight_mode
    delta: float = DEFAULT_DELTA
    n_filters: int = 128

    def __post_init__(self):
        if self.arch not in ("mlp", "vgg"):
            raise ValueError(f"arch must be 'mlp' or 'vgg', got {self.arch!r}")

    def build(self):
        wm = QuantMode(self.weight_mode, self.delta)
        am = None if self.activation is None else QuantMode(self.activation, self.delta)
        if self.arch == "mlp":
            return mlp(self.sizes, wm, am)
        return vgg(self.n_filters, wm, am)


@dataclass(frozen=True)
class DatasetSection:
    name: str = "mnist"
    dir: str = "data/mnist"
    train_limit: int = None
    test_limit: int = None

    def __post_init__(self):
        if self.name not in ("mnist", "cifar10"):
            raise ValueError(f"dataset must be 'mnist' or 'cifar10', got {self.name!r}")

    def load(self):
        from . import datasets

        loader = datasets.load_mnist if self.name == "mnist" else datasets.load_cifar10
        tr, te = loader(self.dir, "train"), loader(self.dir, "test")
        if self.train_limit:
            tr = tr.subset(self.train_limit)
        if self.test_limit:
            te = te.subset(self.test_limit)
        return tr, te


@dataclass(frozen=True)
class InjectSection:
    checkpoint: str = None
    types: list = field(default_factory=lambda: [1, 2, 3])
    rates: list = field(default_factory=lambda: [0.0, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3])
    n_passes: int = 5
    per_batch: bool = True
    combined: dict = None  # optional ErrorSpec mapping evaluated as one extra row

    def __post_init__(self):
        if any(t not in (1, 2, 3) for t in self.types):
            raise ValueError("types must be drawn from 1, 2, 3")
        if self.n_passes < 1:
            raise ValueError("n_passes must be >= 1")
        if self.combined is not None:
            _strict(ErrorSpec, self.combined, "inject.combined")


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int = 0
    out: str = "out"
    device: DeviceSection = field(default_factory=DeviceSection)
    pcsa: dict = field(default_factory=dict)  # PcsaParams overrides
    corner: dict = field(default_factory=lambda: pcsa.NOMINAL.to_dict())
    window: float = DEFAULT_WINDOW
    calibration: CalibrationSection = field(default_factory=CalibrationSection)
    sense_map: SenseMapSection = field(default_factory=SenseMapSection)
    ber: BerSection = field(default_factory=BerSection)
    pvt: PvtSection = field(default_factory=PvtSection)
    array: ArraySection = field(default_factory=ArraySection)
    network: NetworkSection = field(default_factory=NetworkSection)
    train: Hyper = field(default_factory=Hyper)
    dataset: DatasetSection = field(default_factory=DatasetSection)
    inject: InjectSection = field(default_factory=InjectSection)

    SECTIONS = {
        "device": DeviceSection, "calibration": CalibrationSection, "sense_map": SenseMapSection,
        "ber": BerSection, "pvt": PvtSection, "array": ArraySection, "network": NetworkSection,
        "train": Hyper, "dataset": DatasetSection, "inject": InjectSection,
    }

    @classmethod
    def from_dict(cls, d):
        d = dict(d or {})
        unknown = set(d) - {f.name for f in fields(cls)}
        if unknown:
            raise ConfigError(f"unknown top-level keys {sorted(unknown)}")
        for name, sec in cls.SECTIONS.items():
            if name in d:
                d[name] = _strict(sec, d[name], name)
        for name, typ in (("seed", int), ("window", float)):
            if name in d:
                d[name] = _coerce(d[name], typ, name)
        try:
            cfg = cls(**d)
        except (TypeError, ValueError) as e:
            raise ConfigError(str(e)) from e
        cfg.validate()
        return cfg

    def validate(self):
        """Resolve every derived object once so errors surface before any work starts."""
        self.condition()
        self.params()
        self.operating_corner()
        self.pvt.corner_list()
        if not self.window > 0:
            raise ConfigError("window must be positive")

    def condition(self):
        try:
            return self.device.resolve()
        except ValueError as e:
            raise ConfigError(f"device: {e}") from e

    def params(self):
        try:
            return pcsa.PcsaParams.from_dict({**pcsa.default_params().to_dict(), **self.pcsa})
        except ValueError as e:
            raise ConfigError(f"pcsa: {e}") from e

    def operating_corner(self):
        try:
            return pcsa.Corner.from_dict(self.corner)
        except (KeyError, ValueError) as e:
            raise ConfigError(f"corner: {e}") from e

    def with_overrides(self, seed=None, out=None):
        cfg = self
        if seed is not None:
            cfg = replace(cfg, seed=int(seed))
        if out is not None:
            cfg = replace(cfg, out=str(out))
        return cfg

    def resolved(self):
        """Plain tree with presets and defaults expanded (the output location is omitted)."""
        d = {}
        for f in fields(self):
            if f.name == "out":
                continue
            v = getattr(self, f.name)
            d[f.name] = v.to_dict() if hasattr(v, "to_dict") else (asdict(v) if hasattr(v, "__dataclass_fields__") else v)
        d["device"] = {"preset": self.device.preset, "condition": self.condition().to_dict()}
        d["pcsa"] = self.params().to_dict()
        d["corner"] = self.operating_corner().to_dict()
        return d


def load_config(path=None):
    if path is None:
        return ExperimentConfig()
    if not os.path.exists(path):
        raise FileNotFoundError(f"config file not found: {path}")
    with open(path) as f:
        try:
            data = yaml.safe_load(f)
        except yaml.YAMLError as e:
            raise ConfigError(f"{path}: {e}") from e
    if data is not None and not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return ExperimentConfig.from_dict(data)


def dump_resolved(cfg, path):
    with open(path, "w") as f:
        yaml.safe_dump(cfg.resolved(), f, sort_keys=True, default_flow_style=False)
