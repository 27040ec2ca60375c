"""Checkpoint directory: ``manifest.json`` plus one little-endian float32 ``.bin`` per tensor."""

import json
import os

import numpy as np

from .network import Network, TrainerState
from .train import Hyper

FORMAT = "ternary-rram-checkpoint"
VERSION = 1
GROUPS = ("params", "buffers", "m", "v")


def save(directory, net, state, hyper=None):
    os.makedirs(directory, exist_ok=True)
    tensors = []
    for group in GROUPS:
        for name in sorted(getattr(state, group)):
            a = getattr(state, group)[name]
            fname = f"{group}.{name}.bin"
            np.ascontiguousarray(a, dtype="<f4").tofile(os.path.join(directory, fname))
            tensors.append({"group": group, "name": name, "file": fname, "shape": list(a.shape)})
    manifest = {
        "format": FORMAT,
        "version": VERSION,
        "network": net.to_dict(),
        "hyper": hyper.to_dict() if hyper is not None else None,
        "step": state.step,
        "epoch": state.epoch,
        "lr": state.lr,
        "bn_epsilon": state.bn_epsilon,
        "dtype": state.dtype,
        "tensors": tensors,
    }
    with open(os.path.join(directory, "manifest.json"), "w") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write("\n")


def load(directory):
    """Returns ``(net, state, hyper)``; ``hyper`` is None if it was not saved."""
    path = os.path.join(directory, "manifest.json")
    if not os.path.exists(path):
        raise FileNotFoundError(f"checkpoint manifest not found: {path}")
    with open(path) as f:
        man = json.load(f)
    if man.get("format") != FORMAT or man.get("version") != VERSION:
        raise ValueError(f"{path}: not a version-{VERSION} {FORMAT} manifest")
    net = Network.from_dict(man["network"])
    dt = np.dtype(man["dtype"])
    groups = {g: {} for g in GROUPS}
    for t in man["tensors"]:
        if t["group"] not in groups:
            raise ValueError(f"{path}: unknown tensor group {t['group']!r}")
        fpath = os.path.join(directory, t["file"])
        if not os.path.exists(fpath):
            raise FileNotFoundError(f"checkpoint tensor file not found: {fpath}")
        raw = np.fromfile(fpath, dtype="<f4")
        shape = tuple(t["shape"])
        if raw.size != int(np.prod(shape)):
            raise ValueError(f"{fpath}: {raw.size * 4} bytes, expected {int(np.prod(shape)) * 4} for shape {shape}")
        groups[t["group"]][t["name"]] = raw.reshape(shape).astype(dt)
    if set(groups["params"]) != set(groups["m"]) or set(groups["params"]) != set(groups["v"]):
        raise ValueError(f"{path}: Adam moments do not match the parameters")
    state = TrainerState(groups["params"], groups["buffers"], groups["m"], groups["v"], float(man["lr"]),
                         int(man["step"]), int(man["epoch"]), float(man["bn_epsilon"]), dt.name)
    hyper = Hyper.from_dict(man["hyper"]) if man.get("hyper") is not None else None
    return net, state, hyper
