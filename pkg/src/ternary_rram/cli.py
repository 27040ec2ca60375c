"""Command-line experiment runner.

Every subcommand reads one YAML config, writes its artifacts plus
``config.resolved.yaml`` into the output directory and exits non-zero with a
one-line message on any error.
"""

import argparse
import csv
import json
import os
import sys

import numpy as np

from . import analysis, device, faults, memory_array, pcsa, streams
from .config import ConfigError, dump_resolved, load_config


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _write_json(path, obj):
    with open(path, "w") as f:
        json.dump(obj, f, indent=2, sort_keys=True)
        f.write("\n")


def _log(msg):
    print(msg, file=sys.stderr, flush=True)


def _blas_single_thread():
    """Pin BLAS to one thread so float reductions keep a fixed order."""
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=1, user_api="blas")


# --- subcommands -----------------------------------------------------------


def cmd_calibrate(cfg, out, threads):
    anchors = cfg.calibration.anchor_list()
    initial = cfg.params()
    params = pcsa.calibrate(anchors, initial)
    _write_json(os.path.join(out, "params.json"), params.to_dict())
    margins = pcsa.anchor_margins(params, anchors)
    report = {
        "changed": params != initial,
        "anchors": [
            {"anchor": a.to_dict(), "description": a.describe(), "log_margin": m,
             "probability": pcsa.convergence_probability(params, a)}
            for a, m in zip(anchors, margins)
        ],
        "boundaries": [
            {**c.to_dict(), "opposing": 100e3, "boundary": pcsa.boundary_resistance(params, c, cfg.window)}
            for c in pcsa.STANDARD_CORNERS
        ],
        "presets": {},
    }
    for name in sorted(device.PRESETS):
        cond = device.get_preset(name)
        b = pcsa.boundary_resistance(params, pcsa.NOMINAL, cfg.window, opposing=cond.hrs_median)
        report["presets"][name] = {
            "condition": cond.to_dict(),
            "boundary_vs_median_hrs": b,
            "hrs_below_boundary": float(device.lognormal_cdf(b, cond.hrs_median, cond.hrs_log_sigma)),
        }
    _write_json(os.path.join(out, "calibration.json"), report)
    _log(f"calibration {'updated' if report['changed'] else 'unchanged'}; "
         f"nominal boundary {report['boundaries'][1]['boundary'] / 1e3:.3g} kOhm")


def cmd_sense_map(cfg, out, threads):
    s = cfg.sense_map
    r = np.geomspace(s.r_min, s.r_max, s.points)
    smap = analysis.sense_map(r, s.reads, cfg.params(), cfg.operating_corner(), cfg.seed, cfg.window,
                              threads=threads)
    _write_csv(os.path.join(out, "sense_map.csv"),
               ("r_bl", "r_blb", "n_plus", "n_minus", "n_zero", "region"), smap.rows())
    regions = smap.regions()
    summary = {"reads_per_point": s.reads, "points": int(regions.size),
               "regions": {k: int((regions == k).sum()) for k in ("+1", "-1", "0", "mixed")}}
    _write_json(os.path.join(out, "sense_map_summary.json"), summary)
    _log(f"sense map: {summary['regions']}")


def cmd_ber(cfg, out, threads):
    rates = analysis.monte_carlo_ber(cfg.condition(), cfg.params(), cfg.operating_corner(),
                                     cfg.ber.trials_per_weight, cfg.seed, cfg.window, threads=threads)
    _write_csv(os.path.join(out, "ber.csv"), ("intended", "read", "count"), rates.rows())
    _write_json(os.path.join(out, "ber_summary.json"), rates.summary())
    _log(f"BER type1={rates.type1.p:.3g} type2={rates.type2.p:.3g} type3={rates.type3.p:.3g}")


def cmd_pvt(cfg, out, threads):
    p = cfg.pvt
    params = cfg.params()
    res = analysis.pvt_sweep(p.corner_list(), params, cfg.seed, np.geomspace(p.r_min, p.r_max, p.points),
                             p.reads, p.opposing, cfg.window, threads=threads)
    rows = [(c.temperature, c.v_dd, b, pcsa.boundary_resistance(params, c, cfg.window, p.opposing))
            for c, b in res]
    _write_csv(os.path.join(out, "pvt.csv"), ("temperature", "v_dd", "boundary", "analytic_boundary"), rows)
    _log("PVT boundaries (kOhm): " + ", ".join(f"{r[0]:g}C/{r[1]:g}V {r[2] / 1e3:.3g}" for r in rows))


def cmd_round_trip(cfg, out, threads):
    a = cfg.array
    if not a.weights:
        raise ConfigError("round-trip needs array.weights (a ternary CSV)")
    w = memory_array.read_ternary_csv(a.weights)
    acfg = memory_array.ArrayConfig(w.shape[0], w.shape[1], cfg.window, a.per_column_pcsa, a.process_sigma)
    arr = memory_array.program(w, cfg.condition(), acfg, streams.generator(cfg.seed, "array", "program"),
                               cfg.params())
    memory_array.save_snapshot(arr, os.path.join(out, "array"))
    counts = np.zeros((3, 3), dtype=np.int64)
    first = None
    for k in range(a.reads):
        got = memory_array.read_all(arr, cfg.operating_corner(), streams.generator(cfg.seed, "array", "read", k))
        first = got if first is None else first
        np.add.at(counts, (w.astype(np.int64) + 1, got.astype(np.int64) + 1), 1)
    memory_array.write_ternary_csv(os.path.join(out, "read.csv"), first)
    rates = analysis.ErrorRates.from_counts(counts)
    _write_json(os.path.join(out, "round_trip.json"),
                {**rates.summary(), "rows": int(w.shape[0]), "cols": int(w.shape[1]), "reads": a.reads,
                 "mismatches_first_read": int((first != w).sum())})
    _log(f"round trip: {int((first != w).sum())} of {w.size} weights read differently")


def cmd_train(cfg, out, threads, resume=None):
    from .qnn import checkpoint
    from .qnn.train import train

    train_set, test_set = cfg.dataset.load()
    net = cfg.network.build()
    state = None
    if resume:
        rnet, state, _ = checkpoint.load(resume)
        if rnet != net:
            raise ConfigError(f"checkpoint {resume} holds a different network than the config")
    hyper = cfg.train
    ck = os.path.join(out, "checkpoint")

    def on_epoch(st, rec):
        _log(f"epoch {rec.epoch}: loss {rec.train_loss:.4f} train {rec.train_acc:.4f} test {rec.test_acc:.4f}")

    with _blas_single_thread():
        state, hist = train(net, train_set, hyper, cfg.seed, state=state, test=test_set, on_epoch=on_epoch)
    checkpoint.save(ck, net, state, hyper)
    _write_csv(os.path.join(out, "history.csv"), ("epoch", "train_loss", "train_acc", "test_acc"), hist.rows())


def cmd_inject(cfg, out, threads, checkpoint_dir=None):
    from .qnn import checkpoint
    from .qnn.train import evaluate

    path = checkpoint_dir or cfg.inject.checkpoint
    if not path:
        raise ConfigError("inject needs a checkpoint (inject.checkpoint or --checkpoint)")
    net, state, _ = checkpoint.load(path)
    _, test_set = cfg.dataset.load()
    inj = cfg.inject
    rows = []
    with _blas_single_thread():
        clean = evaluate(net, state, test_set)
        for t in inj.types:
            for pt in faults.sweep(net, state, t, inj.rates, test_set, cfg.seed, inj.n_passes, inj.per_batch,
                                   threads=threads):
                rows.append(pt.row())
                _log(f"type {t} rate {pt.rate:g}: {pt.mean_acc:.4f} +- {pt.std_acc:.4f}")
        summary = {"clean_accuracy": clean, "checkpoint": os.path.abspath(path)}
        if inj.combined is not None:
            spec = faults.ErrorSpec(**inj.combined)
            mean, std, _ = faults.eval_under_errors(net, state, spec, test_set, inj.n_passes, cfg.seed,
                                                    inj.per_batch, threads=threads)
            rows.append(("combined", f"{spec.p1}/{spec.p2}/{spec.p3}", mean, std, inj.n_passes))
            summary["combined"] = {**spec.to_dict(), "mean_acc": mean, "std_acc": std}
    _write_csv(os.path.join(out, "fault_curves.csv"), ("error_type", "rate", "mean_acc", "std_acc", "n_passes"), rows)
    _write_json(os.path.join(out, "inject_summary.json"), summary)


COMMANDS = {
    "calibrate": (cmd_calibrate, "fit PCSA timing parameters to the anchors and report boundaries"),
    "sense-map": (cmd_sense_map, "decode a log grid of (R_BL, R_BLb) pairs"),
    "ber": (cmd_ber, "Monte-Carlo Type 1/2/3 read-error rates for the device condition"),
    "pvt": (cmd_pvt, "sense boundary at each process/voltage/temperature corner"),
    "train": (cmd_train, "train a binary or ternary network and save a checkpoint"),
    "inject": (cmd_inject, "accuracy under injected weight errors for a checkpoint"),
    "round-trip": (cmd_round_trip, "program a weight CSV into an array and read it back"),
}


def build_parser():
    p = argparse.ArgumentParser(prog="ternary-rram", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name, (_, help_) in COMMANDS.items():
        s = sub.add_parser(name, help=help_)
        s.add_argument("--config", help="YAML experiment config (defaults apply when omitted)")
        s.add_argument("--seed", type=int, help="master seed, overrides the config")
        s.add_argument("--out", help="output directory, overrides the config")
        s.add_argument("--threads", type=int, default=1, help="worker threads (results do not depend on it)")
        if name == "train":
            s.add_argument("--resume", help="checkpoint directory to continue from")
        if name == "inject":
            s.add_argument("--checkpoint", help="checkpoint directory, overrides inject.checkpoint")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.threads < 1:
            raise ValueError("--threads must be >= 1")
        cfg = load_config(args.config).with_overrides(seed=args.seed, out=args.out)
        out = cfg.out
        os.makedirs(out, exist_ok=True)
        dump_resolved(cfg, os.path.join(out, "config.resolved.yaml"))
        fn = COMMANDS[args.command][0]
        extra = {}
        if args.command == "train":
            extra["resume"] = args.resume
        if args.command == "inject":
            extra["checkpoint_dir"] = args.checkpoint
        fn(cfg, out, args.threads, **extra)
    except pcsa.CalibrationError as e:
        print(f"error: {e}", file=sys.stderr)
        return 3
    except (ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
