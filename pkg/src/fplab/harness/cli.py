"""Command line: ``fplab run|sweep|plot|verify``."""

import argparse
from concurrent.futures import ProcessPoolExecutor
import dataclasses
import json
import logging
import os
import sys

from ..errors import ConfigError, FplabError
from .config import ExperimentConfig

OK, CONFIG_ERROR, RUNTIME_ERROR, VERIFY_FAILED = 0, 1, 2, 3


def _param(text):
    key, sep, value = text.partition("=")
    if not sep:
        raise argparse.ArgumentTypeError(f"expected key=value, got {text!r}")
    try:
        return key, json.loads(value)
    except json.JSONDecodeError:
        return key, value


def _experiment_flags(p):
    p.add_argument("--config", help="JSON experiment config; flags override its fields")
    p.add_argument("--target")
    p.add_argument("--widths", help="e.g. 1-100-10-1")
    p.add_argument("--optimizer")
    p.add_argument("--seed", type=int)
    p.add_argument("--epochs", type=int, dest="max_iter")
    p.add_argument("--record-every", type=int)
    p.add_argument("--out")
    p.add_argument("--delta", type=float, action="append", dest="deltas")
    p.add_argument("--mnist-images")
    p.add_argument("--mnist-labels")
    p.add_argument("--track", type=int, action="append", help="frequency index to track (repeatable)")
    p.add_argument("--stop-threshold", type=float)
    p.add_argument("--param", type=_param, action="append", default=[],
                   help="optimizer parameter key=value (repeatable)")


def build_config(args):
    data = {}
    if args.config:
        data = ExperimentConfig.load(args.config).to_dict()
    for name in ("target", "widths", "optimizer", "seed", "max_iter", "record_every", "out",
                 "deltas", "mnist_images", "mnist_labels", "track", "stop_threshold"):
        value = getattr(args, name, None)
        if value is not None:
            data[name] = value
    if args.param:
        data["optimizer_params"] = {**data.get("optimizer_params", {}), **dict(args.param)}
    return ExperimentConfig.from_dict(data)


def _run_one(cfg):
    from .experiment import run_experiment
    return run_experiment(cfg)


def cmd_run(args):
    cfg = build_config(args)
    art = _run_one(cfg)
    s = art.summary
    print(f"{s['status']} after {s['epochs']} epochs, loss {s['final_loss']:.6g}, "
          f"{s['evals']} evals, {s['gradient_calls']} gradient calls")
    print(f"trace   {art.trace_csv}\nsummary {art.summary_json}\nheatmap {art.heatmap_svg}")
    return OK


def cmd_sweep(args):
    from .experiment import crossing_epochs, low_to_high
    from .io import read_csv
    base = build_config(args)
    cfgs = [dataclasses.replace(base, seed=s, out=os.path.join(base.out, f"seed{s}"))
            for s in args.seeds]
    if args.jobs > 1:
        with ProcessPoolExecutor(args.jobs) as pool:
            arts = list(pool.map(_run_one, cfgs))
    else:
        arts = [_run_one(c) for c in cfgs]
    report = {"seeds": args.seeds, "runs": {}}
    for cfg, art in zip(cfgs, arts):
        s = art.summary
        report["runs"][str(cfg.seed)] = {k: s.get(k) for k in (
            "status", "epochs", "final_loss", "convergence_epochs", "low_to_high",
            "low_below_high_fraction")}
    if base.spectral:
        key = format(base.threshold, "g")
        ordered = 0
        for art in arts:
            ce = crossing_epochs(read_csv(art.trace_csv), base.threshold)
            ordered += low_to_high(list(ce.values()))
        report["ordered"] = {"threshold": key, "count": ordered, "of": len(cfgs)}
        print(f"low-to-high ordering at {key}: {ordered}/{len(cfgs)} seeds")
    else:
        for d in base.deltas:
            fr = [a.summary["low_below_high_fraction"][format(d, "g")] for a in arts]
            print(f"delta {d:g}: e_low < e_high fractions " + ", ".join(f"{f:.2f}" for f in fr))
    os.makedirs(base.out, exist_ok=True)
    path = os.path.join(base.out, "sweep.json")
    with open(path, "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"sweep   {path}")
    return OK


def cmd_plot(args):
    from .io import emit_heatmap_svg, read_csv
    trace = read_csv(args.csv)
    out = args.out or os.path.splitext(args.csv)[0] + ".svg"
    emit_heatmap_svg(trace, out, title=args.title)
    print(out)
    return OK


def cmd_verify(args):
    from .verify import run_all
    checks = run_all()
    for c in checks:
        print(f"{'PASS' if c.ok else 'FAIL'}  {c.name}  ({c.detail})")
    return OK if all(c.ok for c in checks) else VERIFY_FAILED


def make_parser():
    parser = argparse.ArgumentParser(prog="fplab", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="one experiment")
    _experiment_flags(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="seed sweep with ordering statistics")
    _experiment_flags(p)
    p.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2, 3, 4])
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("plot", help="heatmap SVG from a trace CSV")
    p.add_argument("csv")
    p.add_argument("--out")
    p.add_argument("--title")
    p.set_defaults(func=cmd_plot)

    p = sub.add_parser("verify", help="invariant suite on synthetic objectives")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None):
    parser = make_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return CONFIG_ERROR
    except (FplabError, OSError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return RUNTIME_ERROR
