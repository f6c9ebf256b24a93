"""End-to-end runs: build data and network, train, probe, write artifacts."""

from dataclasses import dataclass
import json
import logging
import math
import os

from .. import _numba
from ..mlp import MlpSpec, forward, init_params, make_objective
from ..optimizers import (StoppingRule, SwarmConfig, bfgs_run, cg_run, gd_run, lbfgs_run,
                          mc_run, powell_run, pso_run, tnc_run)
from ..spectrum import FilterProbe, dft, relative_spectral_error, select_peak_frequencies
from .config import ExperimentConfig
from .data import build_1d_dataset, gaussian_clusters, load_idx, subsample
from .io import Trace, emit_csv, emit_heatmap_svg, filter_columns, spectral_columns

log = logging.getLogger(__name__)

SENSITIVITY = (0.2, 0.3, 0.4)
FILTER_BURN_IN = 5


@dataclass
class RunArtifacts:
    trace_csv: str
    summary_json: str
    heatmap_svg: str
    fingerprint: str
    summary: dict = None


def build_dataset(cfg):
    if cfg.spectral:
        return build_1d_dataset(cfg.target, cfg.n_points)
    if cfg.target == "mnist_subset":
        full = load_idx(cfg.mnist_images, cfg.mnist_labels)
        return subsample(full, cfg.subsample, cfg.seed)
    return gaussian_clusters(n=cfg.subsample, dim=cfg.widths[0], seed=cfg.seed)


def _run_optimizer(cfg, obj, theta0, callback):
    stop = StoppingRule(cfg.epsilon, cfg.max_iter, cfg.stall_window)
    p = dict(cfg.optimizer_params)
    name = cfg.optimizer
    if name == "gd":
        return gd_run(obj, theta0, p.get("step_size", 0.1), stop, callback)
    if name == "cg":
        return cg_run(obj, theta0, stop, callback)
    if name == "tnc":
        kw = {}
        if "eta" in p:
            eta = float(p["eta"])
            kw["eta_rule"] = lambda gnorm: eta
        if "curvature_eps" in p:
            kw["curvature_eps"] = float(p["curvature_eps"])
        return tnc_run(obj, theta0, stop, callback=callback,
                       inner_maxiter=int(p.get("inner_maxiter", 20)), **kw)
    if name == "bfgs":
        return bfgs_run(obj, theta0, stop, callback)
    if name == "lbfgs":
        return lbfgs_run(obj, theta0, int(p.get("memory", 10)), stop, callback)
    if name == "powell":
        return powell_run(obj, theta0, stop, callback, bracket=tuple(p.get("bracket", (-1.0, 1.0))),
                          tol=float(p.get("tol", 1e-4)))
    if name == "pso":
        swarm = SwarmConfig(seed=cfg.seed, init_width=float(p.get("init_width", 1.0)),
                            max_particles=int(p.get("max_particles", 5000)))
        return pso_run(obj, theta0, swarm, stop, callback)
    if name == "mc":
        return mc_run(obj, theta0, float(p.get("delta", 0.05)), int(p.get("n_samples", 100)),
                      stop, callback, seed=cfg.seed)
    raise AssertionError(name)


def crossing_epochs(trace, threshold):
    """First recorded epoch at which each metric column drops below
    ``threshold`` (None if never)."""
    out = {}
    for name in trace.columns:
        out[name] = next((e for e, v in zip(trace.epochs, trace.column(name)) if v < threshold), None)
    return out


def low_to_high(crossings):
    """True when the first entry is finite and the sequence never
    decreases, counting a missing crossing as +infinity."""
    seq = [math.inf if c is None else c for c in crossings]
    if not seq or seq[0] == math.inf:
        return False
    return all(a <= b for a, b in zip(seq, seq[1:]))


def filter_fraction(trace, delta_label, burn_in=FILTER_BURN_IN):
    """Fraction of recorded epochs after ``burn_in`` with e_low < e_high."""
    low = trace.column(f"e_low_d{delta_label}")
    high = trace.column(f"e_high_d{delta_label}")
    pairs = [(l, h) for e, l, h in zip(trace.epochs, low, high) if e > burn_in]
    if not pairs:
        return None
    return sum(l < h for l, h in pairs) / len(pairs)


def run_experiment(cfg, out_dir=None):
    """Train one network and write ``trace.csv``, ``summary.json`` and
    ``heatmap.svg`` into ``out_dir`` (default ``cfg.out``)."""
    if isinstance(cfg, dict):
        cfg = ExperimentConfig.from_dict(cfg)
    out_dir = out_dir or cfg.out
    os.makedirs(out_dir, exist_ok=True)
    paths = RunArtifacts(os.path.join(out_dir, "trace.csv"), os.path.join(out_dir, "summary.json"),
                         os.path.join(out_dir, "heatmap.svg"), cfg.fingerprint())
    try:
        return _run(cfg, paths)
    except BaseException:
        for p in (paths.trace_csv, paths.summary_json, paths.heatmap_svg):
            if os.path.exists(p):
                os.remove(p)
        raise


def _run(cfg, paths):
    data = build_dataset(cfg)
    spec = MlpSpec(cfg.widths)
    obj = make_objective(spec, data)
    theta0 = init_params(spec, cfg.seed)

    if cfg.spectral:
        target = dft(data.targets[:, 0])
        ks = cfg.track if cfg.track is not None else select_peak_frequencies(target, cfg.peak_ratio)
        trace = Trace("spectral", spectral_columns(ks))

        def measure(theta):
            out = forward(spec, theta, data.inputs)[:, 0]
            return relative_spectral_error(target, dft(out), ks)
    else:
        ks = None
        probe = FilterProbe(data.inputs, data.targets, cfg.deltas)
        trace = Trace("filter", filter_columns(cfg.deltas))

        def measure(theta):
            errs = probe(forward(spec, theta, data.inputs))
            return [v for d in cfg.deltas for v in errs[d]]

    crossed = set()

    def callback(epoch, theta):
        if epoch % cfg.record_every:
            return False
        values = measure(theta)
        trace.append(epoch, obj.fun(theta), values)
        if cfg.stop_threshold is None or not cfg.spectral:
            return False
        crossed.update(k for k, v in zip(ks, values) if v < cfg.stop_threshold)
        return len(crossed) == len(ks)

    theta, reports = _run_optimizer(cfg, obj, theta0, callback)
    final = reports[-1]
    if trace.epochs[-1] != final.epoch:
        trace.append(final.epoch, final.loss, measure(theta))

    emit_csv(trace, paths.trace_csv)
    emit_heatmap_svg(trace, paths.heatmap_svg,
                     title=f"{cfg.optimizer} {MlpSpec(cfg.widths)} {cfg.target} seed {cfg.seed}")
    summary = {
        "fingerprint": paths.fingerprint,
        "config": cfg.to_dict(),
        "backend": _numba.backend_name(),
        "final_loss": final.loss,
        "epochs": final.epoch,
        "status": final.status.value,
        "evals": obj.eval_count,
        "gradient_calls": obj.gradient_calls,
        "tracked": trace.columns,
    }
    if cfg.spectral:
        summary["tracked_frequencies"] = [int(k) for k in ks]
        summary["convergence_epochs"] = {format(t, "g"): crossing_epochs(trace, t) for t in SENSITIVITY}
        summary["low_to_high"] = {
            format(t, "g"): low_to_high(list(crossing_epochs(trace, t).values())) for t in SENSITIVITY}
    else:
        summary["low_below_high_fraction"] = {
            format(d, "g"): filter_fraction(trace, format(d, "g")) for d in cfg.deltas}
    with open(paths.summary_json, "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    paths.summary = summary
    log.info("run %s finished: %s after %d epochs, loss %.3g",
             paths.fingerprint[:12], final.status.value, final.epoch, final.loss)
    return paths
