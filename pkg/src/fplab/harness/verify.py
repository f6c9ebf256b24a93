"""Invariant suite on small synthetic objectives (``fplab verify``)."""

from dataclasses import dataclass

import numpy as np

from .. import kernels
from ..linesearch import WolfeConfig, cubicmin, quadmin, wolfe_search
from ..mlp import Dataset, MlpSpec, init_params, make_objective
from ..objective import FdConfig, Objective, QuadraticObjective, fd_gradient
from ..optimizers import (StoppingRule, bfgs_run, cg_run, lbfgs_run, powell_run, tnc_run)
from ..spectrum import decompose, dft


@dataclass
class Check:
    name: str
    ok: bool
    detail: str = ""

    def __post_init__(self):
        self.ok = bool(self.ok)


def _quad():
    return QuadraticObjective(np.diag([1.0, 10.0]))


def check_cg():
    obj = _quad().objective()
    theta, reps = cg_run(obj, np.array([1.0, 1.0]), StoppingRule(1e-6, 10))
    err = np.linalg.norm(theta)
    ok = reps[-1].grad_norm <= 1e-6 and err <= 1e-4
    return Check("cg solves diag(1,10) in 10 iterations", ok,
                 f"|g|={reps[-1].grad_norm:.2e} |x-x*|={err:.2e}")


def check_tnc():
    obj = _quad().objective()
    theta, _ = tnc_run(obj, np.array([1.0, 1.0]), StoppingRule(1e-6, 1), eta_rule=lambda g: 1e-8)
    err = np.linalg.norm(theta)
    return Check("tnc solves diag(1,10) in one outer step", err <= 1e-3, f"|x-x*|={err:.2e}")


def check_secant():
    rng = np.random.default_rng(1)
    M = rng.standard_normal((4, 4))
    obj = QuadraticObjective(M @ M.T + 4 * np.eye(4), rng.standard_normal(4)).objective()
    worst = [0.0]

    def hook(H, s, y):
        worst[0] = max(worst[0], np.linalg.norm(H @ y - s))

    bfgs_run(obj, rng.standard_normal(4), StoppingRule(1e-8, 20), on_update=hook)
    return Check("bfgs secant identity", worst[0] <= 1e-8, f"max |Hy-s|={worst[0]:.2e}")


def check_lbfgs_matches_bfgs():
    rng = np.random.default_rng(2)
    M = rng.standard_normal((5, 5))
    q = QuadraticObjective(M @ M.T + 5 * np.eye(5), rng.standard_normal(5))
    x0 = rng.standard_normal(5)
    stop = StoppingRule(1e-9, 6)
    bfgs_run(q.objective(), x0, stop, callback=_collect(xb := []))
    lbfgs_run(q.objective(), x0, 50, stop, callback=_collect(xl := []))
    n = min(len(xb), len(xl))
    gap = max(np.linalg.norm(a - b) for a, b in zip(xb[:n], xl[:n]))
    return Check("full-memory l-bfgs tracks bfgs", gap <= 1e-8, f"max iterate gap={gap:.2e}")


def _collect(store):
    def cb(epoch, theta):
        store.append(np.array(theta))
    return cb


def check_powell():
    q = QuadraticObjective(np.diag([2.0, 0.5, 3.0]), np.array([-1.0, 0.25, 0.6]))
    xstar = -np.linalg.solve(q.A, q.b)
    theta, _ = powell_run(q.objective(), np.zeros(3), StoppingRule(1e-6, 1), tol=1e-6)
    err = np.max(np.abs(theta - xstar))
    return Check("powell one sweep on separable quadratic", err <= 1e-6, f"max err={err:.2e}")


def check_wolfe(trials=100):
    rng = np.random.default_rng(3)
    cfg = WolfeConfig()
    bad = accepted = 0
    for _ in range(trials):
        a, b, c = rng.uniform(0.2, 3.0), rng.uniform(-2, 2), rng.uniform(0.5, 2.0)
        f = Objective(lambda x, a=a, b=b, c=c: a * (x[0] - c) ** 2 + 0.3 * np.sin(b * x[0]), 1)
        x0 = np.zeros(1)
        g = fd_gradient(f, x0)
        if g[0] == 0:
            continue
        d = -np.sign(g)
        out = wolfe_search(f, x0, d, cfg)
        if not out.accepted:
            continue
        accepted += 1
        exact = lambda t: 2 * a * (t - c) + 0.3 * b * np.cos(b * t)
        dphi0 = float(exact(0.0) * d[0])
        dphi = float(exact(out.alpha * d[0]) * d[0])
        # the search works with difference quotients, so allow their error
        slack = 1e-6
        if not (out.phi <= out.phi0 + cfg.rho * out.alpha * dphi0 + slack
                and abs(dphi) <= -cfg.sigma * dphi0 + slack):
            bad += 1
    return Check("strong wolfe on random 1-d functions", bad == 0 and accepted > 0,
                 f"{accepted} accepted, {bad} violations")


def check_interpolators():
    cub = lambda x: (x - 0.7) ** 3 - 2 * (x - 0.7) + 1
    dcub = lambda x: 3 * (x - 0.7) ** 2 - 2
    xc = cubicmin(0.0, cub(0.0), dcub(0.0), 3.0, cub(3.0), 1.5, cub(1.5))
    xq = quadmin(0.0, 1.0 + 0.25 * 1.3 ** 2, -2 * 0.25 * 1.3, 3.0, 1 + 0.25 * 1.7 ** 2)
    errs = (abs(xc - (0.7 + np.sqrt(2 / 3))), abs(xq - 1.3))
    return Check("interpolators exact on matching polynomials", max(errs) <= 1e-10,
                 f"cubic {errs[0]:.1e}, quad {errs[1]:.1e}")


def check_spectrum():
    rng = np.random.default_rng(4)
    worst_p = worst_s = 0.0
    for _ in range(100):
        n = int(rng.integers(2, 300))
        f = rng.standard_normal(n)
        c = dft(f).coeffs
        worst_p = max(worst_p, abs(np.sum(np.abs(c) ** 2) - np.mean(f ** 2)))
        k = np.arange(1, n)
        worst_s = max(worst_s, np.max(np.abs(c[k] - np.conj(c[n - k]))) if n > 1 else 0.0)
    return Check("parseval and conjugate symmetry", worst_p <= 1e-10 and worst_s <= 1e-10,
                 f"parseval {worst_p:.1e}, symmetry {worst_s:.1e}")


def check_filter():
    rng = np.random.default_rng(5)
    x = rng.standard_normal((40, 3))
    y = rng.standard_normal((40, 2))
    dec = decompose(x, y, 2.0)
    err = np.max(np.abs(dec.y_low + dec.y_high - y))
    return Check("low + high reconstructs labels", err <= 1e-12, f"{err:.1e}")


def check_backends():
    spec = MlpSpec((1, 8, 4, 1))
    x = np.linspace(-3, 3, 25)
    data = Dataset(x, np.sin(x))
    theta = init_params(spec, 0)
    fd = FdConfig()
    d_nb, _ = kernels.fd_increments_nb(theta, spec.widths_array, data.inputs, data.targets, fd.zeta)
    d_np, _ = kernels.fd_increments_np(theta, spec.widths_array, data.inputs, data.targets, fd.zeta)
    obj = make_objective(spec, data)
    plain = Objective(obj.fun, obj.dim)
    g_ref = fd_gradient(plain, theta, fd)
    gap = max(np.max(np.abs(d_nb - d_np)) / fd.zeta, np.max(np.abs(d_np / fd.zeta - g_ref)))
    return Check("numba and numpy kernels agree", gap <= 1e-6, f"max gradient gap={gap:.1e}")


CHECKS = (check_cg, check_tnc, check_secant, check_lbfgs_matches_bfgs, check_powell,
          check_wolfe, check_interpolators, check_spectrum, check_filter, check_backends)


def run_all():
    out = []
    for fn in CHECKS:
        try:
            out.append(fn())
        except Exception as exc:  # a crash is a failed invariant
            out.append(Check(fn.__name__, False, f"{type(exc).__name__}: {exc}"))
    return out
