"""Gradient-free trainers: Powell's conjugate directions, a particle swarm
and a Monte-Carlo descent. None of them calls the gradient estimator."""

from dataclasses import dataclass

import numpy as np

from ..errors import SwarmTooLarge
from ..linesearch import golden_section
from .base import Recorder, Status, StoppingRule


def _line_min(obj, y, fy, s, bracket, tol):
    lam = golden_section(lambda t: obj(y + t * s), bracket[0], bracket[1], tol)
    y_new = y + lam * s
    f_new = obj(y_new)
    # golden section is only exact for unimodal lines; move on strict decrease only
    if not f_new < fy:
        return y, fy
    return y_new, f_new


def powell_run(obj, theta0, stop=StoppingRule(), callback=None, bracket=(-1.0, 1.0), tol=1e-6):
    """Powell's conjugate-direction method.

    Each epoch is one sweep of golden-section line minimisations over the
    direction set (initially the coordinate axes). The composite step
    ``s_p = y_p - y_0`` replaces the direction of largest single decrease
    when ``2(f1 - 2 f2 + f3)(f1 - f2 - dm)^2 < dm (f1 - f3)^2``. Stops when
    ``|s_p| <= epsilon``.
    """
    rec = Recorder(obj, callback)
    theta = np.array(theta0, dtype=float)
    p = theta.size
    dirs = [row for row in np.eye(p)]
    loss = obj(theta)
    if rec(0, theta, loss):
        return rec.finish(theta, Status.STOPPED)
    for epoch in range(1, stop.max_iter + 1):
        y0, f1 = theta, loss
        y, fy = y0, f1
        drops = np.empty(p)
        for k in range(p):
            y, f_next = _line_min(obj, y, fy, dirs[k], bracket, tol)
            drops[k] = fy - f_next
            fy = f_next
        s_p = y - y0
        if np.linalg.norm(s_p) <= stop.epsilon:
            theta, loss = y, fy
            rec(epoch, theta, loss)
            return rec.finish(theta, Status.STALLED)
        m = int(np.argmax(drops))
        dm = drops[m]
        f2 = fy
        f3 = obj(2.0 * y - y0)
        if 2.0 * (f1 - 2.0 * f2 + f3) * (f1 - f2 - dm) ** 2 < dm * (f1 - f3) ** 2:
            theta, loss = _line_min(obj, y, fy, s_p, bracket, tol)
            del dirs[m]
            dirs.append(s_p)
        else:
            theta, loss = y, fy
        if rec(epoch, theta, loss):
            return rec.finish(theta, Status.STOPPED)
    return rec.finish(theta, Status.MAX_ITER)


@dataclass(frozen=True)
class SwarmConfig:
    """``init_width``: particles start at ``theta0 + U(-w/2, w/2)``.
    ``max_particles``: refuse to build swarms larger than this."""

    seed: int = 0
    init_width: float = 1.0
    max_particles: int = 5000


def pso_run(obj, theta0, swarm=SwarmConfig(), stop=StoppingRule(), callback=None):
    """Particle swarm with ``N = 2 dim`` particles.

    Particle ``i`` carries the fixed offset ``h_i``, the i-th column of
    ``(I, -I)``, and moves by
    ``x <- x + h_i + 2 r1 (pbest_i - x) + 2 r2 (gbest - x)`` with
    ``r1, r2 ~ U[0, 1]`` drawn per particle and iteration. The reported
    parameters are the global best. Stops when the global best has moved
    by at most ``epsilon`` over ``stall_window`` iterations.
    """
    theta0 = np.array(theta0, dtype=float)
    p = theta0.size
    n = 2 * p
    if n > swarm.max_particles:
        raise SwarmTooLarge(f"{n} particles exceed the budget of {swarm.max_particles}")
    rng = np.random.default_rng(swarm.seed)
    rec = Recorder(obj, callback)
    x = theta0 + swarm.init_width * (rng.random((n, p)) - 0.5)
    offsets = np.concatenate((np.eye(p), -np.eye(p)))
    fx = obj.many(x, nonfinite="inf")
    pbest, pbest_f = x.copy(), fx.copy()
    best = int(np.argmin(pbest_f))
    gbest, gbest_f = pbest[best].copy(), pbest_f[best]
    history = [gbest.copy()]
    if rec(0, gbest, gbest_f):
        return rec.finish(gbest, Status.STOPPED)
    for epoch in range(1, stop.max_iter + 1):
        r1 = rng.random((n, 1))
        r2 = rng.random((n, 1))
        x = x + offsets + 2.0 * r1 * (pbest - x) + 2.0 * r2 * (gbest - x)
        fx = obj.many(x, nonfinite="inf")
        better = fx < pbest_f
        pbest[better] = x[better]
        pbest_f[better] = fx[better]
        best = int(np.argmin(pbest_f))
        if pbest_f[best] < gbest_f:
            gbest, gbest_f = pbest[best].copy(), pbest_f[best]
        history.append(gbest.copy())
        if rec(epoch, gbest, gbest_f):
            return rec.finish(gbest, Status.STOPPED)
        if epoch >= stop.stall_window:
            if np.linalg.norm(history[-1] - history[-1 - stop.stall_window]) <= stop.epsilon:
                return rec.finish(gbest, Status.STALLED)
            history.pop(0)
    return rec.finish(gbest, Status.MAX_ITER)


def mc_run(obj, theta0, delta=0.05, n_samples=100, stop=StoppingRule(), callback=None, seed=0):
    """Monte-Carlo descent: each iteration draws ``n_samples`` points from
    ``N(theta, delta^2 I)`` and moves to the best of them if it beats the
    incumbent. Stops when the loss fell by at most ``epsilon`` over
    ``stall_window`` iterations."""
    if not delta > 0 or n_samples < 1:
        raise ValueError("need delta > 0 and n_samples >= 1")
    rng = np.random.default_rng(seed)
    rec = Recorder(obj, callback)
    theta = np.array(theta0, dtype=float)
    loss = obj(theta)
    losses = [loss]
    if rec(0, theta, loss):
        return rec.finish(theta, Status.STOPPED)
    for epoch in range(1, stop.max_iter + 1):
        cand = theta + delta * rng.standard_normal((n_samples, theta.size))
        fc = obj.many(cand)
        k = int(np.argmin(fc))
        if fc[k] < loss:
            theta, loss = cand[k], float(fc[k])
        losses.append(loss)
        if rec(epoch, theta, loss):
            return rec.finish(theta, Status.STOPPED)
        if epoch >= stop.stall_window and losses[-1 - stop.stall_window] - loss <= stop.epsilon:
            return rec.finish(theta, Status.STALLED)
    return rec.finish(theta, Status.MAX_ITER)
