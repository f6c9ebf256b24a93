"""Gradient-using trainers: gradient descent, Polak-Ribiere CG, truncated
Newton, BFGS and L-BFGS. Gradients are forward differences throughout."""

from collections import deque
import math

import numpy as np

from ..errors import NonDescentDirection
from ..linesearch import WolfeConfig, wolfe_search
from ..objective import FdConfig, fd_hessvec, fd_value_and_gradient
from .base import Recorder, Status, StoppingRule


def _search(obj, theta, loss, g, d, wolfe):
    """Wolfe step along ``d``; on failure retry once along ``-g``.

    Returns ``(alpha, d, restarted)`` or None when both attempts fail.
    """
    tries = [d] if np.array_equal(d, -g) else [d, -g]
    for k, direction in enumerate(tries):
        try:
            out = wolfe_search(obj, theta, direction, wolfe, phi0=loss)
        except NonDescentDirection:
            continue
        if out.accepted:
            return out.alpha, direction, k > 0
    return None


def _gradient_done(recorder, theta, gnorm, eps):
    if gnorm <= eps:
        return recorder.finish(theta, Status.GRAD_TOL)
    return recorder.finish(theta, Status.MAX_ITER)


def gd_run(obj, theta0, step_size, stop=StoppingRule(), callback=None, fd=FdConfig()):
    """Fixed-step gradient descent."""
    if not step_size > 0:
        raise ValueError("step_size must be positive")
    rec = Recorder(obj, callback)
    theta = np.array(theta0, dtype=float)
    loss, g = fd_value_and_gradient(obj, theta, fd)
    gnorm = np.linalg.norm(g)
    if rec(0, theta, loss, gnorm):
        return rec.finish(theta, Status.STOPPED)
    for epoch in range(1, stop.max_iter + 1):
        if gnorm <= stop.epsilon:
            break
        theta = theta - step_size * g
        loss, g = fd_value_and_gradient(obj, theta, fd)
        gnorm = np.linalg.norm(g)
        if rec(epoch, theta, loss, gnorm):
            return rec.finish(theta, Status.STOPPED)
    return _gradient_done(rec, theta, gnorm, stop.epsilon)


def cg_run(obj, theta0, stop=StoppingRule(), callback=None, wolfe=WolfeConfig(), fd=FdConfig()):
    """Polak-Ribiere conjugate gradient with strong-Wolfe steps.

    The direction is reset to ``-g`` whenever it fails to descend.
    """
    rec = Recorder(obj, callback)
    theta = np.array(theta0, dtype=float)
    loss, g = fd_value_and_gradient(obj, theta, fd)
    gnorm = np.linalg.norm(g)
    d = -g
    if rec(0, theta, loss, gnorm):
        return rec.finish(theta, Status.STOPPED)
    for epoch in range(1, stop.max_iter + 1):
        if gnorm <= stop.epsilon:
            break
        step = _search(obj, theta, loss, g, d, wolfe)
        if step is None:
            return rec.finish(theta, Status.LINE_SEARCH_FAILED)
        alpha, d, _ = step
        rec.reports[-1].slope = float(d @ g)
        theta = theta + alpha * d
        g_old = g
        loss, g = fd_value_and_gradient(obj, theta, fd)
        gnorm = np.linalg.norm(g)
        beta = g @ (g - g_old) / (g_old @ g_old)
        d = -g + beta * d
        if d @ g >= 0:
            d = -g
        if rec(epoch, theta, loss, gnorm):
            return rec.finish(theta, Status.STOPPED)
    return _gradient_done(rec, theta, gnorm, stop.epsilon)


def default_eta(gnorm):
    """Forcing term ``min(0.5, sqrt(|g|))``."""
    return min(0.5, math.sqrt(gnorm))


def newton_cg_direction(hessvec, g, eta, curvature_eps, maxiter):
    """Approximately solve ``H p = -g`` by conjugate gradients.

    ``hessvec(v)`` returns ``H v``. Exits on non-positive curvature
    (``l^T H l <= curvature_eps * delta``), on ``|r| / |g| <= eta``, or
    after ``maxiter`` inner steps. Returns ``(d, i)`` where ``i`` is the
    number of completed inner steps; ``d = -g`` when none completed.
    """
    gnorm = np.linalg.norm(g)
    p = np.zeros_like(g)
    r = -g
    l = r.copy()
    rr = r @ r
    delta = rr
    i = 0
    while i < maxiter:
        q = hessvec(l)
        curv = l @ q
        if not curv > curvature_eps * delta:
            break
        alpha = rr / curv
        p = p + alpha * l
        r = r - alpha * q
        i += 1
        rr_new = r @ r
        if math.sqrt(rr_new) / gnorm <= eta:
            break
        beta = rr_new / rr
        l = r + beta * l
        delta = rr_new + beta * beta * delta
        rr = rr_new
    if i == 0:
        return -g, 0
    return p, i


def tnc_run(obj, theta0, stop=StoppingRule(), eta_rule=default_eta, callback=None,
            inner_maxiter=20, curvature_eps=None, wolfe=WolfeConfig(), fd=FdConfig()):
    """Truncated Newton: inner CG on the finite-difference Hessian, then a
    strong-Wolfe step along its output."""
    if curvature_eps is None:
        curvature_eps = stop.epsilon
    rec = Recorder(obj, callback)
    theta = np.array(theta0, dtype=float)
    loss, g = fd_value_and_gradient(obj, theta, fd)
    gnorm = np.linalg.norm(g)
    if rec(0, theta, loss, gnorm):
        return rec.finish(theta, Status.STOPPED)
    for epoch in range(1, stop.max_iter + 1):
        if gnorm <= stop.epsilon:
            break
        here, grad_here = theta, g
        d, _ = newton_cg_direction(lambda v: fd_hessvec(obj, here, v, fd, grad=grad_here),
                                   g, eta_rule(gnorm), curvature_eps, inner_maxiter)
        step = _search(obj, theta, loss, g, d, wolfe)
        if step is None:
            return rec.finish(theta, Status.LINE_SEARCH_FAILED)
        alpha, d, _ = step
        rec.reports[-1].slope = float(d @ g)
        theta = theta + alpha * d
        loss, g = fd_value_and_gradient(obj, theta, fd)
        gnorm = np.linalg.norm(g)
        if rec(epoch, theta, loss, gnorm):
            return rec.finish(theta, Status.STOPPED)
    return _gradient_done(rec, theta, gnorm, stop.epsilon)


def bfgs_update(H, s, y):
    """Inverse-Hessian update
    ``(I - rho s y^T) H (I - rho y s^T) + rho s s^T`` with ``rho = 1/(s^T y)``,
    expanded so the result is symmetric to the last bit when H is."""
    rho = 1.0 / (s @ y)
    Hy = H @ y
    return (H - rho * (np.outer(s, Hy) + np.outer(Hy, s))
            + (rho * rho * (y @ Hy) + rho) * np.outer(s, s))


def bfgs_run(obj, theta0, stop=StoppingRule(), callback=None, wolfe=WolfeConfig(),
             fd=FdConfig(), on_update=None):
    """BFGS with ``H_0 = I``.

    The update is skipped when ``s^T y <= 1e-10 |s| |y|``. ``on_update``
    is called as ``on_update(H_new, s, y)`` after each applied update.
    """
    rec = Recorder(obj, callback)
    theta = np.array(theta0, dtype=float)
    n = theta.size
    H = np.eye(n)
    loss, g = fd_value_and_gradient(obj, theta, fd)
    gnorm = np.linalg.norm(g)
    if rec(0, theta, loss, gnorm):
        return rec.finish(theta, Status.STOPPED)
    for epoch in range(1, stop.max_iter + 1):
        if gnorm <= stop.epsilon:
            break
        d = -H @ g
        if d @ g >= 0:
            H = np.eye(n)
            d = -g
        step = _search(obj, theta, loss, g, d, wolfe)
        if step is None:
            return rec.finish(theta, Status.LINE_SEARCH_FAILED)
        alpha, d, restarted = step
        if restarted:
            H = np.eye(n)
        rec.reports[-1].slope = float(d @ g)
        theta_new = theta + alpha * d
        loss, g_new = fd_value_and_gradient(obj, theta_new, fd)
        s = theta_new - theta
        y = g_new - g
        if s @ y > 1e-10 * np.linalg.norm(s) * np.linalg.norm(y):
            H = bfgs_update(H, s, y)
            if on_update is not None:
                on_update(H, s, y)
        theta, g = theta_new, g_new
        gnorm = np.linalg.norm(g)
        if rec(epoch, theta, loss, gnorm):
            return rec.finish(theta, Status.STOPPED)
    return _gradient_done(rec, theta, gnorm, stop.epsilon)


def two_loop(g, pairs):
    """``H g`` for the L-BFGS inverse Hessian built from ``pairs`` of
    ``(s, y, 1/(s^T y))`` (oldest first) with ``H_0 = I``."""
    q = g.copy()
    alphas = []
    for s, y, rho in reversed(pairs):
        a = rho * (s @ q)
        q -= a * y
        alphas.append(a)
    r = q
    for (s, y, rho), a in zip(pairs, reversed(alphas)):
        b = rho * (y @ r)
        r += (a - b) * s
    return r


def lbfgs_run(obj, theta0, memory=10, stop=StoppingRule(), callback=None,
              wolfe=WolfeConfig(), fd=FdConfig()):
    """Limited-memory BFGS keeping the last ``memory`` curvature pairs;
    pairs with ``s^T y <= 0`` are dropped."""
    if memory < 1:
        raise ValueError("memory must be >= 1")
    rec = Recorder(obj, callback)
    theta = np.array(theta0, dtype=float)
    pairs = deque(maxlen=memory)
    loss, g = fd_value_and_gradient(obj, theta, fd)
    gnorm = np.linalg.norm(g)
    d = -g
    if rec(0, theta, loss, gnorm):
        return rec.finish(theta, Status.STOPPED)
    for epoch in range(1, stop.max_iter + 1):
        if gnorm <= stop.epsilon:
            break
        if d @ g >= 0:
            pairs.clear()
            d = -g
        step = _search(obj, theta, loss, g, d, wolfe)
        if step is None:
            return rec.finish(theta, Status.LINE_SEARCH_FAILED)
        alpha, d, restarted = step
        if restarted:
            pairs.clear()
        rec.reports[-1].slope = float(d @ g)
        theta_new = theta + alpha * d
        loss, g_new = fd_value_and_gradient(obj, theta_new, fd)
        s = theta_new - theta
        y = g_new - g
        sy = s @ y
        if sy > 0:
            pairs.append((s, y, 1.0 / sy))
        theta, g = theta_new, g_new
        gnorm = np.linalg.norm(g)
        d = -two_loop(g, list(pairs))
        if rec(epoch, theta, loss, gnorm):
            return rec.finish(theta, Status.STOPPED)
    return _gradient_done(rec, theta, gnorm, stop.epsilon)
