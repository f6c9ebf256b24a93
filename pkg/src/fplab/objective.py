"""Black-box objectives and the finite-difference derivatives built on them."""

from dataclasses import dataclass, field
import math

import numpy as np

from .errors import DimensionMismatch, NonFiniteLoss

EPS_MACH = np.finfo(float).eps


@dataclass(frozen=True)
class FdConfig:
    """Finite-difference steps.

    ``zeta`` is the forward-difference step, the square root of double
    precision machine accuracy. ``hv_step`` scales the Hessian-vector step
    and defaults to ``sqrt(zeta)``.
    """

    zeta: float = 1.49e-8
    hv_step: float = None

    def __post_init__(self):
        if self.hv_step is None:
            object.__setattr__(self, "hv_step", math.sqrt(self.zeta))
        if not (self.zeta > 0 and self.hv_step > 0):
            raise ValueError("finite-difference steps must be positive")


class Objective:
    """Counted, pure map from a flat parameter vector to a scalar loss.

    Parameters
    ----------
    fun : callable
        ``fun(theta) -> float``. Must be deterministic.
    dim : int
        Length of the parameter vector.
    increments : callable, optional
        ``increments(theta, zeta) -> (diffs, base)`` returning
        ``L(theta + zeta e_i) - L(theta)`` for all i. Lets structured
        objectives (MLPs) skip ``dim`` full evaluations per gradient.
    batch : callable, optional
        ``batch(thetas) -> losses`` for a 2-d stack of parameter vectors.
    """

    def __init__(self, fun, dim, increments=None, batch=None):
        self.fun = fun
        self.dim = int(dim)
        self._increments = increments
        self._batch = batch
        self.eval_count = 0
        self.gradient_calls = 0

    def _check(self, theta):
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (self.dim,):
            raise DimensionMismatch(f"expected {self.dim} parameters, got shape {theta.shape}")
        return theta

    def __call__(self, theta):
        theta = self._check(theta)
        value = float(self.fun(theta))
        self.eval_count += 1
        if not math.isfinite(value):
            raise NonFiniteLoss(f"loss evaluated to {value}")
        return value

    def many(self, thetas, nonfinite="raise"):
        """Evaluate a stack of parameter vectors; counts one per row.

        ``nonfinite="inf"`` maps NaN/Inf losses to ``+inf`` instead of raising.
        """
        thetas = np.ascontiguousarray(thetas, dtype=float)
        if thetas.ndim != 2 or thetas.shape[1] != self.dim:
            raise DimensionMismatch(f"expected (k, {self.dim}) stack, got {thetas.shape}")
        if self._batch is not None:
            values = np.asarray(self._batch(thetas), dtype=float)
        else:
            values = np.array([float(self.fun(t)) for t in thetas])
        self.eval_count += len(values)
        bad = ~np.isfinite(values)
        if bad.any():
            if nonfinite != "inf":
                raise NonFiniteLoss("non-finite loss in batch evaluation")
            values[bad] = np.inf
        return values

    @property
    def has_increments(self):
        return self._increments is not None


def fd_value_and_gradient(obj, theta, cfg=FdConfig()):
    """Loss and forward-difference gradient; exactly ``dim + 1`` evaluations."""
    theta = obj._check(theta)
    if not np.all(np.isfinite(theta)):
        raise NonFiniteLoss("parameters contain NaN/Inf")
    obj.gradient_calls += 1
    base = obj(theta)
    zeta = cfg.zeta
    if obj.has_increments:
        diffs, _ = obj._increments(theta, zeta)
        diffs = np.asarray(diffs, dtype=float)
        obj.eval_count += obj.dim
        if not np.all(np.isfinite(diffs)):
            raise NonFiniteLoss("non-finite loss in gradient evaluation")
        return base, diffs / zeta
    g = np.empty(obj.dim)
    probe = theta.copy()
    for i in range(obj.dim):
        probe[i] = theta[i] + zeta
        g[i] = (obj(probe) - base) / zeta
        probe[i] = theta[i]
    return base, g


def fd_gradient(obj, theta, cfg=FdConfig()):
    """Forward-difference gradient ``(L(theta + zeta e_i) - L(theta)) / zeta``.

    The base value is computed once and shared, so each call costs
    ``dim + 1`` loss evaluations.
    """
    return fd_value_and_gradient(obj, theta, cfg)[1]


def fd_hessvec(obj, theta, v, cfg=FdConfig(), grad=None):
    """Hessian-vector product by differencing two finite-difference gradients.

    The step is ``hv_step * (1 + |theta|) / |v|``. ``grad`` may carry an
    already computed gradient at ``theta`` to save one gradient evaluation.
    """
    theta = obj._check(theta)
    v = np.asarray(v, dtype=float)
    if v.shape != theta.shape:
        raise DimensionMismatch("direction and parameters differ in length")
    vnorm = np.linalg.norm(v)
    if vnorm == 0.0:
        return np.zeros_like(theta)
    h = cfg.hv_step * (1.0 + np.linalg.norm(theta)) / max(vnorm, EPS_MACH)
    if grad is None:
        grad = fd_gradient(obj, theta, cfg)
    g_shift = fd_gradient(obj, theta + h * v, cfg)
    return (g_shift - grad) / h


@dataclass
class QuadraticObjective:
    """``0.5 x^T A x + b^T x`` helper used in tests and the verify suite."""

    A: np.ndarray
    b: np.ndarray = field(default=None)

    def __post_init__(self):
        self.A = np.atleast_2d(np.asarray(self.A, dtype=float))
        if self.b is None:
            self.b = np.zeros(self.A.shape[0])

    def __call__(self, x):
        return 0.5 * x @ self.A @ x + self.b @ x

    def objective(self):
        return Objective(self, self.A.shape[0])
