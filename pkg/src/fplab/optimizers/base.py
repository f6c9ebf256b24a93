"""Shared run contract: stopping rules, per-epoch reports, callbacks."""

from dataclasses import dataclass
import enum

import numpy as np


class Status(str, enum.Enum):
    GRAD_TOL = "GradTol"
    MAX_ITER = "MaxIter"
    STALLED = "Stalled"
    LINE_SEARCH_FAILED = "LineSearchFailed"
    STOPPED = "Stopped"  # the run callback asked to stop


@dataclass(frozen=True)
class StoppingRule:
    """``epsilon`` is the gradient-norm tolerance for gradient methods and
    the stall tolerance for the gradient-free ones; ``max_iter`` bounds the
    number of outer iterations; ``stall_window`` is the look-back used by
    the stall tests."""

    epsilon: float = 1e-6
    max_iter: int = 2000
    stall_window: int = 50

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.max_iter < 0 or self.stall_window < 1:
            raise ValueError("max_iter must be >= 0 and stall_window >= 1")


@dataclass
class IterationReport:
    epoch: int
    loss: float
    grad_norm: float = None
    evals: int = 0
    status: Status = None   # set on the final report only
    slope: float = None     # d^T g of the direction taken from this point

    def as_tuple(self):
        return (self.epoch, self.loss, self.grad_norm, self.evals,
                None if self.status is None else self.status.value, self.slope)


class Recorder:
    """Collects reports and drives the user callback.

    The callback receives ``(epoch, theta)`` with a read-only copy of the
    parameters. A truthy return value ends the run with ``Status.STOPPED``.
    """

    def __init__(self, obj, callback=None):
        self.obj = obj
        self.callback = callback
        self.reports = []

    def __call__(self, epoch, theta, loss, grad_norm=None):
        self.reports.append(IterationReport(epoch, float(loss),
                                            None if grad_norm is None else float(grad_norm),
                                            self.obj.eval_count))
        if self.callback is None:
            return False
        view = np.array(theta, dtype=float)
        view.flags.writeable = False
        return bool(self.callback(epoch, view))

    def finish(self, theta, status):
        self.reports[-1].status = Status(status)
        self.reports[-1].evals = self.obj.eval_count
        return np.array(theta, dtype=float), self.reports


def final_status(reports):
    return reports[-1].status
