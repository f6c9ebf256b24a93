"""One-dimensional searches: strong-Wolfe bracketing with cubic/quadratic
interpolation, and golden-section minimisation."""

from dataclasses import dataclass
import enum
import math

import numpy as np

from .errors import NonDescentDirection, NonFiniteLoss
from .objective import EPS_MACH, FdConfig

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class WolfeConfig:
    rho: float = 1e-4
    sigma: float = 0.9
    alpha_max: float = 50.0
    maxiter: int = 10
    fd: FdConfig = FdConfig()

    def __post_init__(self):
        if not (0 < self.rho < self.sigma < 1):
            raise ValueError("need 0 < rho < sigma < 1")
        if not self.alpha_max > 0 or self.maxiter < 1:
            raise ValueError("alpha_max must be positive and maxiter >= 1")


class SearchStatus(enum.Enum):
    ACCEPTED = "Accepted"
    FAILED = "Failed"


@dataclass
class LineSearchOutcome:
    status: SearchStatus
    alpha: float = None
    phi: float = None       # phi(alpha) when accepted
    phi0: float = None
    dphi0: float = None
    phi_evals: int = 0

    @property
    def accepted(self):
        return self.status is SearchStatus.ACCEPTED


def cubicmin(a, fa, fpa, b, fb, r, fr):
    """Minimiser on ``[min(a,b), max(a,b)]`` of the cubic through
    ``(a,fa), (b,fb), (r,fr)`` with slope ``fpa`` at ``a``; None if the cubic
    has no local minimum there or the fit is degenerate."""
    # C(x) = A t^3 + B t^2 + fpa t + fa with t = x - a
    with np.errstate(all="ignore"):
        db = b - a
        dr = r - a
        denom = (db * dr) ** 2 * (db - dr)
        if denom == 0 or not math.isfinite(denom):
            return None
        u = fb - fa - fpa * db
        v = fr - fa - fpa * dr
        A = (dr * dr * u - db * db * v) / denom
        B = (-dr ** 3 * u + db ** 3 * v) / denom
        C = fpa
        radical = B * B - 3.0 * A * C
        if not (math.isfinite(A) and math.isfinite(B)) or radical < 0:
            return None
        root = math.sqrt(radical)
        # root of C'(t) with C''(t) = 2 * sqrt(radical) > 0, in a
        # cancellation-free form for either sign of B
        if B > 0:
            t = -C / (B + root)
        elif A != 0:
            t = (-B + root) / (3.0 * A)
        else:
            return None
        if root == 0 or not math.isfinite(t):
            return None
    x = a + t
    lo, hi = min(a, b), max(a, b)
    if not lo <= x <= hi:
        return None
    return x


def quadmin(a, fa, fpa, b, fb):
    """Minimiser of the quadratic through ``(a,fa), (b,fb)`` with slope
    ``fpa`` at ``a``; None when its curvature is not positive."""
    db = b - a
    if db == 0:
        return None
    with np.errstate(all="ignore"):
        B = (fb - fa - fpa * db) / (db * db)
        if not math.isfinite(B) or B <= 0:
            return None
        x = a - fpa / (2.0 * B)
    return x if math.isfinite(x) else None


def next_alpha(alpha_min, alpha_max, alpha_r, phi_min, dphi_min, phi_max, phi_r, iter_index):
    """Trial step strictly inside the bracket spanned by ``alpha_min`` and
    ``alpha_max``: cubic fit, then quadratic fit, then bisection.

    ``alpha_min`` is the end carrying the derivative ``dphi_min``; it need
    not be the smaller abscissa.
    """
    width = abs(alpha_max - alpha_min)
    lo, hi = min(alpha_min, alpha_max), max(alpha_min, alpha_max)
    cand = None
    if iter_index > 0:
        cchk = 0.2 * width
        cand = cubicmin(alpha_min, phi_min, dphi_min, alpha_max, phi_max, alpha_r, phi_r)
        if cand is not None and not (lo + cchk < cand < hi - cchk):
            cand = None
    if cand is None:
        qchk = 0.1 * width
        cand = quadmin(alpha_min, phi_min, dphi_min, alpha_max, phi_max)
        if cand is None or not (lo + qchk < cand < hi - qchk):
            cand = 0.5 * (alpha_min + alpha_max)
    return cand


class _Phi:
    """phi(alpha) = L(theta + alpha d) with memoisation and a forward
    difference derivative taken at a fixed step in parameter space."""

    def __init__(self, obj, theta, d, fd):
        self.obj, self.theta, self.d = obj, theta, d
        dnorm = float(np.linalg.norm(d))
        # zeta measured along the line, independent of |d|
        self.h = fd.zeta / max(dnorm, EPS_MACH)
        self.cache = {}
        self.evals = 0

    def __call__(self, alpha):
        if alpha not in self.cache:
            self.cache[alpha] = self.obj(self.theta + alpha * self.d)
            self.evals += 1
        return self.cache[alpha]

    def safe(self, alpha):
        try:
            return self(alpha)
        except NonFiniteLoss:
            return math.inf

    def prime(self, alpha):
        return (self(alpha + self.h) - self(alpha)) / self.h


def wolfe_search(obj, theta, d, cfg=WolfeConfig(), phi0=None):
    """Strong-Wolfe step length along ``d``.

    Bracketing starts on ``[0, alpha_max]`` with trial step
    ``min(1, 1.01 * 2 (phi(1) - phi(0)) / phi'(0))`` (1 when that is not a
    positive number). Accepted steps satisfy both
    ``phi(a) <= phi(0) + rho a phi'(0)`` and ``|phi'(a)| <= -sigma phi'(0)``.

    Raises
    ------
    NonDescentDirection
        If the finite-difference slope ``phi'(0)`` is not negative.
    """
    theta = np.asarray(theta, dtype=float)
    d = np.asarray(d, dtype=float)
    if not np.any(d):
        raise NonDescentDirection("zero search direction")
    phi = _Phi(obj, theta, d, cfg.fd)
    if phi0 is not None:
        phi.cache[0.0] = float(phi0)
    f0 = phi(0.0)
    df0 = phi.prime(0.0)
    if not df0 < 0:
        raise NonDescentDirection(f"phi'(0) = {df0!r} is not negative")

    rho, sigma = cfg.rho, cfg.sigma
    with np.errstate(all="ignore"):
        alpha = 1.01 * 2.0 * (phi.safe(1.0) - f0) / df0
    alpha = min(1.0, alpha) if (math.isfinite(alpha) and alpha > 0) else 1.0

    a_min, f_min, df_min = 0.0, f0, df0
    a_max = cfg.alpha_max
    a_r = 0.0  # phi(a_r) is looked up lazily, only the cubic fit needs it

    def result(status, a=None, fa=None):
        return LineSearchOutcome(status, a, fa, f0, df0, phi.evals)

    for i in range(cfg.maxiter + 1):
        fa = phi.safe(alpha)
        if fa > f0 + rho * alpha * df0 or fa >= f_min:
            a_r = a_max
            a_max = alpha
        else:
            dfa = phi.prime(alpha)
            if abs(dfa) <= -sigma * df0:
                return result(SearchStatus.ACCEPTED, alpha, fa)
            if dfa * (a_max - a_min) >= 0:
                a_r = a_max
                a_max = a_min
            else:
                a_r = a_min
            a_min, f_min, df_min = alpha, fa, dfa
        if i == cfg.maxiter:
            break
        f_r = phi.safe(a_r) if i > 0 else math.nan
        alpha = next_alpha(a_min, a_max, a_r, f_min, df_min, phi.safe(a_max), f_r, i)
    return result(SearchStatus.FAILED)


def strong_wolfe_holds(phi, dphi, alpha, rho=1e-4, sigma=0.9):
    """Independent check of both strong Wolfe inequalities."""
    f0, d0 = phi(0.0), dphi(0.0)
    return phi(alpha) <= f0 + rho * alpha * d0 and abs(dphi(alpha)) <= -sigma * d0


def golden_section(f, lo, hi, tol=1e-6):
    """Golden-section minimisation on ``[lo, hi]``.

    Returns the midpoint of the final bracket, which has width at most
    ``tol``. Deterministic for any ``f``.
    """
    if not lo < hi:
        raise ValueError("need lo < hi")
    if not tol > 0:
        raise ValueError("tol must be positive")
    a, b = float(lo), float(hi)
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd_ = f(c), f(d)
    while b - a > tol:
        if fc <= fd_:
            b, d, fd_ = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd_
            d = a + GOLDEN * (b - a)
            fd_ = f(d)
    return 0.5 * (a + b)
