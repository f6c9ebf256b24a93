"""Frequency-resolved error measures.

Two instruments: per-frequency relative DFT error for signals sampled on a
1-d grid, and a Gaussian low-pass/high-pass split of labels for data that
has no usable Fourier transform (high-dimensional inputs).
"""

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import DegenerateDenominator, ZeroTargetFrequency


@dataclass(frozen=True)
class SpectrumView:
    """``coeffs[k] = (1/n) sum_{j=1..n} f_j exp(-2 pi i j k / n)``."""

    coeffs: np.ndarray

    @property
    def n(self):
        return len(self.coeffs)

    @property
    def frequencies(self):
        return np.arange(self.n)

    def magnitude(self, k=None):
        mag = np.abs(self.coeffs)
        return mag if k is None else mag[k]


def dft(samples):
    """1/n-normalised DFT with samples indexed from 1 (so coefficient k
    carries the extra phase ``exp(-2 pi i k / n)`` relative to
    ``numpy.fft.fft``)."""
    f = np.asarray(samples, dtype=float).ravel()
    n = f.size
    if n < 1:
        raise ValueError("need at least one sample")
    k = np.arange(n)
    return SpectrumView(np.fft.fft(f) * np.exp(-2j * np.pi * k / n) / n)


def relative_spectral_error(target, output, k):
    """``|out_k - target_k| / |target_k|``; ``k`` may be an int or sequence."""
    ks = np.atleast_1d(np.asarray(k, dtype=int))
    ref = target.coeffs[ks]
    if np.any(np.abs(ref) == 0):
        raise ZeroTargetFrequency(f"target spectrum vanishes at k={ks[np.abs(ref) == 0].tolist()}")
    err = np.abs(output.coeffs[ks] - ref) / np.abs(ref)
    return float(err[0]) if np.ndim(k) == 0 else err


def select_peak_frequencies(target, threshold_ratio=0.1):
    """Indices ``k <= n // 2`` whose magnitude is at least
    ``threshold_ratio`` times the largest one."""
    if not 0 < threshold_ratio <= 1:
        raise ValueError("threshold_ratio must lie in (0, 1]")
    mag = target.magnitude()[: target.n // 2 + 1]
    peak = mag.max()
    if peak == 0:
        return [0]
    return [int(k) for k in np.flatnonzero(mag >= threshold_ratio * peak)]


# ---------------------------------------------------------------------------
# Gaussian filter
# ---------------------------------------------------------------------------

def gaussian_weights(inputs, delta):
    """Row-normalised kernel ``G(x_i - x_j) / C_i`` with
    ``G(u) = exp(-|u|^2 / (2 delta))``; ``delta`` is a variance."""
    if not delta > 0:
        raise ValueError("delta must be positive")
    X = np.ascontiguousarray(np.asarray(inputs, dtype=float))
    if X.ndim == 1:
        X = X[:, None]
    G = np.exp(-kernels.pairwise_sqdist(X) / (2.0 * delta))
    return G / G.sum(axis=1, keepdims=True)


def gaussian_lowpass(inputs, labels, delta, weights=None):
    """Per-sample low-frequency part of ``labels``."""
    Y = np.asarray(labels, dtype=float)
    if weights is None:
        weights = gaussian_weights(inputs, delta)
    flat = Y.reshape(len(Y), -1)
    return (weights @ flat).reshape(Y.shape)


@dataclass
class FilterDecomposition:
    delta: float
    y_low: np.ndarray
    y_high: np.ndarray
    e_low: float = None
    e_high: float = None


def decompose(inputs, labels, delta, weights=None):
    y = np.asarray(labels, dtype=float)
    low = gaussian_lowpass(inputs, y, delta, weights)
    return FilterDecomposition(delta, low, y - low)


def _rel(num, den):
    d = np.sum(den * den)
    if d == 0:
        raise DegenerateDenominator("filtered label part is identically zero")
    return float(np.sqrt(np.sum(num * num) / d))


def filter_errors(labels, outputs, inputs, delta, weights=None):
    """Relative L2 errors ``(e_low, e_high)`` between the filtered labels
    and the identically filtered network outputs."""
    y = np.asarray(labels, dtype=float)
    h = np.asarray(outputs, dtype=float)
    if y.shape != h.shape:
        raise ValueError(f"labels {y.shape} and outputs {h.shape} are not aligned")
    if weights is None:
        weights = gaussian_weights(inputs, delta)
    y_low = gaussian_lowpass(inputs, y, delta, weights)
    h_low = gaussian_lowpass(inputs, h, delta, weights)
    y_high, h_high = y - y_low, h - h_low
    return _rel(y_low - h_low, y_low), _rel(y_high - h_high, y_high)


class FilterProbe:
    """Caches the kernel matrices for a fixed input set and several deltas."""

    def __init__(self, inputs, labels, deltas):
        X = np.ascontiguousarray(np.asarray(inputs, dtype=float))
        self.labels = np.asarray(labels, dtype=float)
        self.deltas = [float(d) for d in deltas]
        D = kernels.pairwise_sqdist(X)
        self.weights = {}
        for delta in self.deltas:
            G = np.exp(-D / (2.0 * delta))
            self.weights[delta] = G / G.sum(axis=1, keepdims=True)
        self.inputs = X

    def __call__(self, outputs):
        return {d: filter_errors(self.labels, outputs, self.inputs, d, self.weights[d])
                for d in self.deltas}
