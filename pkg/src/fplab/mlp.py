"""Fully connected sigmoid networks with a linear output layer."""

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import DimensionMismatch, EmptyDataset
from .objective import Objective


@dataclass(frozen=True)
class MlpSpec:
    widths: tuple

    def __post_init__(self):
        widths = tuple(int(w) for w in self.widths)
        if len(widths) < 2 or min(widths) < 1:
            raise ValueError(f"invalid widths {self.widths!r}")
        object.__setattr__(self, "widths", widths)

    @classmethod
    def parse(cls, text):
        """``"1-100-10-1"`` -> MlpSpec."""
        return cls(tuple(int(t) for t in str(text).split("-")))

    @property
    def depth(self):
        return len(self.widths) - 1

    @property
    def param_count(self):
        w = self.widths
        return sum((w[l] + 1) * w[l + 1] for l in range(self.depth))

    @property
    def widths_array(self):
        return np.asarray(self.widths, dtype=np.int64)

    def __str__(self):
        return "-".join(map(str, self.widths))


@dataclass
class MlpParams:
    weights: list  # W[l] has shape (widths[l+1], widths[l])
    biases: list


@dataclass(frozen=True)
class Dataset:
    inputs: np.ndarray   # (n, m0)
    targets: np.ndarray  # (n, mH)

    def __post_init__(self):
        x = np.ascontiguousarray(np.asarray(self.inputs, dtype=float))
        y = np.ascontiguousarray(np.asarray(self.targets, dtype=float))
        if x.ndim == 1:
            x = x[:, None]
        if y.ndim == 1:
            y = y[:, None]
        if len(x) == 0:
            raise EmptyDataset("dataset has no samples")
        if len(x) != len(y):
            raise DimensionMismatch(f"{len(x)} inputs but {len(y)} targets")
        object.__setattr__(self, "inputs", x)
        object.__setattr__(self, "targets", y)

    def __len__(self):
        return len(self.inputs)


def init_params(spec, seed):
    """Draw every weight and bias of layer l from N(0, 2 / (m_l + m_{l+1})).

    Uses ``numpy.random.default_rng(seed)`` (PCG64) and its ziggurat
    ``standard_normal``; layers are drawn in packing order.
    """
    rng = np.random.default_rng(seed)
    w = spec.widths
    parts = []
    for l in range(spec.depth):
        std = np.sqrt(2.0 / (w[l] + w[l + 1]))
        parts.append(std * rng.standard_normal((w[l] + 1) * w[l + 1]))
    return np.concatenate(parts)


def pack(spec, params):
    out = []
    if len(params.weights) != spec.depth or len(params.biases) != spec.depth:
        raise DimensionMismatch("layer count does not match spec")
    for l, (W, b) in enumerate(zip(params.weights, params.biases)):
        W = np.asarray(W, dtype=float)
        b = np.asarray(b, dtype=float).ravel()
        m_in, m_out = spec.widths[l], spec.widths[l + 1]
        if W.shape != (m_out, m_in) or b.shape != (m_out,):
            raise DimensionMismatch(f"layer {l}: W{W.shape} b{b.shape} vs {m_out}x{m_in}")
        out.append(W.ravel())
        out.append(b)
    return np.concatenate(out)


def unpack(spec, theta):
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (spec.param_count,):
        raise DimensionMismatch(f"expected {spec.param_count} parameters, got {theta.shape}")
    Ws, bs = [], []
    for W, b in kernels.layer_views(theta, spec.widths_array):
        Ws.append(W.copy())
        bs.append(b.copy())
    return MlpParams(Ws, bs)


def _flat(spec, params):
    if isinstance(params, MlpParams):
        return pack(spec, params)
    theta = np.asarray(params, dtype=float)
    if theta.shape != (spec.param_count,):
        raise DimensionMismatch(f"expected {spec.param_count} parameters, got {theta.shape}")
    return theta


def forward(spec, params, x):
    """Network output for one input point (1-d) or a batch (rows)."""
    theta = _flat(spec, params)
    x = np.asarray(x, dtype=float)
    single = x.ndim <= 1
    X = x.reshape(1, -1) if single else x
    if X.ndim != 2 or X.shape[1] != spec.widths[0]:
        raise DimensionMismatch(f"input shape {x.shape} does not match input width {spec.widths[0]}")
    X = np.ascontiguousarray(X)
    out = kernels.forward(theta, spec.widths_array, X)
    return out[0] if single else out


def mse_loss(spec, params, data):
    """Mean over samples and output components of the squared error."""
    if len(data.inputs) == 0:
        raise EmptyDataset("dataset has no samples")
    theta = _flat(spec, params)
    return kernels.mse_np(theta, spec.widths_array, data.inputs, data.targets)


def make_objective(spec, data):
    """Wrap the MSE of ``spec`` on ``data`` into an :class:`Objective`."""
    widths = spec.widths_array
    X, Y = data.inputs, data.targets
    if X.shape[1] != spec.widths[0] or Y.shape[1] != spec.widths[-1]:
        raise DimensionMismatch(f"dataset shape {X.shape}->{Y.shape} does not fit {spec}")

    def loss(theta):
        return kernels.mse_np(theta, widths, X, Y)

    def increments(theta, zeta):
        return kernels.fd_increments(np.ascontiguousarray(theta), widths, X, Y, zeta)

    def batch(thetas):
        return kernels.batch_mse(thetas, widths, X, Y)

    return Objective(loss, spec.param_count, increments=increments, batch=batch)
