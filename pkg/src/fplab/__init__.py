"""Optimization laboratory for frequency-resolved studies of MLP training."""

from ._numba import USE_NUMBA, backend_name
from .errors import *  # noqa: F401,F403
from .objective import FdConfig, Objective, fd_gradient, fd_hessvec, fd_value_and_gradient
from .mlp import Dataset, MlpParams, MlpSpec, forward, init_params, make_objective, mse_loss, pack, unpack

__version__ = "0.1.0"
