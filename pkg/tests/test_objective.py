import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fplab import (DimensionMismatch, FdConfig, MlpSpec, NonFiniteLoss, Objective, Dataset,
                   fd_gradient, fd_hessvec, init_params, make_objective)
from fplab.objective import QuadraticObjective, fd_value_and_gradient

ZETA = 1.49e-8


def central_diff(f, x, h=1e-5):
    # independent oracle
    g = np.zeros_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (f(x + e) - f(x - e)) / (2 * h)
    return g


def test_fd_config_defaults():
    cfg = FdConfig()
    assert cfg.zeta == 1.49e-8
    assert cfg.hv_step == math.sqrt(1.49e-8)
    with pytest.raises(ValueError):
        FdConfig(zeta=0.0)


def test_constant_loss_gives_zero_gradient():
    obj = Objective(lambda t: 3.5, 4)
    assert np.array_equal(fd_gradient(obj, np.arange(4.0)), np.zeros(4))


def test_sum_of_squares_gradient():
    obj = Objective(lambda t: float(np.sum(t ** 2)), 2)
    g = fd_gradient(obj, np.array([3.0, -1.0]))
    assert np.allclose(g, [6.0, -2.0], atol=1e-6)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=1, max_size=6),
       st.lists(st.floats(0.1, 4), min_size=6, max_size=6))
def test_quadratic_error_is_zeta_times_coefficient(x, coef):
    # for sum c_i x_i^2 the forward difference is exactly 2 c_i x_i + c_i zeta
    x = np.array(x)
    c = np.array(coef[:x.size])
    obj = Objective(lambda t: float(np.sum(c * t * t)), x.size)
    g = fd_gradient(obj, x)
    expected = 2 * c * x + c * ZETA
    # the difference quotient itself carries rounding of order eps*|L|/zeta
    tol = 4 * np.finfo(float).eps * (np.sum(c * x * x) + 1) / ZETA
    assert np.all(np.abs(g - expected) <= tol)


def test_eval_count_is_dim_plus_one():
    obj = Objective(lambda t: float(t @ t), 5)
    fd_gradient(obj, np.ones(5))
    assert obj.eval_count == 6
    assert obj.gradient_calls == 1


def test_eval_count_with_structured_increments():
    spec = MlpSpec((1, 3, 1))
    x = np.linspace(-1, 1, 7)
    obj = make_objective(spec, Dataset(x, x ** 2))
    fd_gradient(obj, init_params(spec, 0))
    assert obj.eval_count == spec.param_count + 1


def test_mlp_gradient_matches_central_difference():
    spec = MlpSpec((1, 5, 1))
    rng = np.random.default_rng(7)
    x = rng.uniform(-2, 2, 15)
    data = Dataset(x, np.sin(2 * x))
    obj = make_objective(spec, data)
    theta = rng.standard_normal(spec.param_count)
    g = fd_gradient(obj, theta)
    ref = central_diff(obj.fun, theta)
    assert np.all(np.abs(g - ref) <= 1e-4 * np.maximum(np.abs(ref), 1e-2))


def test_nonfinite_loss_raises():
    obj = Objective(lambda t: float("nan") if t[0] > 0 else 0.0, 1)
    with pytest.raises(NonFiniteLoss):
        fd_gradient(obj, np.array([1.0]))
    with pytest.raises(NonFiniteLoss):
        obj(np.array([1.0]))


def test_dimension_mismatch():
    obj = Objective(lambda t: 0.0, 3)
    with pytest.raises(DimensionMismatch):
        fd_gradient(obj, np.zeros(2))
    with pytest.raises(DimensionMismatch):
        fd_hessvec(obj, np.zeros(3), np.zeros(2))


def test_loss_is_pure():
    spec = MlpSpec((1, 4, 1))
    x = np.linspace(-3, 3, 11)
    obj = make_objective(spec, Dataset(x, np.cos(x)))
    th = init_params(spec, 3)
    assert obj(th) == obj(th)


def test_hessvec_zero_direction_costs_nothing():
    obj = Objective(lambda t: float(t @ t), 3)
    hv = fd_hessvec(obj, np.ones(3), np.zeros(3))
    assert np.array_equal(hv, np.zeros(3))
    assert obj.eval_count == 0


def test_hessvec_identity():
    obj = QuadraticObjective(np.eye(3)).objective()
    hv = fd_hessvec(obj, np.array([0.2, -0.4, 1.0]), np.array([1.0, 0, 0]))
    assert np.allclose(hv, [1, 0, 0], atol=1e-4)


def test_hessvec_diagonal():
    A = np.diag([1.0, 10.0])
    obj = QuadraticObjective(A).objective()
    hv = fd_hessvec(obj, np.array([0.5, -0.3]), np.array([1.0, 1.0]))
    assert np.allclose(hv, A @ [1, 1], rtol=1e-3)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000))
def test_hessvec_random_quadratics(seed):
    rng = np.random.default_rng(seed)
    M = rng.standard_normal((4, 4))
    A = M @ M.T + np.eye(4)
    obj = QuadraticObjective(A, rng.standard_normal(4)).objective()
    v = rng.standard_normal(4)
    v /= np.linalg.norm(v)
    hv = fd_hessvec(obj, rng.standard_normal(4), v)
    ref = A @ v
    assert np.linalg.norm(hv - ref) <= 1e-3 * np.linalg.norm(ref)


def test_value_and_gradient_share_base():
    obj = Objective(lambda t: float(np.sum(np.sin(t))), 3)
    loss, g = fd_value_and_gradient(obj, np.zeros(3))
    assert loss == 0.0
    assert np.allclose(g, 1.0, atol=1e-7)


def test_many_counts_and_nonfinite_modes():
    obj = Objective(lambda t: float(t[0]) if t[0] < 5 else float("inf"), 1)
    out = obj.many(np.array([[1.0], [2.0], [7.0]]), nonfinite="inf")
    assert out[:2].tolist() == [1.0, 2.0] and out[2] == np.inf
    assert obj.eval_count == 3
    with pytest.raises(NonFiniteLoss):
        obj.many(np.array([[7.0]]))
