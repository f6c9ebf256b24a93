import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import minimize, rosen

from fplab import NonFiniteLoss, Objective, SwarmTooLarge
from fplab.objective import QuadraticObjective
from fplab.optimizers import (Status, StoppingRule, SwarmConfig, bfgs_run, bfgs_update, cg_run,
                              gd_run, lbfgs_run, mc_run, newton_cg_direction, powell_run, pso_run,
                              tnc_run, two_loop)

DIAG = np.diag([1.0, 10.0])


def quad(A=DIAG, b=None):
    return QuadraticObjective(A, b).objective()


def collect():
    store = []

    def cb(epoch, theta):
        store.append(np.array(theta))
    return store, cb


GRADIENT_RUNS = {
    "cg": lambda obj, x, stop, cb=None: cg_run(obj, x, stop, cb),
    "tnc": lambda obj, x, stop, cb=None: tnc_run(obj, x, stop, callback=cb),
    "bfgs": lambda obj, x, stop, cb=None: bfgs_run(obj, x, stop, cb),
    "lbfgs": lambda obj, x, stop, cb=None: lbfgs_run(obj, x, 5, stop, cb),
    "gd": lambda obj, x, stop, cb=None: gd_run(obj, x, 0.05, stop, cb),
}
FREE_RUNS = {
    "powell": lambda obj, x, stop, cb=None: powell_run(obj, x, stop, cb, tol=1e-6),
    "pso": lambda obj, x, stop, cb=None: pso_run(obj, x, SwarmConfig(seed=3), stop, cb),
    "mc": lambda obj, x, stop, cb=None: mc_run(obj, x, 0.1, 20, stop, cb, seed=3),
}
ALL_RUNS = {**GRADIENT_RUNS, **FREE_RUNS}


def test_stopping_rule_validation():
    with pytest.raises(ValueError):
        StoppingRule(epsilon=0)
    with pytest.raises(ValueError):
        StoppingRule(stall_window=0)


# -- gradient descent ------------------------------------------------------

def test_gd_closed_form_recursion():
    obj = Objective(lambda t: 0.5 * float(t @ t), 1)
    theta, reps = gd_run(obj, np.array([1.0]), 0.1, StoppingRule(1e-12, 10))
    # each step adds at most step*zeta/2 of difference error
    assert abs(theta[0] - 0.9 ** 10) <= 10 * 1.49e-8
    assert reps[-1].status == Status.MAX_ITER


def test_gd_immediate_return_at_minimiser():
    theta, reps = gd_run(quad(), np.zeros(2), 0.1)
    assert len(reps) == 1 and reps[0].epoch == 0 and reps[0].status == Status.GRAD_TOL
    assert np.array_equal(theta, np.zeros(2))


def test_gd_diverges_on_stiff_coordinate():
    # |1 - 0.21 * 10| = 1.1 > 1
    try:
        _, reps = gd_run(quad(), np.array([1.0, 1.0]), 0.21, StoppingRule(1e-9, 60))
    except NonFiniteLoss:
        return
    assert reps[-1].loss > 100 * reps[0].loss


# -- conjugate gradient ----------------------------------------------------

def test_cg_solves_quadratic_in_ten_iterations():
    theta, reps = cg_run(quad(), np.array([1.0, 1.0]), StoppingRule(1e-6, 10))
    assert reps[-1].status == Status.GRAD_TOL
    assert reps[-1].grad_norm <= 1e-6
    assert np.linalg.norm(theta) <= 1e-4


def test_cg_immediate_return():
    _, reps = cg_run(quad(), np.zeros(2))
    assert [r.epoch for r in reps] == [0]


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10_000))
def test_descent_directions(seed):
    rng = np.random.default_rng(seed)
    M = rng.standard_normal((4, 4))
    A = M @ M.T + 0.5 * np.eye(4)
    for name in ("cg", "bfgs", "lbfgs", "tnc"):
        _, reps = GRADIENT_RUNS[name](quad(A, rng.standard_normal(4)), rng.standard_normal(4),
                                      StoppingRule(1e-7, 30))
        assert all(r.slope < 0 for r in reps if r.slope is not None), name


# -- truncated Newton ------------------------------------------------------

def test_tnc_one_outer_iteration():
    theta, reps = tnc_run(quad(), np.array([1.0, 1.0]), StoppingRule(1e-6, 1),
                          eta_rule=lambda g: 1e-8)
    assert reps[-1].epoch == 1
    assert np.linalg.norm(theta) <= 1e-3


def test_tnc_immediate_return():
    _, reps = tnc_run(quad(), np.zeros(2))
    assert len(reps) == 1 and reps[0].status == Status.GRAD_TOL


def test_inner_cg_negative_curvature_returns_steepest_descent():
    g = np.array([0.3, -1.2])
    d, i = newton_cg_direction(lambda v: -v, g, 0.1, 1e-6, 20)
    assert i == 0 and np.array_equal(d, -g)


def test_tnc_negative_curvature_step_is_steepest_descent():
    # L = -|t|^2 + |t|^4 near t = 0.1: the Hessian along -g is negative
    obj = Objective(lambda t: float(-(t @ t) + (t @ t) ** 2), 2)
    x0 = np.array([0.1, 0.05])
    _, reps = tnc_run(obj, x0, StoppingRule(1e-8, 1))
    g = -2 * x0 + 4 * (x0 @ x0) * x0
    assert np.isclose(reps[0].slope, -(g @ g), rtol=1e-5)


def test_inner_cg_solves_spd_system():
    A = np.array([[4.0, 1.0], [1.0, 3.0]])
    g = np.array([1.0, 2.0])
    d, i = newton_cg_direction(lambda v: A @ v, g, 1e-12, 1e-12, 20)
    assert np.allclose(d, -np.linalg.solve(A, g), atol=1e-12)
    assert i == 2


# -- BFGS ------------------------------------------------------------------

def test_bfgs_update_secant_and_symmetry():
    rng = np.random.default_rng(0)
    M = rng.standard_normal((5, 5))
    H = M @ M.T + np.eye(5)
    s = rng.standard_normal(5)
    y = s + 0.1 * rng.standard_normal(5)
    Hn = bfgs_update(H, s, y)
    assert np.allclose(Hn @ y, s, atol=1e-12)
    assert np.max(np.abs(Hn - Hn.T)) <= 1e-12


def test_bfgs_secant_holds_every_step():
    seen = []

    def hook(H, s, y):
        seen.append((np.linalg.norm(H @ y - s), np.max(np.abs(H - H.T))))

    rng = np.random.default_rng(5)
    M = rng.standard_normal((6, 6))
    bfgs_run(quad(M @ M.T + np.eye(6), rng.standard_normal(6)), rng.standard_normal(6),
             StoppingRule(1e-9, 30), on_update=hook)
    assert seen
    assert all(sec <= 1e-8 and sym <= 1e-10 for sec, sym in seen)


def test_bfgs_rosenbrock():
    obj = Objective(lambda t: float(rosen(t)), 2)
    theta, reps = bfgs_run(obj, np.array([-1.2, 1.0]), StoppingRule(1e-9, 200))
    assert reps[-1].loss < 1e-8
    ref = minimize(rosen, [-1.2, 1.0], method="BFGS", options={"gtol": 1e-9}).x
    assert np.allclose(theta, ref, atol=1e-3)


def test_bfgs_immediate_return():
    _, reps = bfgs_run(quad(), np.zeros(2))
    assert len(reps) == 1


# -- L-BFGS ----------------------------------------------------------------

def test_two_loop_matches_dense_bfgs():
    rng = np.random.default_rng(9)
    pairs, H = [], np.eye(4)
    for _ in range(3):
        s = rng.standard_normal(4)
        y = s + 0.2 * rng.standard_normal(4)
        pairs.append((s, y, 1.0 / (s @ y)))
        H = bfgs_update(H, s, y)
    g = rng.standard_normal(4)
    assert np.allclose(two_loop(g, pairs), H @ g, atol=1e-12)


def test_full_memory_lbfgs_matches_bfgs():
    rng = np.random.default_rng(12)
    M = rng.standard_normal((5, 5))
    q = QuadraticObjective(M @ M.T + 2 * np.eye(5), rng.standard_normal(5))
    x0 = rng.standard_normal(5)
    xb, cb = collect()
    xl, cl = collect()
    stop = StoppingRule(1e-10, 8)
    bfgs_run(q.objective(), x0, stop, cb)
    lbfgs_run(q.objective(), x0, 50, stop, cl)
    assert len(xb) == len(xl)
    for a, b in zip(xb, xl):
        assert np.linalg.norm(a - b) <= 1e-8


def test_lbfgs_memory_one_strict_decrease():
    _, reps = lbfgs_run(quad(), np.array([1.0, 1.0]), 1, StoppingRule(1e-8, 30))
    losses = [r.loss for r in reps]
    assert all(b < a for a, b in zip(losses, losses[1:]))


def test_lbfgs_bad_memory():
    with pytest.raises(ValueError):
        lbfgs_run(quad(), np.ones(2), 0)


def test_lbfgs_immediate_return():
    _, reps = lbfgs_run(quad(), np.zeros(2))
    assert len(reps) == 1


# -- Powell ----------------------------------------------------------------

def test_powell_constant_loss_stays_put():
    obj = Objective(lambda t: 1.0, 2)
    theta, reps = powell_run(obj, np.array([0.2, -0.7]))
    assert np.array_equal(theta, [0.2, -0.7])
    assert reps[-1].status == Status.STALLED and reps[-1].epoch == 1


def test_powell_sphere_one_sweep():
    obj = Objective(lambda t: float(t @ t), 2)
    theta, _ = powell_run(obj, np.array([-0.5, -0.5]), StoppingRule(1e-6, 1), tol=1e-6)
    assert np.max(np.abs(theta)) <= 1e-6


def test_powell_separable_one_sweep():
    A = np.diag([3.0, 0.2, 1.0, 5.0])
    b = np.array([0.6, -0.1, 0.4, -2.0])
    xstar = -b / np.diag(A)
    theta, _ = powell_run(quad(A, b), np.zeros(4), StoppingRule(1e-6, 1), tol=1e-6)
    assert np.max(np.abs(theta - xstar)) <= 1e-6


def test_powell_rotated_quadratic():
    obj = Objective(lambda t: float((t[0] + t[1]) ** 2 + 0.1 * (t[0] - t[1]) ** 2), 2)
    _, reps = powell_run(obj, np.array([0.3, -0.4]), StoppingRule(1e-9, 50), tol=1e-6)
    assert reps[-1].loss <= 1e-6


def test_powell_per_sweep_decrease():
    rng = np.random.default_rng(1)
    M = rng.standard_normal((3, 3))
    _, reps = powell_run(quad(M @ M.T + np.eye(3)), rng.standard_normal(3), StoppingRule(1e-8, 20))
    losses = [r.loss for r in reps]
    assert all(b <= a for a, b in zip(losses, losses[1:]))


# -- particle swarm ----------------------------------------------------------

def test_pso_swarm_size_and_budget():
    obj = Objective(lambda t: float(t @ t), 3)
    pso_run(obj, np.ones(3), SwarmConfig(seed=0), StoppingRule(1e-6, 1))
    # initial swarm plus one iteration, 2 * dim particles each
    assert obj.eval_count == 2 * 6
    with pytest.raises(SwarmTooLarge):
        pso_run(obj, np.ones(3), SwarmConfig(max_particles=5))


def test_pso_sphere_median_progress():
    finals = []
    for seed in range(20):
        obj = Objective(lambda t: float(t @ t), 2)
        x0 = np.array([1.5, -1.0])
        _, reps = pso_run(obj, x0, SwarmConfig(seed=seed), StoppingRule(1e-12, 100, 100))
        finals.append(reps[-1].loss / float(x0 @ x0))
    assert np.median(finals) < 0.5


def test_pso_stalls():
    obj = Objective(lambda t: 1.0, 2)
    _, reps = pso_run(obj, np.zeros(2), SwarmConfig(seed=1), StoppingRule(1e-6, 500, 5))
    assert reps[-1].status == Status.STALLED and reps[-1].epoch == 5


# -- Monte-Carlo -----------------------------------------------------------

def test_mc_constant_loss_stalls_without_moving():
    obj = Objective(lambda t: 2.0, 3)
    x0 = np.array([0.1, 0.2, 0.3])
    theta, reps = mc_run(obj, x0, 0.1, 10, StoppingRule(1e-9, 100, 7))
    assert np.array_equal(theta, x0)
    assert reps[-1].status == Status.STALLED and reps[-1].epoch == 7


def test_mc_quadratic_seeds():
    hits = 0
    for seed in range(20):
        obj = Objective(lambda t: float(t[0] ** 2), 1)
        _, reps = mc_run(obj, np.array([1.0]), 0.1, 100, StoppingRule(1e-12, 200, 200), seed=seed)
        hits += reps[-1].loss < 0.01
    assert hits >= 18


def test_mc_strict_decrease_when_moving():
    seen = []
    obj = Objective(lambda t: float(np.sum(np.abs(t))), 2)
    _, reps = mc_run(obj, np.array([1.0, -1.0]), 0.2, 5, StoppingRule(1e-12, 40, 40),
                     callback=lambda e, th: seen.append(np.array(th)))
    for (a, b), (ra, rb) in zip(zip(seen, seen[1:]), zip(reps, reps[1:])):
        if not np.array_equal(a, b):
            assert rb.loss < ra.loss
        else:
            assert rb.loss == ra.loss


def test_mc_bad_arguments():
    with pytest.raises(ValueError):
        mc_run(quad(), np.ones(2), delta=0.0)


# -- shared contract ---------------------------------------------------------

@pytest.mark.parametrize("name", sorted(ALL_RUNS))
def test_final_loss_not_above_initial(name):
    rng = np.random.default_rng(4)
    M = rng.standard_normal((3, 3))
    obj = quad(M @ M.T + np.eye(3), rng.standard_normal(3))
    _, reps = ALL_RUNS[name](obj, rng.standard_normal(3), StoppingRule(1e-7, 25, 10))
    assert reps[-1].loss <= reps[0].loss
    epochs = [r.epoch for r in reps]
    evals = [r.evals for r in reps]
    assert epochs == sorted(set(epochs))
    assert evals == sorted(evals)
    assert reps[-1].status is not None
    assert all(r.status is None for r in reps[:-1])


@pytest.mark.parametrize("name", sorted(ALL_RUNS))
def test_runs_are_reproducible(name):
    def once():
        obj = Objective(lambda t: float(np.sum((t - 0.3) ** 2) + np.sin(t[0])), 3)
        return ALL_RUNS[name](obj, np.array([1.0, -0.5, 0.2]), StoppingRule(1e-7, 15, 5))

    (ta, ra), (tb, rb) = once(), once()
    assert np.array_equal(ta, tb)
    assert [r.as_tuple() for r in ra] == [r.as_tuple() for r in rb]


@pytest.mark.parametrize("name", sorted(FREE_RUNS))
def test_gradient_free_runs_never_take_gradients(name):
    obj = quad(np.diag([1.0, 2.0, 3.0]))
    FREE_RUNS[name](obj, np.ones(3), StoppingRule(1e-7, 10, 5))
    assert obj.gradient_calls == 0


@pytest.mark.parametrize("name", sorted(ALL_RUNS))
def test_callback_stop_and_readonly_view(name):
    seen = []

    def cb(epoch, theta):
        seen.append(epoch)
        with pytest.raises(ValueError):
            theta[0] = 99.0
        return epoch == 2

    _, reps = ALL_RUNS[name](quad(np.diag([1.0, 3.0])), np.array([1.0, 1.0]),
                             StoppingRule(1e-12, 50, 50), cb)
    assert seen == [0, 1, 2]
    assert reps[-1].status == Status.STOPPED


@pytest.mark.parametrize("name", ["cg", "bfgs", "lbfgs", "tnc"])
def test_line_search_failure_status(name):
    # unbounded linear loss: the curvature condition never holds
    obj = Objective(lambda t: float(-t.sum()), 2)
    _, reps = GRADIENT_RUNS[name](obj, np.zeros(2), StoppingRule(1e-8, 10))
    assert reps[-1].status == Status.LINE_SEARCH_FAILED
    assert reps[-1].epoch == 0
