import math

import numpy as np
import pytest

from dsae.numeric.optim import (AdamState, LbfgsConfig, adam_step, elastic_net,
                                grad_check, lbfgs_minimize, logsumexp)
from dsae.numeric.rng import Rng


# ------------------------------------------------------------------ logsumexp

def test_logsumexp_matches_naive():
    rng = Rng(0, stream=1)
    for _ in range(50):
        v = rng.normal((20,), scale=3.0)
        assert logsumexp(v) == pytest.approx(math.log(np.sum(np.exp(v))), abs=1e-12)


def test_logsumexp_overflow_safe():
    v = np.array([1000.0, 1000.0])
    assert logsumexp(v) == pytest.approx(1000.0 + math.log(2.0), abs=1e-12)
    assert logsumexp([-1e9, -1e9 + 1.0]) == pytest.approx(-1e9 + math.log(1 + math.e), rel=1e-12)


def test_logsumexp_single_and_empty():
    assert logsumexp([3.5]) == pytest.approx(3.5, abs=0)
    with pytest.raises(ValueError):
        logsumexp([])


def test_logsumexp_mpmath_oracle():
    mpmath = pytest.importorskip("mpmath")
    mpmath.mp.dps = 50
    v = [1.25, -700.0, 3.125, 710.0]
    expected = float(mpmath.log(sum(mpmath.exp(x) for x in v)))
    assert logsumexp(v) == pytest.approx(expected, rel=1e-14)


# ---------------------------------------------------------------- elastic net

def test_elastic_net_value_and_subgradient():
    w = np.array([1.0, -2.0, 0.0])
    penalty, sub = elastic_net(w, c1=0.5, c2=2.0)
    assert penalty == pytest.approx(0.5 * 3.0 + 1.0 * 5.0)
    assert np.array_equal(sub, np.array([0.5 + 2.0, -0.5 - 4.0, 0.0]))


def test_elastic_net_sign_zero_is_zero():
    _, sub = elastic_net(np.zeros(4), c1=1.0, c2=1.0)
    assert np.array_equal(sub, np.zeros(4))


# ----------------------------------------------------------------------- Adam

def test_adam_quadratic_convergence():
    # acceptance criterion: ||x|| < 1e-2 within 500 steps on a quadratic
    x = np.array([3.0, -2.0, 1.5, -0.5])
    state = AdamState(lr=0.05)
    for _ in range(500):
        x = adam_step(x, 2.0 * x, state)
    assert float(np.linalg.norm(x)) < 1e-2


def test_adam_bias_correction_first_step():
    # after one step the update is exactly lr * sign(grad) regardless of scale
    state = AdamState(lr=0.1)
    x = adam_step(np.zeros(3), np.array([1e-4, -5.0, 2.0]), state)
    assert np.allclose(x, [-0.1, 0.1, -0.1], atol=1e-4)


def test_adam_decoupled_weight_decay():
    plain = adam_step(np.full(2, 10.0), np.ones(2), AdamState(lr=0.1))
    decayed = adam_step(np.full(2, 10.0), np.ones(2), AdamState(lr=0.1, weight_decay=0.5))
    assert np.all(np.abs(decayed) < np.abs(plain))


def test_adam_nonfinite_gradient_names_slice():
    grads = np.array([0.0, np.nan, 0.0])
    names = [("alpha", 0, 1), ("beta", 1, 3)]
    with pytest.raises(FloatingPointError, match="beta"):
        adam_step(np.zeros(3), grads, AdamState(), slice_names=names)


def test_adam_shape_mismatch():
    with pytest.raises(ValueError):
        adam_step(np.zeros(3), np.zeros(4), AdamState())


# --------------------------------------------------------------------- L-BFGS

def rosenbrock(x):
    a, b = 1.0, 100.0
    v = (a - x[0]) ** 2 + b * (x[1] - x[0] ** 2) ** 2
    g = np.array([
        -2 * (a - x[0]) - 4 * b * x[0] * (x[1] - x[0] ** 2),
        2 * b * (x[1] - x[0] ** 2),
    ])
    return float(v), g


def test_lbfgs_rosenbrock():
    # acceptance criterion: reach (1,1) within 1e-4 in at most 200 iterations
    result = lbfgs_minimize(rosenbrock, np.array([-1.2, 1.0]),
                            LbfgsConfig(max_iter=200, tol=1e-8))
    assert result.iterations <= 200
    assert np.allclose(result.x, [1.0, 1.0], atol=1e-4)


def test_lbfgs_quadratic_exact():
    A = np.diag([1.0, 10.0, 100.0])
    b = np.array([1.0, -2.0, 3.0])

    def quad(x):
        return float(0.5 * x @ A @ x - b @ x), A @ x - b

    result = lbfgs_minimize(quad, np.zeros(3), LbfgsConfig(tol=1e-5))
    assert result.converged
    assert np.allclose(result.x, np.linalg.solve(A, b), atol=1e-6)


def test_owlqn_scalar_soft_threshold_to_exact_zero():
    # min 0.5*(x-0.3)^2 + 1*|x|  ->  x = 0 exactly (since |0.3| < c1)
    def f(x):
        return float(0.5 * (x[0] - 0.3) ** 2), np.array([x[0] - 0.3])

    result = lbfgs_minimize(f, np.array([2.0]), LbfgsConfig(c1=1.0, tol=1e-10))
    assert result.x[0] == 0.0


def test_owlqn_scalar_soft_threshold_shrinkage():
    # min 0.5*(x-2)^2 + 0.5*|x|  ->  x = 1.5 exactly
    def f(x):
        return float(0.5 * (x[0] - 2.0) ** 2), np.array([x[0] - 2.0])

    result = lbfgs_minimize(f, np.array([0.0]), LbfgsConfig(c1=0.5, tol=1e-10))
    assert result.x[0] == pytest.approx(1.5, abs=1e-6)


def test_owlqn_sparse_least_squares_produces_exact_zeros():
    rng = Rng(0, stream=2)
    A = rng.normal((40, 30))
    x_true = np.zeros(30)
    x_true[:5] = rng.normal((5,))
    y = A @ x_true

    def f(x):
        r = A @ x - y
        return float(0.5 * r @ r), A.T @ r

    result = lbfgs_minimize(f, np.zeros(30), LbfgsConfig(c1=2.0, max_iter=500, tol=1e-8))
    n_zero = int(np.sum(result.x == 0.0))
    assert n_zero >= 20  # strong L1 forces most coordinates exactly to zero


def test_lbfgs_l2_fold():
    # min 0.5*x^2 (objective) + 0.5*c2*x^2 with a linear pull
    def f(x):
        return float(0.5 * x @ x - x[0]), x - np.array([1.0, 0.0])

    result = lbfgs_minimize(f, np.zeros(2), LbfgsConfig(c2=1.0, tol=1e-10))
    assert result.x[0] == pytest.approx(0.5, abs=1e-6)


def test_lbfgs_monotone_best_value():
    result = lbfgs_minimize(rosenbrock, np.array([-1.2, 1.0]), LbfgsConfig(max_iter=50))
    v0, _ = rosenbrock(np.array([-1.2, 1.0]))
    assert result.value <= v0


# ----------------------------------------------------------------- grad_check

def test_grad_check_accepts_correct_gradient():
    def f(x):
        return float(np.sum(x ** 3)), 3.0 * x ** 2

    assert grad_check(f, np.array([0.5, -1.0, 2.0])) < 1e-8


def test_grad_check_flags_wrong_gradient():
    def f(x):
        return float(np.sum(x ** 2)), 3.0 * x  # wrong: should be 2x

    assert grad_check(f, np.array([1.0, -2.0])) > 1e-2
