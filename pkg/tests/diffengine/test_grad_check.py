import numpy as np
from numpy.testing import assert_, assert_allclose, assert_raises

from tcdiverse.diffengine import grad_check, numerical_gradient, ops


def test_numerical_gradient_of_quadratic():
    """
    Tests that central differences are exact (up to rounding) for a
    quadratic function.
    """
    point = np.array([1.0, -2.0, 0.5])
    grad = numerical_gradient(lambda x: ops.mean(ops.multiply(x, x)), point)
    assert_allclose(grad, 2 * point / 3, atol=1e-8)


def test_numerical_gradient_leaves_point_untouched():
    point = np.array([1.0, 2.0])
    numerical_gradient(lambda x: ops.mean(x), point)
    assert_allclose(point, [1.0, 2.0])


def test_grad_check_detects_wrong_rule():
    """
    Tests that grad_check reports a large error for an operation with a wrong
    backward rule.
    """

    def wrong_square(x):
        value = x.value**2
        return x.tape.record("square", (x,), value, lambda g: (g * x.value,))

    def func(x):
        return ops.mean(wrong_square(x))

    assert_(grad_check(func, np.array([1.0, 2.0, 3.0])) > 0.1)


def test_grad_check_raises_non_finite():
    """
    Tests that grad_check raises when the function is not finite near the
    given point.
    """

    def func(x):
        return ops.logsumexp(ops.scale(x, 1e308), axis=0)

    with assert_raises(ValueError):
        grad_check(func, np.array([10.0, 1.0]))


def test_grad_check_raises_non_positive_eps():
    with assert_raises(ValueError):
        grad_check(lambda x: ops.mean(x), np.ones(2), eps=0)

    with assert_raises(ValueError):
        numerical_gradient(lambda x: ops.mean(x), np.ones(2), eps=-1)


def test_grad_check_constant_function():
    """
    Tests that a function that does not depend on its argument has an all-zero
    analytic gradient that matches finite differences.
    """

    def func(x):
        return ops.mean(ops.scale(x, 0.0))

    assert_(grad_check(func, np.ones(3)) < 1e-12)
