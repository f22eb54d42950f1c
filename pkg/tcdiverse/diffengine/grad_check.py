from collections.abc import Callable

import numpy as np

from tcdiverse.diffengine.Tape import Node, Tape, Tensor

ScalarFunction = Callable[[Node], Node]


def _evaluate(func: ScalarFunction, point: Tensor) -> float:
    tape = Tape()
    value = func(tape.constant(point)).item()

    if not np.isfinite(value):
        raise ValueError(f"Function evaluated to non-finite value {value}.")

    return value


def numerical_gradient(
    func: ScalarFunction, point: Tensor, eps: float = 1e-5
) -> Tensor:
    """
    Central finite-difference approximation of the gradient of ``func`` at
    ``point``.

    Parameters
    ----------
    func
        Function mapping a node holding the point to a scalar node. It must
        only record operations on the tape of its argument.
    point
        Point at which to approximate the gradient.
    eps
        Perturbation size, which must be positive.

    Returns
    -------
    Tensor
        Approximate gradient, of the same shape as ``point``.
    """
    if eps <= 0:
        raise ValueError("Expected eps > 0.")

    point = np.array(point, dtype=np.float64)
    grad = np.zeros_like(point)

    for idx in np.ndindex(point.shape):
        orig = point[idx]

        point[idx] = orig + eps
        upper = _evaluate(func, point)

        point[idx] = orig - eps
        lower = _evaluate(func, point)

        point[idx] = orig
        grad[idx] = (upper - lower) / (2 * eps)

    return grad


def grad_check(
    func: ScalarFunction, point: Tensor, eps: float = 1e-5
) -> float:
    """
    Compares the gradient computed by :meth:`Tape.backward` against central
    finite differences.

    Parameters
    ----------
    func
        Function mapping a node holding the point to a scalar node.
    point
        Point at which to compare gradients.
    eps
        Finite-difference perturbation size. Default 1e-5.

    Returns
    -------
    float
        The maximum over all coordinates of
        ``|analytic - numeric| / max(1, |analytic|, |numeric|)``.

    Raises
    ------
    ValueError
        When ``eps`` is not positive, or ``func`` evaluates to a non-finite
        value at or around ``point``.
    """
    if eps <= 0:
        raise ValueError("Expected eps > 0.")

    tape = Tape()
    leaf = tape.leaf(point)
    out = func(leaf)

    if not np.isfinite(out.item()):
        raise ValueError(f"Function evaluated to non-finite {out.item()}.")

    grads = tape.backward(out)
    analytic = grads.get(leaf.index, np.zeros_like(leaf.value))
    numeric = numerical_gradient(func, point, eps)

    if analytic.size == 0:
        return 0.0

    scale = np.maximum(1.0, np.maximum(np.abs(analytic), np.abs(numeric)))
    return float(np.max(np.abs(analytic - numeric) / scale))
