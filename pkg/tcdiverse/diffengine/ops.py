"""
Differentiable operations over :class:`~tcdiverse.diffengine.Tape.Node`
objects. Every operation records its output on the tape of its inputs,
together with the rule that maps the output gradient back to its inputs.
"""

from collections.abc import Sequence
from typing import NoReturn

import numpy as np

from tcdiverse.diffengine.Tape import Node, Tensor
from tcdiverse.exceptions import ShapeError


def _fail(kind: str, *nodes: Node, detail: str = "") -> NoReturn:
    shapes = ", ".join(str(node.shape) for node in nodes)
    msg = f"{kind}: incompatible input shapes {shapes}"
    raise ShapeError(f"{msg}. {detail}" if detail else f"{msg}.")


def _check_ndim(kind: str, node: Node, ndim: int):
    if node.value.ndim != ndim:
        _fail(kind, node, detail=f"Expected a {ndim}-dimensional input.")


def matmul(a: Node, b: Node) -> Node:
    """
    Matrix product of a ``(m, k)`` and a ``(k, n)`` node.
    """
    _check_ndim("matmul", a, 2)
    _check_ndim("matmul", b, 2)

    if a.shape[1] != b.shape[0]:
        _fail("matmul", a, b)

    x, y = a.value, b.value
    return a.tape.record(
        "matmul", (a, b), x @ y, lambda g: (g @ y.T, x.T @ g)
    )


def add_bias(x: Node, bias: Node) -> Node:
    """
    Adds a ``(n,)`` bias to every row of a ``(m, n)`` node.
    """
    _check_ndim("add_bias", x, 2)
    _check_ndim("add_bias", bias, 1)

    if x.shape[1] != bias.shape[0]:
        _fail("add_bias", x, bias)

    return x.tape.record(
        "add_bias",
        (x, bias),
        x.value + bias.value,
        lambda g: (g, g.sum(axis=0)),
    )


def add(a: Node, b: Node) -> Node:
    """
    Elementwise sum of two nodes of identical shape.
    """
    if a.shape != b.shape:
        _fail("add", a, b)

    return a.tape.record("add", (a, b), a.value + b.value, lambda g: (g, g))


def multiply(a: Node, b: Node) -> Node:
    """
    Elementwise product of two nodes of identical shape.
    """
    if a.shape != b.shape:
        _fail("multiply", a, b)

    x, y = a.value, b.value
    return a.tape.record(
        "multiply", (a, b), x * y, lambda g: (g * y, g * x)
    )


def scale(a: Node, factor: float) -> Node:
    """
    Multiplies every entry by a fixed factor.
    """
    factor = float(factor)
    return a.tape.record(
        "scale", (a,), factor * a.value, lambda g: (factor * g,)
    )


def relu(a: Node) -> Node:
    mask = a.value > 0
    return a.tape.record(
        "relu", (a,), np.where(mask, a.value, 0.0), lambda g: (g * mask,)
    )


def leaky_relu(a: Node, slope: float) -> Node:
    """
    Leaky rectifier: identity for positive entries, ``slope * x`` elsewhere.
    """
    factor = np.where(a.value > 0, 1.0, slope)
    return a.tape.record(
        "leaky_relu", (a,), factor * a.value, lambda g: (g * factor,)
    )


def l2_normalize_rows(a: Node, eps: float = 1e-12) -> Node:
    """
    Scales every row of a ``(m, n)`` node to unit Euclidean norm. Rows with a
    norm below ``eps`` are divided by ``eps`` instead, so an all-zero row maps
    to an all-zero row.
    """
    _check_ndim("l2_normalize_rows", a, 2)

    x = a.value
    norms = np.linalg.norm(x, axis=1, keepdims=True)
    guarded = norms < eps
    denom = np.where(guarded, eps, norms)
    out = x / denom

    def rule(g: Tensor) -> tuple[Tensor, ...]:
        proj = np.where(guarded, 0.0, (g * out).sum(axis=1, keepdims=True))
        return ((g - out * proj) / denom,)

    return a.tape.record("l2_normalize_rows", (a,), out, rule)


def concat_columns(nodes: Sequence[Node]) -> Node:
    """
    Concatenates ``(m, n_i)`` nodes along the column axis.
    """
    if not nodes:
        raise ShapeError("concat_columns: expected at least one input.")

    for node in nodes:
        _check_ndim("concat_columns", node, 2)

    if len({node.shape[0] for node in nodes}) != 1:
        _fail("concat_columns", *nodes)

    bounds = np.cumsum([node.shape[1] for node in nodes])[:-1]

    def rule(g: Tensor) -> tuple[Tensor, ...]:
        return tuple(np.split(g, bounds, axis=1))

    value = np.concatenate([node.value for node in nodes], axis=1)
    return nodes[0].tape.record("concat_columns", tuple(nodes), value, rule)


def gather_rows(a: Node, indices: np.ndarray) -> Node:
    """
    Selects rows of ``a`` by an integer index vector. Rows may be selected
    more than once; rows that are not selected receive a zero gradient.
    """
    indices = np.asarray(indices)

    if a.value.ndim < 1 or indices.ndim != 1:
        _fail("gather_rows", a, detail="Expected a 1-dimensional index.")

    if not np.issubdtype(indices.dtype, np.integer) and indices.size:
        raise ShapeError("gather_rows: indices must be integers.")

    num_rows = a.shape[0]
    if indices.size and (indices.min() < 0 or indices.max() >= num_rows):
        msg = f"gather_rows: index out of range for {num_rows} rows."
        raise IndexError(msg)

    indices = indices.astype(np.intp)

    def rule(g: Tensor) -> tuple[Tensor, ...]:
        grad = np.zeros_like(a.value)
        np.add.at(grad, indices, g)
        return (grad,)

    return a.tape.record("gather_rows", (a,), a.value[indices], rule)


def reshape(a: Node, shape: tuple[int, ...]) -> Node:
    value = a.value
    try:
        out = value.reshape(shape)
    except ValueError:
        _fail("reshape", a, detail=f"Cannot reshape into {shape}.")

    return a.tape.record(
        "reshape", (a,), out, lambda g: (g.reshape(value.shape),)
    )


def _check_axis(kind: str, a: Node, axis: int):
    if not -a.value.ndim <= axis < a.value.ndim:
        _fail(kind, a, detail=f"Axis {axis} out of range.")

    if a.shape[axis] == 0:
        _fail(kind, a, detail="Cannot reduce over an empty axis.")


def _shifted_log_sum(x: Tensor, axis: int) -> tuple[Tensor, Tensor]:
    # Returns the max-shifted log-sum-exp and the softmax weights along axis.
    peak = x.max(axis=axis, keepdims=True)
    exps = np.exp(x - peak)
    total = exps.sum(axis=axis, keepdims=True)
    weights = exps / total
    out = np.squeeze(peak + np.log(total), axis=axis)
    return out, weights


def logsumexp(a: Node, axis: int) -> Node:
    """
    Log of the sum of exponentials along ``axis``, which is removed. Computed
    after shifting by the maximum, so finite inputs give finite outputs.
    """
    _check_axis("logsumexp", a, axis)
    out, weights = _shifted_log_sum(a.value, axis)

    def rule(g: Tensor) -> tuple[Tensor, ...]:
        return (np.expand_dims(g, axis) * weights,)

    return a.tape.record("logsumexp", (a,), out, rule)


def logmeanexp(a: Node, axis: int) -> Node:
    """
    Log of the mean of exponentials along ``axis``, which is removed. A
    constant input returns that constant exactly.
    """
    _check_axis("logmeanexp", a, axis)

    x = a.value
    peak = x.max(axis=axis, keepdims=True)
    exps = np.exp(x - peak)
    avg = exps.mean(axis=axis, keepdims=True)
    weights = exps / exps.sum(axis=axis, keepdims=True)
    out = np.squeeze(peak + np.log(avg), axis=axis)

    def rule(g: Tensor) -> tuple[Tensor, ...]:
        return (np.expand_dims(g, axis) * weights,)

    return a.tape.record("logmeanexp", (a,), out, rule)


def mean(a: Node, axis: int | None = None) -> Node:
    """
    Mean along ``axis`` (which is removed), or over all entries when ``axis``
    is ``None``.
    """
    x = a.value

    if axis is None:
        if x.size == 0:
            _fail("mean", a, detail="Cannot average an empty input.")

        return a.tape.record(
            "mean", (a,), x.mean(), lambda g: (np.full(x.shape, g / x.size),)
        )

    _check_axis("mean", a, axis)
    count = x.shape[axis]

    def rule(g: Tensor) -> tuple[Tensor, ...]:
        grad = np.expand_dims(g / count, axis)
        return (np.broadcast_to(grad, x.shape).copy(),)

    return a.tape.record("mean", (a,), x.mean(axis=axis), rule)


def cross_entropy(logits: Node, targets: np.ndarray) -> Node:
    """
    Mean softmax cross-entropy of ``(m, c)`` logits against ``m`` integer
    class targets. The gradient with respect to the logits of a single row is
    ``softmax - onehot``, divided by ``m``.
    """
    _check_ndim("cross_entropy", logits, 2)

    targets = np.asarray(targets)
    num_rows, num_classes = logits.shape

    if targets.shape != (num_rows,):
        msg = f"Expected {num_rows} targets, got shape {targets.shape}."
        _fail("cross_entropy", logits, detail=msg)

    if num_rows and (targets.min() < 0 or targets.max() >= num_classes):
        raise IndexError("cross_entropy: target class out of range.")

    targets = targets.astype(np.intp)
    rows = np.arange(num_rows)

    log_norm, probs = _shifted_log_sum(logits.value, axis=1)
    losses = log_norm - logits.value[rows, targets]

    def rule(g: Tensor) -> tuple[Tensor, ...]:
        grad = probs.copy()
        grad[rows, targets] -= 1.0
        return (grad * (g / num_rows),)

    return logits.tape.record("cross_entropy", (logits,), losses.mean(), rule)
