from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from tcdiverse.constants import L2_GRID


def _sigmoid(z: np.ndarray) -> np.ndarray:
    return np.exp(-np.logaddexp(0.0, -z))


@dataclass
class LogRegModel:
    """
    Fitted binary logistic regression model.

    Parameters
    ----------
    weight
        Feature weights.
    bias
        Intercept, which is not regularised.
    l2_strength
        Regularisation strength the model was fitted with.
    num_iterations
        Number of gradient descent iterations used to fit the model.
    """

    weight: np.ndarray
    bias: float
    l2_strength: float
    num_iterations: int = 0

    def __post_init__(self):
        if not (np.all(np.isfinite(self.weight)) and np.isfinite(self.bias)):
            raise ValueError("Non-finite parameters not understood.")

    def decision_function(self, features: np.ndarray) -> np.ndarray:
        return features @ self.weight + self.bias

    def predict_proba(self, features: np.ndarray) -> np.ndarray:
        """
        Returns the probability of class 1 for each row of ``features``.
        """
        return _sigmoid(self.decision_function(features))

    def predict(self, features: np.ndarray) -> np.ndarray:
        return (self.decision_function(features) > 0).astype(np.int64)

    def accuracy(self, features: np.ndarray, labels: np.ndarray) -> float:
        return float(np.mean(self.predict(features) == labels))


def _check_data(features: np.ndarray, labels: np.ndarray):
    if features.ndim != 2 or len(features) != len(labels):
        raise ValueError("Expected features of shape (N, d) and N labels.")

    if len(labels) < 2:
        raise ValueError("Expected at least two observations.")

    if not (np.any(labels == 0) and np.any(labels == 1)):
        raise ValueError("Expected both classes in the labels.")


def fit_logreg(
    features: np.ndarray,
    labels: np.ndarray,
    l2_strength: float = 0.0,
    tol: float = 1e-6,
    max_iterations: int = 10_000,
) -> LogRegModel:
    """
    Fits a logistic regression model by full-batch gradient descent on the
    mean cross-entropy plus ``l2_strength`` times the squared norm of the
    weights. The bias is not regularised.

    Parameters
    ----------
    features
        Array of shape ``(N, d)``.
    labels
        Binary labels.
    l2_strength
        Nonnegative regularisation strength. Default 0.
    tol
        Descent stops once the norm of the gradient drops below this value.
        Default 1e-6.
    max_iterations
        Maximum number of iterations. Default 10 000.

    Returns
    -------
    LogRegModel
        The fitted model.

    Raises
    ------
    ValueError
        When there are fewer than two observations, only one class is
        present, or ``l2_strength`` is negative.
    """
    features = np.asarray(features, dtype=np.float64)
    labels = np.asarray(labels)
    _check_data(features, labels)

    if l2_strength < 0:
        raise ValueError("Negative l2_strength not understood.")

    num, dim = features.shape
    targets = labels.astype(np.float64)

    # Steps of half the inverse block Lipschitz constants make the
    # simultaneous update of weight and bias a descent step.
    norm = np.linalg.norm(features, 2) if dim else 0.0
    weight_step = 0.5 / (norm**2 / (4 * num) + 2 * l2_strength + 1e-12)
    bias_step = 0.5 / 0.25

    weight = np.zeros(dim)
    bias = 0.0
    iteration = 0

    for iteration in range(1, max_iterations + 1):
        resid = _sigmoid(features @ weight + bias) - targets
        grad_w = features.T @ resid / num + 2 * l2_strength * weight
        grad_b = resid.mean()

        if np.sqrt(grad_w @ grad_w + grad_b**2) < tol:
            break

        weight = weight - weight_step * grad_w
        bias = bias - bias_step * grad_b

    return LogRegModel(weight, float(bias), l2_strength, iteration)


def select_logreg(
    train_features: np.ndarray,
    train_labels: np.ndarray,
    val_features: np.ndarray,
    val_labels: np.ndarray,
    grid: Sequence[float] = L2_GRID,
) -> tuple[LogRegModel, float]:
    """
    Fits a model for every regularisation strength in the grid, and returns
    the one with the highest validation accuracy. Ties go to the strength
    that comes first in the grid.

    Returns
    -------
    tuple[LogRegModel, float]
        The selected model and its validation accuracy.
    """
    if len(grid) == 0:
        raise ValueError("Expected a nonempty grid.")

    best: tuple[LogRegModel, float] | None = None

    for l2_strength in grid:
        model = fit_logreg(train_features, train_labels, l2_strength)
        val_acc = model.accuracy(val_features, val_labels)

        if best is None or val_acc > best[1]:
            best = (model, val_acc)

    assert best is not None
    return best
