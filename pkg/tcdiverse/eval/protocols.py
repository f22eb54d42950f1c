"""
Rapid adaptation protocols. Each protocol turns the frozen outputs of a
collection into a classifier for a shifted distribution, using a small
adaptation training set and a small validation set, and reports accuracy on
the remaining test observations.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from tcdiverse.constants import L2_GRID
from tcdiverse.data.generate import AdaptSplits
from tcdiverse.eval.FrozenOutputs import FrozenOutputs, compute_frozen_outputs
from tcdiverse.eval.LogisticRegression import select_logreg
from tcdiverse.nets.ModelCollection import ModelCollection
from tcdiverse.nets.checkpoint import Checkpoint

PROTOCOLS = ("best", "ensemble", "linear")
"""
Names of the adaptation protocols, in reporting order.
"""


@dataclass
class ProtocolResult:
    """
    Outcome of a single protocol.

    Parameters
    ----------
    val_accuracy
        Accuracy on the adaptation validation split.
    test_accuracy
        Accuracy on the adaptation test split, or NaN when there is none.
    choice
        The selected member index (Best), or the selected regularisation
        strength (Ensemble and Linear).
    """

    val_accuracy: float
    test_accuracy: float
    choice: float

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ProtocolResult):
            return False

        same_test = self.test_accuracy == other.test_accuracy or (
            math.isnan(self.test_accuracy) and math.isnan(other.test_accuracy)
        )

        return (
            self.val_accuracy == other.val_accuracy
            and same_test
            and self.choice == other.choice
        )


@dataclass
class FrozenSplits:
    """
    Frozen outputs on the adaptation splits. The test split may be missing,
    as it is while training.
    """

    adapt_train: FrozenOutputs
    adapt_val: FrozenOutputs
    adapt_test: FrozenOutputs | None = None

    @property
    def num_models(self) -> int:
        return self.adapt_val.num_models


def protocol_best(splits: FrozenSplits) -> ProtocolResult:
    """
    Selects the single member with the highest validation accuracy (ties go
    to the lowest index), and reports the test accuracy of its predictions.
    Nothing is fitted.
    """
    val_accs = splits.adapt_val.member_accuracies()
    choice = int(np.argmax(val_accs))

    test_acc = math.nan
    if splits.adapt_test is not None:
        test_acc = float(splits.adapt_test.member_accuracies()[choice])

    return ProtocolResult(float(val_accs[choice]), test_acc, choice)


def _fit_protocol(
    splits: FrozenSplits, features: str, grid: Sequence[float]
) -> ProtocolResult:
    def select(outputs: FrozenOutputs) -> np.ndarray:
        if features == "probs":
            return outputs.probs

        return outputs.concatenated_reps()

    train, val = splits.adapt_train, splits.adapt_val
    model, val_acc = select_logreg(
        select(train), train.labels, select(val), val.labels, grid
    )

    test_acc = math.nan
    if (test := splits.adapt_test) is not None:
        test_acc = model.accuracy(select(test), test.labels)

    return ProtocolResult(val_acc, test_acc, model.l2_strength)


def protocol_ensemble(
    splits: FrozenSplits, grid: Sequence[float] = L2_GRID
) -> ProtocolResult:
    """
    Fits a logistic regression model on the members' class-1 probabilities
    (one feature per member), with the regularisation strength chosen on the
    validation split.
    """
    return _fit_protocol(splits, "probs", grid)


def protocol_linear(
    splits: FrozenSplits, grid: Sequence[float] = L2_GRID
) -> ProtocolResult:
    """
    Fits a logistic regression model on the concatenated representations of
    all members, with the regularisation strength chosen on the validation
    split.
    """
    return _fit_protocol(splits, "reps", grid)


def run_protocols(
    splits: FrozenSplits, grid: Sequence[float] = L2_GRID
) -> dict[str, ProtocolResult]:
    """
    Runs all protocols on the given frozen splits.
    """
    return {
        "best": protocol_best(splits),
        "ensemble": protocol_ensemble(splits, grid),
        "linear": protocol_linear(splits, grid),
    }


def evaluate_checkpoint(
    model: Checkpoint | ModelCollection,
    splits: AdaptSplits,
    grid: Sequence[float] = L2_GRID,
) -> dict[str, ProtocolResult]:
    """
    Evaluates a frozen collection with all three protocols on the given
    adaptation splits.
    """
    frozen = FrozenSplits(
        compute_frozen_outputs(model, splits.adapt_train),
        compute_frozen_outputs(model, splits.adapt_val),
        compute_frozen_outputs(model, splits.adapt_test),
    )

    return run_protocols(frozen, grid)
