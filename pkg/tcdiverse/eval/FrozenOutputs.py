from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from tcdiverse.data.ColoredDataset import ColoredDataset
from tcdiverse.nets.ModelCollection import ModelCollection
from tcdiverse.nets.checkpoint import Checkpoint

_CHUNK_SIZE = 4096


def _same_margins(first: np.ndarray | None, second: np.ndarray | None):
    if first is None or second is None:
        return first is second

    return np.array_equal(first, second)


@dataclass
class FrozenOutputs:
    """
    Outputs of a frozen collection on a dataset.

    Parameters
    ----------
    reps
        One ``(N, repr_dim)`` array of representations per member.
    probs
        Array of shape ``(N, num_models)`` with each member's probability of
        class 1.
    labels
        The ``N`` labels of the dataset.
    margins
        Optional array of shape ``(N, num_models)`` with each member's
        class-1 logit minus its class-0 logit. When given, predictions use its
        sign, which stays exact where the probabilities round to one half.
    """

    reps: list[np.ndarray]
    probs: np.ndarray
    labels: np.ndarray
    margins: np.ndarray | None = None

    def __post_init__(self):
        num = len(self.labels)

        if self.probs.shape != (num, len(self.reps)):
            raise ValueError("Expected one probability per member and row.")

        if any(len(rep) != num for rep in self.reps):
            raise ValueError("Expected one representation per row.")

        if self.margins is not None and self.margins.shape != self.probs.shape:
            raise ValueError("Expected one margin per member and row.")

        if np.any((self.probs < 0) | (self.probs > 1)):
            raise ValueError("Expected probabilities in [0, 1].")

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, FrozenOutputs)
            and len(self.reps) == len(other.reps)
            and all(map(np.array_equal, self.reps, other.reps))
            and np.array_equal(self.probs, other.probs)
            and np.array_equal(self.labels, other.labels)
            and _same_margins(self.margins, other.margins)
        )

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def num_models(self) -> int:
        return len(self.reps)

    def predictions(self) -> np.ndarray:
        """
        Returns each member's predicted class (the argmax of its logits) as an
        array of shape ``(N, num_models)``.
        """
        if self.margins is not None:
            return (self.margins > 0).astype(np.int64)

        return (self.probs > 0.5).astype(np.int64)

    def member_accuracies(self) -> np.ndarray:
        """
        Returns the accuracy of each member's predictions.
        """
        return np.mean(self.predictions() == self.labels[:, None], axis=0)

    def concatenated_reps(self) -> np.ndarray:
        return np.hstack(self.reps)


def compute_frozen_outputs(
    model: Checkpoint | ModelCollection, data: ColoredDataset
) -> FrozenOutputs:
    """
    Computes the representations and class-1 probabilities of every member
    on the given dataset. This is pure inference: nothing is updated.

    Raises
    ------
    ValueError
        When the input dimension of the collection does not match the
        dataset.
    """
    collection = model.collection if isinstance(model, Checkpoint) else model

    if collection.input_dim != data.input_dim:
        msg = f"Collection takes inputs of dimension {collection.input_dim}"
        raise ValueError(f"{msg}, but the data has {data.input_dim}.")

    reps = []
    probs = np.empty((len(data), collection.num_models))
    margins = np.empty_like(probs)

    for idx, member in enumerate(collection):
        member_reps = []

        for start in range(0, len(data), _CHUNK_SIZE):
            chunk = data.inputs[start : start + _CHUNK_SIZE]
            rep = member.representation(chunk)
            logits = member.classifier(rep)

            # Class-1 entry of the softmax over the two logits.
            margin = logits[:, 1] - logits[:, 0]
            margins[start : start + len(chunk), idx] = margin
            probs[start : start + len(chunk), idx] = np.exp(
                -np.logaddexp(0.0, -margin)
            )
            member_reps.append(rep)

        if member_reps:
            reps.append(np.vstack(member_reps))
        else:
            reps.append(np.empty((0, member.representation.output_dim)))

    return FrozenOutputs(reps, probs, data.labels.copy(), margins)
