from __future__ import annotations

from collections.abc import Mapping

import numpy as np

from tcdiverse.diffengine import Node, Tape, ops
from tcdiverse.nets.Parameters import Parameters

NUM_CLASSES = 2


class LinearClassifier:
    """
    Linear map from a representation to two class logits.

    Parameters
    ----------
    params
        A ``"weight"`` of shape ``(repr_dim, 2)`` and a ``"bias"`` of shape
        ``(2,)``.
    """

    def __init__(self, params: Parameters):
        if set(params) != {"weight", "bias"}:
            raise ValueError("Expected weight and bias parameters.")

        if params["weight"].shape[1] != NUM_CLASSES:
            raise ValueError(f"Expected {NUM_CLASSES} output classes.")

        self.params = params

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, LinearClassifier)
            and self.params == other.params
        )

    @classmethod
    def init(
        cls, repr_dim: int, rng: np.random.Generator
    ) -> LinearClassifier:
        scale = np.sqrt(2 / repr_dim)
        weight = rng.normal(0, scale, (repr_dim, NUM_CLASSES))
        return cls(Parameters({"weight": weight, "bias": np.zeros(2)}))

    @property
    def input_dim(self) -> int:
        return self.params["weight"].shape[0]

    def forward(self, weights: Mapping[str, Node], reps: Node) -> Node:
        """
        Records the logits of the given ``(batch, repr_dim)`` representations.
        """
        logits = ops.matmul(reps, weights["weight"])
        return ops.add_bias(logits, weights["bias"])

    def __call__(self, reps: np.ndarray) -> np.ndarray:
        tape = Tape()
        weights = self.params.attach(tape, trainable=False)
        return self.forward(weights, tape.constant(reps)).value
