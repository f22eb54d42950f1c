from __future__ import annotations

from collections.abc import Mapping

import numpy as np

from tcdiverse.diffengine import Node, Tape, ops
from tcdiverse.nets.NetParams import NetParams
from tcdiverse.nets.Parameters import Parameters, mlp_parameters, num_layers


class RepresentationModel:
    """
    Multilayer perceptron mapping flattened images to a representation. Hidden
    layers use rectified linear units; the output layer is linear.

    Parameters
    ----------
    params
        Dense layer parameters, as created by
        :func:`~tcdiverse.nets.Parameters.mlp_parameters`.
    """

    def __init__(self, params: Parameters):
        if num_layers(params) < 1:
            raise ValueError("Expected at least one dense layer.")

        self.params = params

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, RepresentationModel)
            and self.params == other.params
        )

    @classmethod
    def init(
        cls,
        input_dim: int,
        rng: np.random.Generator,
        net: NetParams = NetParams(),
    ) -> RepresentationModel:
        sizes = (input_dim, *net.hidden_sizes, net.repr_dim)
        return cls(mlp_parameters(sizes, rng))

    @property
    def input_dim(self) -> int:
        return self.params["0.weight"].shape[0]

    @property
    def output_dim(self) -> int:
        last = num_layers(self.params) - 1
        return self.params[f"{last}.weight"].shape[1]

    def forward(self, weights: Mapping[str, Node], inputs: Node) -> Node:
        """
        Records the forward pass on the tape of ``inputs``.

        Parameters
        ----------
        weights
            This model's parameters, attached to the same tape.
        inputs
            Batch of inputs, of shape ``(batch, input_dim)``.

        Returns
        -------
        Node
            Representations, of shape ``(batch, output_dim)``.
        """
        out = inputs
        last = num_layers(self.params) - 1

        for idx in range(last + 1):
            out = ops.matmul(out, weights[f"{idx}.weight"])
            out = ops.add_bias(out, weights[f"{idx}.bias"])

            if idx < last:
                out = ops.relu(out)

        return out

    def __call__(self, inputs: np.ndarray) -> np.ndarray:
        """
        Computes representations of the given inputs, without gradients.
        """
        tape = Tape()
        weights = self.params.attach(tape, trainable=False)
        return self.forward(weights, tape.constant(inputs)).value
