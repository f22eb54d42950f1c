from __future__ import annotations

from collections.abc import Mapping, Sequence

import numpy as np

from tcdiverse.diffengine import Node, Tape, ops
from tcdiverse.nets.NetParams import NetParams
from tcdiverse.nets.Parameters import Parameters, mlp_parameters, num_layers


class Critic:
    """
    Variational critic that scores a tuple of representations with a single
    real number. The representations are concatenated (after scaling each
    row to unit norm, if ``normalize_inputs`` is set) and passed through a
    multilayer perceptron with leaky rectifiers.

    Parameters
    ----------
    params
        Dense layer parameters, as created by
        :func:`~tcdiverse.nets.Parameters.mlp_parameters`. The last layer
        must have a single output.
    normalize_inputs
        Whether to scale every representation row to unit norm. Default
        ``True``.
    slope
        Negative slope of the leaky rectifiers. Default 0.2.
    """

    def __init__(
        self,
        params: Parameters,
        normalize_inputs: bool = True,
        slope: float = 0.2,
    ):
        last = num_layers(params) - 1
        if last < 0 or params[f"{last}.weight"].shape[1] != 1:
            raise ValueError("Expected a single critic output.")

        self.params = params
        self.normalize_inputs = normalize_inputs
        self.slope = slope

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, Critic)
            and self.params == other.params
            and self.normalize_inputs == other.normalize_inputs
            and self.slope == other.slope
        )

    @classmethod
    def init(
        cls,
        num_inputs: int,
        rng: np.random.Generator,
        net: NetParams = NetParams(),
        input_dim: int | None = None,
    ) -> Critic:
        """
        Initialises a critic for ``num_inputs`` representations, each of
        dimension ``input_dim`` (by default ``net.repr_dim``).
        """
        dim = net.repr_dim if input_dim is None else input_dim
        sizes = (num_inputs * dim, *net.critic_hidden_sizes, 1)
        return cls(
            mlp_parameters(sizes, rng),
            net.normalize_critic_inputs,
            net.critic_slope,
        )

    @property
    def input_dim(self) -> int:
        return self.params["0.weight"].shape[0]

    def with_params(self, params: Parameters) -> Critic:
        """
        Returns a critic with the same settings but other parameters.
        """
        return Critic(params, self.normalize_inputs, self.slope)

    def forward(
        self, weights: Mapping[str, Node], reps: Sequence[Node]
    ) -> Node:
        """
        Records the scores of the given tuples of representations.

        Parameters
        ----------
        weights
            This critic's parameters, attached to the same tape.
        reps
            One ``(batch, dim)`` node per representation model.

        Returns
        -------
        Node
            Scores, of shape ``(batch, 1)``.
        """
        if self.normalize_inputs:
            reps = [ops.l2_normalize_rows(rep) for rep in reps]

        out = ops.concat_columns(reps)
        last = num_layers(self.params) - 1

        for idx in range(last + 1):
            out = ops.matmul(out, weights[f"{idx}.weight"])
            out = ops.add_bias(out, weights[f"{idx}.bias"])

            if idx < last:
                out = ops.leaky_relu(out, self.slope)

        return out

    def __call__(self, reps: Sequence[np.ndarray]) -> np.ndarray:
        """
        Scores the given tuples of representations, without gradients. Returns
        an array of shape ``(batch,)``.
        """
        tape = Tape()
        weights = self.params.attach(tape, trainable=False)
        nodes = [tape.constant(rep) for rep in reps]
        return self.forward(weights, nodes).value[:, 0]
