from __future__ import annotations

import hashlib
from collections.abc import Iterator
from dataclasses import dataclass

import numpy as np

from tcdiverse.constants import STREAM_CRITIC, STREAM_MODELS
from tcdiverse.nets.Critic import Critic
from tcdiverse.nets.LinearClassifier import LinearClassifier
from tcdiverse.nets.NetParams import NetParams
from tcdiverse.nets.RepresentationModel import RepresentationModel


@dataclass
class Member:
    """
    A single (representation model, linear classifier) pair.
    """

    representation: RepresentationModel
    classifier: LinearClassifier

    def logits(self, inputs: np.ndarray) -> np.ndarray:
        return self.classifier(self.representation(inputs))


class ModelCollection:
    """
    The members of a collection, which are trained jointly.

    Parameters
    ----------
    members
        The (representation model, linear classifier) pairs. All
        representation models must take inputs of the same dimension.

    Raises
    ------
    ValueError
        When there are no members, or their dimensions do not agree.
    """

    def __init__(self, members: list[Member]):
        if not members:
            raise ValueError("Expected at least one member.")

        first = members[0].representation
        for member in members:
            rep = member.representation

            if rep.input_dim != first.input_dim:
                raise ValueError("Members have different input dimensions.")

            if rep.output_dim != member.classifier.input_dim:
                msg = "Classifier does not fit its representation model."
                raise ValueError(msg)

        self._members = list(members)

    def __len__(self) -> int:
        return len(self._members)

    def __iter__(self) -> Iterator[Member]:
        return iter(self._members)

    def __getitem__(self, idx: int) -> Member:
        return self._members[idx]

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, ModelCollection)
            and self._members == other._members
        )

    @property
    def num_models(self) -> int:
        return len(self._members)

    @property
    def input_dim(self) -> int:
        return self._members[0].representation.input_dim

    @property
    def repr_dim(self) -> int:
        return self._members[0].representation.output_dim

    def digest(self) -> str:
        """
        SHA-256 digest of all member parameters.
        """
        sha = hashlib.sha256()

        for member in self._members:
            sha.update(member.representation.params.digest().encode())
            sha.update(member.classifier.params.digest().encode())

        return sha.hexdigest()


def init_member(
    input_dim: int, seed: int, idx: int, net: NetParams = NetParams()
) -> Member:
    """
    Initialises the member at index ``idx`` of a collection with the given
    seed. Each member draws from its own random stream, so a member does not
    depend on the size of its collection.
    """
    rng = np.random.default_rng([seed, STREAM_MODELS, idx])
    representation = RepresentationModel.init(input_dim, rng, net)
    classifier = LinearClassifier.init(net.repr_dim, rng)
    return Member(representation, classifier)


def init_collection(
    num_models: int,
    input_dim: int,
    seed: int,
    net: NetParams = NetParams(),
) -> ModelCollection:
    """
    Initialises a collection of ``num_models`` members for inputs of the given
    dimension. Weights are normal with variance ``2 / fan_in``, and biases
    are zero. The same seed gives the same collection.

    Raises
    ------
    ValueError
        When ``num_models`` or ``input_dim`` is not positive.
    """
    if num_models < 1:
        raise ValueError("Expected num_models >= 1.")

    if input_dim < 1:
        raise ValueError("Expected input_dim >= 1.")

    members = [
        init_member(input_dim, seed, idx, net) for idx in range(num_models)
    ]

    return ModelCollection(members)


def init_critic(
    num_models: int, seed: int, net: NetParams = NetParams()
) -> Critic:
    """
    Initialises the critic of a collection of ``num_models`` members.
    """
    rng = np.random.default_rng([seed, STREAM_CRITIC])
    return Critic.init(num_models, rng, net)
