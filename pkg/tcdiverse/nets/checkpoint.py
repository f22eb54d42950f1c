from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

from tcdiverse.nets.Critic import Critic
from tcdiverse.nets.LinearClassifier import LinearClassifier
from tcdiverse.nets.ModelCollection import Member, ModelCollection
from tcdiverse.nets.Parameters import Parameters
from tcdiverse.nets.RepresentationModel import RepresentationModel
from tcdiverse.serialise import read_arrays, write_arrays


@dataclass
class Checkpoint:
    """
    Frozen snapshot of a collection (and its critic, when it has one) at the
    end of an epoch.

    Parameters
    ----------
    collection
        The collection.
    critic
        The critic, or ``None`` when training did not use one.
    epoch
        Number of completed epochs. Zero refers to the initial parameters.
    val_accuracy
        Validation accuracy used to select this checkpoint. NaN if unknown.
    config_hash
        Hash of the configuration that produced this checkpoint.
    """

    collection: ModelCollection
    critic: Critic | None
    epoch: int
    val_accuracy: float
    config_hash: str = ""

    def __post_init__(self):
        if self.epoch < 0:
            raise ValueError("Negative epoch not understood.")

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Checkpoint):
            return False

        same_acc = self.val_accuracy == other.val_accuracy or (
            math.isnan(self.val_accuracy) and math.isnan(other.val_accuracy)
        )

        return (
            self.collection == other.collection
            and self.critic == other.critic
            and self.epoch == other.epoch
            and same_acc
            and self.config_hash == other.config_hash
        )

    @property
    def num_models(self) -> int:
        return self.collection.num_models


def save_checkpoint(where: Path | str, checkpoint: Checkpoint):
    """
    Writes the checkpoint to the given location.
    """
    arrays = {}
    for idx, member in enumerate(checkpoint.collection):
        rep = member.representation.params
        arrays.update(rep.prefixed(f"model{idx}/representation/"))
        arrays.update(member.classifier.params.prefixed(f"model{idx}/clf/"))

    critic = checkpoint.critic
    settings = None
    if critic is not None:
        arrays.update(critic.params.prefixed("critic/"))
        settings = {
            "normalize_inputs": critic.normalize_inputs,
            "slope": critic.slope,
        }

    header = {
        "num_models": checkpoint.num_models,
        "epoch": checkpoint.epoch,
        "val_accuracy": checkpoint.val_accuracy,
        "config_hash": checkpoint.config_hash,
        "critic": settings,
    }

    write_arrays(where, header, arrays)


def load_checkpoint(where: Path | str) -> Checkpoint:
    """
    Reads a checkpoint written by :func:`save_checkpoint`.

    Raises
    ------
    FileNotFoundError
        When there is no file at the given location.
    ValueError
        When the file is not a valid checkpoint.
    """
    header, arrays = read_arrays(where)

    members = []
    for idx in range(header["num_models"]):
        rep = Parameters.unprefixed(arrays, f"model{idx}/representation/")
        clf = Parameters.unprefixed(arrays, f"model{idx}/clf/")
        members.append(
            Member(RepresentationModel(rep), LinearClassifier(clf))
        )

    critic = None
    if (settings := header["critic"]) is not None:
        params = Parameters.unprefixed(arrays, "critic/")
        normalize, slope = settings["normalize_inputs"], settings["slope"]
        critic = Critic(params, normalize, slope)

    return Checkpoint(
        collection=ModelCollection(members),
        critic=critic,
        epoch=header["epoch"],
        val_accuracy=float(header["val_accuracy"]),
        config_hash=header["config_hash"],
    )
