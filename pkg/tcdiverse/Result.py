from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

from tcdiverse.Statistics import Statistics
from tcdiverse.nets.checkpoint import Checkpoint

if TYPE_CHECKING:
    from tcdiverse.DiversityTrainer import TrainState


@dataclass
class TrainResult:
    """
    Stores the outcomes of a single training run. An instance of this class is
    returned once the DiversityTrainer completes.

    Parameters
    ----------
    best
        The checkpoint with the highest validation accuracy.
    state
        The training state after the final epoch.
    stats
        A Statistics object containing per-epoch metrics.
    num_epochs
        Number of epochs performed.
    runtime
        Total runtime of the training loop, in seconds.

    Raises
    ------
    ValueError
        When the number of epochs or runtime are negative.
    """

    best: Checkpoint
    state: TrainState
    stats: Statistics
    num_epochs: int
    runtime: float

    def __post_init__(self):
        if self.num_epochs < 0:
            raise ValueError("Negative number of epochs not understood.")

        if self.runtime < 0:
            raise ValueError("Negative runtime not understood.")

    def summary(self) -> str:
        """
        Returns a nicely formatted result summary.
        """
        final = self.stats.records[-1] if self.stats.records else None
        losses = "-" if final is None else _join(final.losses)
        accs = "-" if final is None else _join(final.accuracies)

        summary = [
            "Training results",
            "================",
            f"      # models: {self.best.num_models}",
            f"    best epoch: {self.best.epoch}",
            f"  val accuracy: {self.best.val_accuracy:.4f}",
            f"    final loss: {losses}",
            f"     final acc: {accs}",
            f"      # epochs: {self.num_epochs}",
            f"      run-time: {self.runtime:.2f} seconds",
        ]

        return "\n".join(summary)

    def __str__(self) -> str:
        return self.summary()


def _join(values: list[float]) -> str:
    return " ".join(f"{value:.4f}" for value in values)
