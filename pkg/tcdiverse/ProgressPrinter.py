from __future__ import annotations

import math
from importlib.metadata import version
from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from tcdiverse.DiversityTrainer import TrainParams
    from tcdiverse.Result import TrainResult
    from tcdiverse.Statistics import Statistics
    from tcdiverse.data.ColoredDataset import ColoredDataset

# Templates for various different outputs.
_EPOCH = (
    "{special} {epoch:>6} {elapsed:>7}s | "
    "{loss:>7} {acc:>6} {tc:>7} | "
    "{best:>6} {ensemble:>6} {linear:>6}"
)

_START = """tcdiverse v{version}

Training a collection with:
    {model_text} on {num_examples} {variant} examples ({input_dim} inputs)
    {objective_text}
    {epochs} epochs, batches of {batch_size}

                   |        Training        |      Validation
   Epoch     Time  |    Loss    Acc      TC |   Best    Ens    Lin"""

_END = """
Training finished in {runtime:.2f}s after {epochs} epochs.
Best validation accuracy {val_accuracy} at epoch {best_epoch}.

{summary}
"""


def _fmt(value: float, digits: int = 3) -> str:
    return "-" if math.isnan(value) else f"{value:.{digits}f}"


class ProgressPrinter:
    """
    A helper class that prints relevant training progress information to the
    console, if desired.

    Parameters
    ----------
    should_print
        Whether to print information to the console. When ``False``, nothing is
        printed.
    display_interval
        Number of epochs between epoch logs. Epochs with a new best validation
        accuracy are always printed.
    """

    def __init__(self, should_print: bool, display_interval: int = 1):
        if display_interval < 1:
            raise ValueError("Expected display_interval >= 1.")

        self._print = should_print
        self._display_interval = display_interval
        self._best_val = -math.inf

    def epoch(self, stats: Statistics):
        """
        Outputs the metrics of the latest epoch. An ``H`` marks epochs with a
        new best validation accuracy.
        """
        if not stats.is_collecting() or not stats.records:
            return

        record = stats.records[-1]
        improved = record.val_linear > self._best_val

        if improved:
            self._best_val = record.val_linear

        should_print = self._print and (
            improved or record.epoch % self._display_interval == 0
        )

        if not should_print:
            return

        losses = record.losses or [math.nan]
        accs = record.accuracies or [math.nan]

        msg = _EPOCH.format(
            special="H" if improved else " ",
            epoch=record.epoch,
            elapsed=round(sum(stats.runtimes)),
            loss=_fmt(sum(losses) / len(losses)),
            acc=_fmt(sum(accs) / len(accs)),
            tc=_fmt(record.tc_estimate),
            best=_fmt(record.val_best),
            ensemble=_fmt(record.val_ensemble),
            linear=_fmt(record.val_linear),
        )
        print(msg)

    def start(self, data: ColoredDataset, params: TrainParams):
        """
        Outputs information about the training set and the objective.
        """
        if not self._print:
            return

        num = params.num_models
        model_text = f"{num} model{'s' if num > 1 else ''}"

        if params.uses_critic:
            kind = "conditional" if params.conditional else "unconditional"
            objective_text = (
                f"cross-entropy + {params.beta} x {kind} TC estimate, "
                f"{params.critic_steps} critic step(s) per model step"
            )
        else:
            objective_text = "cross-entropy only"

        msg = _START.format(
            version=version("tcdiverse"),
            model_text=model_text,
            num_examples=len(data),
            variant=data.variant.value,
            input_dim=data.input_dim,
            objective_text=objective_text,
            epochs=params.epochs,
            batch_size=params.batch_size,
        )
        print(msg)

    def end(self, result: TrainResult):
        """
        Outputs information about the training duration and the selected
        checkpoint.
        """
        if self._print:
            msg = _END.format(
                runtime=result.runtime,
                epochs=result.num_epochs,
                val_accuracy=_fmt(result.best.val_accuracy),
                best_epoch=result.best.epoch,
                summary=result.summary(),
            )
            print(msg)
