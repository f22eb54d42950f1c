import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from time import perf_counter
from typing import Literal

_LOSS_PREFIX = "loss_"
_ACC_PREFIX = "acc_"
_SCALARS = ("tc_estimate", "val_best", "val_ensemble", "val_linear")


def _same(first: float, second: float) -> bool:
    return first == second or (math.isnan(first) and math.isnan(second))


def _member_values(row: dict[str, str], prefix: str) -> list[float]:
    names = [name for name in row if name.startswith(prefix)]
    names.sort(key=lambda name: int(name[len(prefix) :]))
    return [float(row[name]) for name in names]


@dataclass
class EpochRecord:
    """
    Metrics of a single training epoch.

    Parameters
    ----------
    epoch
        Epoch number, starting at 1.
    losses
        Mean training cross-entropy of each member over the epoch's model
        steps.
    accuracies
        Mean training accuracy of each member over the epoch's model steps.
    tc_estimate
        Mean total correlation estimate over the epoch's model steps. NaN
        when training does not use a critic.
    val_best
        Validation accuracy of the Best protocol after the epoch.
    val_ensemble
        Validation accuracy of the Ensemble protocol after the epoch.
    val_linear
        Validation accuracy of the Linear protocol after the epoch. This is
        the accuracy that checkpoints are selected on.
    """

    epoch: int
    losses: list[float] = field(default_factory=list)
    accuracies: list[float] = field(default_factory=list)
    tc_estimate: float = math.nan
    val_best: float = math.nan
    val_ensemble: float = math.nan
    val_linear: float = math.nan

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, EpochRecord):
            return False

        # NaN values are equal to each other here; they mark absent metrics.
        mine = [*self.losses, *self.accuracies, *self._scalars()]
        theirs = [*other.losses, *other.accuracies, *other._scalars()]

        return (
            self.epoch == other.epoch
            and len(self.losses) == len(other.losses)
            and len(self.accuracies) == len(other.accuracies)
            and all(_same(a, b) for a, b in zip(mine, theirs))
        )

    def _scalars(self) -> list[float]:
        return [getattr(self, name) for name in _SCALARS]

    def as_dict(self) -> dict[str, float]:
        """
        Flat rendering of this record, with one entry per member metric.
        """
        row: dict[str, float] = {"epoch": self.epoch}
        for idx, (loss, acc) in enumerate(zip(self.losses, self.accuracies)):
            row[f"{_LOSS_PREFIX}{idx}"] = loss
            row[f"{_ACC_PREFIX}{idx}"] = acc

        row.update({name: getattr(self, name) for name in _SCALARS})
        return row


class Statistics:
    """
    The Statistics object tracks per-epoch metrics of a training run. This can
    be helpful in analysing training progress.

    Parameters
    ----------
    collect_stats
        Whether to collect statistics at all.
    """

    runtimes: list[float]
    records: list[EpochRecord]

    def __init__(self, collect_stats: bool = True):
        self.runtimes = []
        self.records = []

        self._clock = perf_counter()
        self._collect_stats = collect_stats

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, Statistics)
            and self._collect_stats == other._collect_stats
            and self.runtimes == other.runtimes
            and self.records == other.records
        )

    def __len__(self) -> int:
        return len(self.records)

    @property
    def num_epochs(self) -> int:
        return len(self.records)

    def is_collecting(self) -> bool:
        return self._collect_stats

    def collect(self, record: EpochRecord):
        """
        Adds the given epoch record, together with the time elapsed since the
        previous record was added (or since this object was created).
        """
        if not self._collect_stats:
            return

        start = self._clock
        self._clock = perf_counter()

        self.runtimes.append(self._clock - start)
        self.records.append(record)

    @classmethod
    def from_csv(cls, where: Path | str, delimiter: str = ",", **kwargs):
        """
        Reads a Statistics object from the CSV file at the given filesystem
        location.

        Parameters
        ----------
        where
            Filesystem location to read from.
        delimiter
            Value separator. Default comma.
        kwargs
            Additional keyword arguments. These are passed to
            :class:`csv.DictReader`.

        Returns
        -------
        Statistics
            Statistics object populated with the data read from the given
            filesystem location.
        """
        with open(where) as fh:
            lines = fh.readlines()

        stats = cls()

        for row in csv.DictReader(lines, delimiter=delimiter, **kwargs):
            record = EpochRecord(
                epoch=int(row["epoch"]),
                losses=_member_values(row, _LOSS_PREFIX),
                accuracies=_member_values(row, _ACC_PREFIX),
                **{name: float(row[name]) for name in _SCALARS},
            )

            stats.runtimes.append(float(row["runtime"]))
            stats.records.append(record)

        return stats

    def to_csv(
        self,
        where: Path | str,
        delimiter: str = ",",
        quoting: Literal[0, 1, 2, 3] = csv.QUOTE_MINIMAL,
        **kwargs,
    ):
        """
        Writes this Statistics object to the given location, as a CSV file.
        There is one line per epoch.

        Parameters
        ----------
        where
            Filesystem location to write to.
        delimiter
            Value separator. Default comma.
        quoting
            Quoting strategy. Default only quotes values when necessary.
        kwargs
            Additional keyword arguments. These are passed to
            :class:`csv.DictWriter`.
        """
        num_models = len(self.records[0].losses) if self.records else 0
        header = [
            "runtime",
            "epoch",
            *(f"{_LOSS_PREFIX}{idx}" for idx in range(num_models)),
            *(f"{_ACC_PREFIX}{idx}" for idx in range(num_models)),
            *_SCALARS,
        ]

        with open(where, "w", newline="") as fh:
            writer = csv.DictWriter(
                fh, header, delimiter=delimiter, quoting=quoting, **kwargs
            )

            writer.writeheader()

            for runtime, record in zip(self.runtimes, self.records):
                writer.writerow({"runtime": runtime, **record.as_dict()})
