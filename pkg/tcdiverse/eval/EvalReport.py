from __future__ import annotations

import json
import math
from collections.abc import Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from tcdiverse.data.ColoredDataset import Shift, Variant
from tcdiverse.eval.protocols import PROTOCOLS, ProtocolResult


@dataclass
class EvalReport:
    """
    Adaptation results of one training method on one test condition, for one
    or more seeds.

    Parameters
    ----------
    variant
        Benchmark.
    method
        Name of the training method.
    num_models
        Number of members in each evaluated collection.
    condition
        Shifted test condition.
    seeds
        Seeds of the evaluated runs.
    results
        For each seed, the result of every protocol.
    """

    variant: Variant
    method: str
    num_models: int
    condition: Shift
    seeds: list[int] = field(default_factory=list)
    results: list[dict[str, ProtocolResult]] = field(default_factory=list)

    def __post_init__(self):
        if len(self.seeds) != len(self.results):
            raise ValueError("Expected one result per seed.")

        for result in self.results:
            for protocol in result.values():
                acc = protocol.test_accuracy
                if not (math.isnan(acc) or 0 <= acc <= 1):
                    raise ValueError("Expected accuracies in [0, 1].")

    @property
    def key(self) -> tuple[str, str, int, str]:
        return (
            self.variant.value,
            self.method,
            self.num_models,
            self.condition.value,
        )

    def accuracies(self, protocol: str) -> np.ndarray:
        """
        Returns the test accuracy of the given protocol for every seed.
        """
        return np.array([res[protocol].test_accuracy for res in self.results])

    def choices(self, protocol: str) -> list[float]:
        """
        Returns the choice (member index or regularisation strength) of the
        given protocol for every seed.
        """
        return [res[protocol].choice for res in self.results]

    def mean(self, protocol: str) -> float:
        accs = self.accuracies(protocol)
        return float(accs.mean()) if accs.size else math.nan

    def std(self, protocol: str) -> float:
        """
        Population standard deviation of the test accuracy across seeds.
        """
        accs = self.accuracies(protocol)
        return float(accs.std()) if accs.size else math.nan

    @classmethod
    def merge(cls, reports: Sequence[EvalReport]) -> EvalReport:
        """
        Combines reports of the same method and test condition into a single
        report over all of their seeds, ordered by seed.

        Raises
        ------
        ValueError
            When the reports do not share a key, or repeat a seed.
        """
        if not reports or len({report.key for report in reports}) != 1:
            raise ValueError("Expected reports with a single shared key.")

        pairs = sorted(
            (
                (seed, result)
                for report in reports
                for seed, result in zip(report.seeds, report.results)
            ),
            key=lambda pair: pair[0],
        )
        seeds = [seed for seed, _ in pairs]

        if len(set(seeds)) != len(seeds):
            raise ValueError("Reports repeat a seed.")

        first = reports[0]
        return cls(
            first.variant,
            first.method,
            first.num_models,
            first.condition,
            seeds,
            [result for _, result in pairs],
        )

    def to_dict(self) -> dict:
        return {
            "variant": self.variant.value,
            "method": self.method,
            "num_models": self.num_models,
            "condition": self.condition.value,
            "seeds": list(self.seeds),
            "results": [
                {name: vars(res[name]) for name in PROTOCOLS if name in res}
                for res in self.results
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> EvalReport:
        return cls(
            variant=Variant(data["variant"]),
            method=data["method"],
            num_models=data["num_models"],
            condition=Shift(data["condition"]),
            seeds=list(data["seeds"]),
            results=[
                {name: ProtocolResult(**vals) for name, vals in res.items()}
                for res in data["results"]
            ],
        )


def write_reports(where: Path | str, reports: Sequence[EvalReport]):
    """
    Writes the given reports to a JSON file.
    """
    with open(where, "w") as fh:
        data = [report.to_dict() for report in reports]
        json.dump(data, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_reports(where: Path | str) -> list[EvalReport]:
    """
    Reads reports written by :func:`write_reports`.
    """
    with open(where) as fh:
        return [EvalReport.from_dict(data) for data in json.load(fh)]
