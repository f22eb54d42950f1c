"""
Multi-seed experiments: dataset generation, training, evaluation, and the
aggregated results table. Every seed writes its artifacts to its own
directory below the output directory::

    <output_dir>/cache/<dataset key>.bin
    <output_dir>/seed_<seed>/checkpoint.bin
    <output_dir>/seed_<seed>/metrics.csv
    <output_dir>/seed_<seed>/eval.json
    <output_dir>/results.csv
    <output_dir>/failures.csv
    <output_dir>/manifest.json
"""

from __future__ import annotations

import csv
import json
import os
import sys
import time
import tomllib
import warnings
from collections import defaultdict
from collections.abc import Sequence
from dataclasses import dataclass, field, replace
from enum import Enum
from functools import partial
from importlib.metadata import version
from pathlib import Path
from typing import Any

from tqdm.contrib.concurrent import process_map

from tcdiverse.DiversityTrainer import TrainParams
from tcdiverse.constants import MNIST_DIR_ENV
from tcdiverse.data.ColoredDataset import Shift, Variant
from tcdiverse.data.cache import DatasetBundle, bundle_key, load_or_generate
from tcdiverse.data.generate import GeneratorParams
from tcdiverse.data.idx import RawDigits, mnist_files, read_mnist
from tcdiverse.eval.EvalReport import EvalReport, read_reports, write_reports
from tcdiverse.eval.protocols import PROTOCOLS, evaluate_checkpoint
from tcdiverse.exceptions import CacheMismatchWarning
from tcdiverse.nets.NetParams import NetParams
from tcdiverse.nets.checkpoint import (
    Checkpoint,
    load_checkpoint,
    save_checkpoint,
)
from tcdiverse.serialise import config_hash, dumps
from tcdiverse.train import train_collection, train_erm_baseline


class Method(Enum):
    """
    Training methods. The two total correlation methods differ only in
    whether the estimate is conditioned on the label.
    """

    CONDITIONAL_TC = "conditional_tc"
    UNCONDITIONAL_TC = "unconditional_tc"
    ERM = "erm"


# Training defaults that differ for the three-signal benchmark.
_TCMNIST_TRAIN_DEFAULTS = {"epochs": 500, "critic_steps": 5}


def _train_params(variant: Variant, data: dict[str, Any]) -> TrainParams:
    if variant is Variant.TCMNIST:
        data = _TCMNIST_TRAIN_DEFAULTS | data

    return TrainParams(**data)


@dataclass
class ExperimentParams:
    """
    Configuration of a multi-seed experiment.

    Parameters
    ----------
    variant
        Benchmark to run on. Default C-MNIST.
    method
        Training method. Default conditional total correlation.
    n_models
        Number of members in each collection. Forced to one for ERM.
    seeds
        Seeds to run, one independent job each. Default 0 up to 9.
    train
        Training parameters. Their number of models, seed, weight and
        conditioning are set per seed from the fields above. When not given,
        the defaults are used, except that TC-MNIST trains for 500 epochs
        with 5 critic steps.
    generator
        Dataset generator parameters. Their seed is set per seed.
    nets
        Architecture of the members and the critic.
    mnist_dir
        Directory with the MNIST files. When not given, the directory named
        by the ``TCDIVERSE_MNIST_DIR`` environment variable is used.
    output_dir
        Directory all artifacts are written to.
    workers
        Number of seeds that run in parallel. Default 1.
    overwrite
        Whether existing checkpoints and reports may be replaced.

    Raises
    ------
    ValueError
        When any of the above arguments is out of range.
    """

    variant: Variant = Variant.CMNIST
    method: Method = Method.CONDITIONAL_TC
    n_models: int = 2
    seeds: tuple[int, ...] = tuple(range(10))
    train: TrainParams | None = None
    generator: GeneratorParams = field(default_factory=GeneratorParams)
    nets: NetParams = field(default_factory=NetParams)
    mnist_dir: Path | None = None
    output_dir: Path = Path("results")
    workers: int = 1
    overwrite: bool = False

    def __post_init__(self):
        self.variant = Variant(self.variant)
        self.method = Method(self.method)
        self.seeds = tuple(self.seeds)
        self.output_dir = Path(self.output_dir)

        if self.mnist_dir is not None:
            self.mnist_dir = Path(self.mnist_dir)

        if self.train is None:
            self.train = _train_params(self.variant, {})

        if self.method is Method.ERM:
            self.n_models = 1

        if self.n_models < 1:
            raise ValueError("Expected n_models >= 1.")

        if not self.seeds:
            raise ValueError("Expected at least one seed.")

        if len(set(self.seeds)) != len(self.seeds):
            raise ValueError("Repeated seeds not understood.")

        if self.workers < 1:
            raise ValueError("Expected workers >= 1.")

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> ExperimentParams:
        """
        Creates the experiment parameters from a dictionary with the layout of
        a configuration file. For TC-MNIST, the number of epochs and critic
        steps default to 500 and 5 when not given.
        """
        variant = Variant(data.get("variant", Variant.CMNIST.value))

        kwargs = {
            key: data[key]
            for key in (
                "method",
                "n_models",
                "seeds",
                "mnist_dir",
                "output_dir",
                "workers",
                "overwrite",
            )
            if key in data
        }

        return cls(
            variant=variant,
            train=_train_params(variant, data.get("train", {})),
            generator=GeneratorParams(**data.get("generator", {})),
            nets=NetParams(**data.get("nets", {})),
            **kwargs,
        )

    @classmethod
    def from_file(cls, loc: str | Path) -> ExperimentParams:
        """
        Loads the experiment parameters from a TOML file.
        """
        with open(loc, "rb") as fh:
            data = tomllib.load(fh)

        return cls.from_dict(data)

    def train_params(self, seed: int) -> TrainParams:
        """
        Training parameters of the run with the given seed.
        """
        beta = 0.0 if self.method is Method.ERM else self.train.beta
        return replace(
            self.train,
            num_models=self.n_models,
            beta=beta,
            conditional=self.method is Method.CONDITIONAL_TC,
            seed=seed,
        )

    def generator_params(self, seed: int) -> GeneratorParams:
        """
        Generator parameters of the datasets of the given seed.
        """
        return replace(self.generator, shift=Shift.NONE, seed=seed)

    def config_hash(self) -> str:
        """
        Hash of everything that determines the results table: the output
        location, worker count and overwrite flag are left out.
        """
        return config_hash(
            self.variant,
            self.method,
            self.n_models,
            list(self.seeds),
            self.train,
            self.generator,
            self.nets,
        )

    def run_hash(self, seed: int) -> str:
        """
        Hash of everything that determines the checkpoint of a single seed.
        """
        return config_hash(
            self.variant,
            self.method,
            self.train_params(seed),
            self.generator_params(seed),
            self.nets,
        )

    def resolve_mnist_dir(self) -> Path:
        """
        Returns the MNIST directory, falling back to the environment.

        Raises
        ------
        FileNotFoundError
            When neither names a directory.
        """
        if self.mnist_dir is not None:
            return self.mnist_dir

        if env := os.environ.get(MNIST_DIR_ENV):
            return Path(env)

        msg = f"No MNIST directory: set mnist_dir or {MNIST_DIR_ENV}."
        raise FileNotFoundError(msg)

    def seed_dir(self, seed: int) -> Path:
        return self.output_dir / f"seed_{seed}"

    @property
    def cache_dir(self) -> Path:
        return self.output_dir / "cache"


def _load_raw(params: ExperimentParams) -> tuple[RawDigits, RawDigits]:
    directory = params.resolve_mnist_dir()
    return read_mnist(directory, "train"), read_mnist(directory, "test")


def generate_datasets(params: ExperimentParams, seed: int) -> DatasetBundle:
    """
    Returns the datasets of the given seed, from the cache when possible.
    """
    return load_or_generate(
        params.cache_dir,
        params.variant,
        params.generator_params(seed),
        partial(_load_raw, params),
    )


def train_seed(
    params: ExperimentParams,
    seed: int,
    bundle: DatasetBundle | None = None,
    display: bool = False,
) -> Checkpoint:
    """
    Trains the collection of the given seed, and writes its selected
    checkpoint and per-epoch metrics. An existing checkpoint of the same
    configuration is reused unless ``params.overwrite`` is set.

    Checkpoints are selected on the validation split of the digit-only test
    condition, which every benchmark has.
    """
    where = params.seed_dir(seed) / "checkpoint.bin"
    run_hash = params.run_hash(seed)

    if where.exists() and not params.overwrite:
        ckpt = load_checkpoint(where)

        if ckpt.config_hash == run_hash:
            return ckpt

        msg = f"Retraining {where}: it was trained with another configuration."
        warnings.warn(msg, CacheMismatchWarning, stacklevel=2)

    if bundle is None:
        bundle = generate_datasets(params, seed)

    splits = bundle.shifted[Shift.DIGIT_ONLY]
    trainer = (
        train_erm_baseline
        if params.method is Method.ERM
        else train_collection
    )

    result = trainer(
        bundle.train,
        splits.adapt_val,
        params.train_params(seed),
        params.nets,
        adapt_train=splits.adapt_train,
        display=display,
        config_hash=run_hash,
    )

    save_checkpoint(where, result.best)
    result.stats.to_csv(params.seed_dir(seed) / "metrics.csv")

    return result.best


def evaluate_seed(
    params: ExperimentParams,
    seed: int,
    bundle: DatasetBundle | None = None,
    checkpoint: Checkpoint | None = None,
) -> list[EvalReport]:
    """
    Evaluates the checkpoint of the given seed with every protocol on every
    test condition of the benchmark, and writes the reports.

    Raises
    ------
    FileNotFoundError
        When no checkpoint is given and none was written for this seed.
    """
    if checkpoint is None:
        checkpoint = load_checkpoint(params.seed_dir(seed) / "checkpoint.bin")

    if bundle is None:
        bundle = generate_datasets(params, seed)

    reports = [
        EvalReport(
            variant=params.variant,
            method=params.method.value,
            num_models=checkpoint.num_models,
            condition=condition,
            seeds=[seed],
            results=[evaluate_checkpoint(checkpoint, splits)],
        )
        for condition, splits in bundle.shifted.items()
    ]

    write_reports(params.seed_dir(seed) / "eval.json", reports)
    return reports


@dataclass
class SeedOutcome:
    """
    Outcome of the full pipeline for a single seed. Failed seeds have no
    reports, and an error message.
    """

    seed: int
    dataset_key: str
    runtime: float
    reports: list[EvalReport] = field(default_factory=list)
    error: str | None = None

    @property
    def succeeded(self) -> bool:
        return self.error is None


def run_seed(
    params: ExperimentParams, seed: int, display: bool = False
) -> SeedOutcome:
    """
    Runs dataset generation, training, and evaluation for a single seed.
    Exceptions are caught and recorded in the outcome.
    """
    start = time.perf_counter()
    key = bundle_key(params.variant, params.generator_params(seed))

    try:
        bundle = generate_datasets(params, seed)
        ckpt = train_seed(params, seed, bundle, display)
        reports = evaluate_seed(params, seed, bundle, ckpt)
    except Exception as exc:
        runtime = time.perf_counter() - start
        error = f"{type(exc).__name__}: {exc}"
        return SeedOutcome(seed, key, runtime, error=error)

    return SeedOutcome(seed, key, time.perf_counter() - start, reports)


@dataclass
class ResultRow:
    method: str
    n_models: int
    protocol: str
    condition: str
    mean: float
    sd: float
    n_seeds: int


_RESULT_FIELDS = [
    "method",
    "n_models",
    "protocol",
    "condition",
    "mean",
    "sd",
    "n_seeds",
]


@dataclass
class ResultsTable:
    """
    Mean and population standard deviation of the test accuracy, per method,
    protocol, and test condition.
    """

    rows: list[ResultRow] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.rows)

    def to_csv(self, where: Path | str):
        """
        Writes the table to the given location, as a CSV file.
        """
        with open(where, "w", newline="") as fh:
            writer = csv.DictWriter(fh, _RESULT_FIELDS)
            writer.writeheader()
            writer.writerows(vars(row) for row in self.rows)

    @classmethod
    def from_csv(cls, where: Path | str) -> ResultsTable:
        with open(where, newline="") as fh:
            rows = [
                ResultRow(
                    method=row["method"],
                    n_models=int(row["n_models"]),
                    protocol=row["protocol"],
                    condition=row["condition"],
                    mean=float(row["mean"]),
                    sd=float(row["sd"]),
                    n_seeds=int(row["n_seeds"]),
                )
                for row in csv.DictReader(fh)
            ]

        return cls(rows)


def aggregate_runs(reports: Sequence[EvalReport]) -> ResultsTable:
    """
    Aggregates per-seed reports into a results table, with one row per
    method, number of models, protocol, and test condition.

    Raises
    ------
    ValueError
        When there are no reports, or reports of the same key repeat a seed.
    """
    if not reports:
        raise ValueError("Expected at least one report.")

    groups = defaultdict(list)
    for report in reports:
        groups[report.key].append(report)

    rows = []
    for key in sorted(groups):
        merged = EvalReport.merge(groups[key])

        for protocol in PROTOCOLS:
            rows.append(
                ResultRow(
                    method=merged.method,
                    n_models=merged.num_models,
                    protocol=protocol,
                    condition=merged.condition.value,
                    mean=merged.mean(protocol),
                    sd=merged.std(protocol),
                    n_seeds=len(merged.seeds),
                )
            )

    return ResultsTable(rows)


def versions() -> dict[str, str]:
    """
    Versions of the package, its dependencies, and Python.
    """
    return {
        "tcdiverse": version("tcdiverse"),
        "numpy": version("numpy"),
        "tqdm": version("tqdm"),
        "python": ".".join(map(str, sys.version_info[:3])),
    }


def emit_reports(
    table: ResultsTable,
    output_dir: Path | str,
    manifest: dict[str, Any] | None = None,
    failures: Sequence[SeedOutcome] | None = None,
    overwrite: bool = False,
) -> list[Path]:
    """
    Writes the results table, and optionally the run manifest and the failed
    seeds, to the output directory. Files that are not given are left alone.

    Returns
    -------
    list[Path]
        The written files.

    Raises
    ------
    FileExistsError
        When a results table already exists and ``overwrite`` is not set.
    """
    output_dir = Path(output_dir)
    results = output_dir / "results.csv"

    if results.exists() and not overwrite:
        raise FileExistsError(f"{results} exists; pass overwrite to replace.")

    output_dir.mkdir(parents=True, exist_ok=True)
    table.to_csv(results)
    written = [results]

    if manifest is not None:
        where = output_dir / "manifest.json"
        with open(where, "w") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")

        written.append(where)

    if failures is not None:
        where = output_dir / "failures.csv"
        with open(where, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["seed", "error"])
            writer.writerows((out.seed, out.error) for out in failures)

        written.append(where)

    return written


@dataclass
class ExperimentOutcome:
    table: ResultsTable
    outcomes: list[SeedOutcome]

    @property
    def failures(self) -> list[SeedOutcome]:
        return [out for out in self.outcomes if not out.succeeded]

    @property
    def reports(self) -> list[EvalReport]:
        return [report for out in self.outcomes for report in out.reports]


def manifest(
    params: ExperimentParams, outcomes: Sequence[SeedOutcome]
) -> dict[str, Any]:
    """
    Everything needed to reproduce a results table: the full configuration,
    its hash, the dataset cache key and duration of every seed, and the
    versions of all packages involved.
    """
    return {
        "config": json.loads(dumps(params)),
        "config_hash": params.config_hash(),
        "seeds": [out.seed for out in outcomes],
        "dataset_keys": {str(out.seed): out.dataset_key for out in outcomes},
        "durations": {str(out.seed): out.runtime for out in outcomes},
        "failed_seeds": [out.seed for out in outcomes if not out.succeeded],
        "versions": versions(),
    }


def _check_inputs(params: ExperimentParams):
    results = params.output_dir / "results.csv"
    if results.exists() and not params.overwrite:
        raise FileExistsError(f"{results} exists; pass overwrite to replace.")

    for seed in params.seeds:
        key = bundle_key(params.variant, params.generator_params(seed))

        if not (params.cache_dir / f"{key}.bin").exists():
            mnist_files(params.resolve_mnist_dir())
            return


def run_experiment(
    params: ExperimentParams, display: bool = False
) -> ExperimentOutcome:
    """
    Runs every seed of the experiment as an independent job, aggregates the
    reports of the seeds that succeeded, and writes the results table, the
    failed seeds, and the run manifest.

    Parameters
    ----------
    params
        Experiment parameters.
    display
        Whether to display training progress. Only used when the seeds run
        sequentially.

    Returns
    -------
    ExperimentOutcome
        The results table and the outcome of every seed.

    Raises
    ------
    FileNotFoundError
        When an MNIST file is needed but missing. The message names the path.
    FileExistsError
        When results exist already and overwriting is not allowed.
    """
    _check_inputs(params)

    seeds = list(params.seeds)
    if len(seeds) == 1 or params.workers == 1:
        outcomes = [run_seed(params, seed, display) for seed in seeds]
    else:
        func = partial(run_seed, params)
        outcomes = process_map(
            func, seeds, max_workers=params.workers, unit="seed"
        )

    res = ExperimentOutcome(ResultsTable(), list(outcomes))
    if res.reports:
        res.table = aggregate_runs(res.reports)

    emit_reports(
        res.table,
        params.output_dir,
        manifest(params, res.outcomes),
        res.failures,
        overwrite=params.overwrite,
    )

    return res


def collect_reports(params: ExperimentParams) -> list[EvalReport]:
    """
    Reads the evaluation reports of all seeds that have one.
    """
    reports = []
    for seed in params.seeds:
        where = params.seed_dir(seed) / "eval.json"

        if where.exists():
            reports.extend(read_reports(where))

    return reports
