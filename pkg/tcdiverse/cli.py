import argparse
import sys
import tomllib
from collections.abc import Callable, Sequence
from functools import partial
from pathlib import Path
from typing import Any

from tqdm.contrib.concurrent import process_map

from tcdiverse.data.ColoredDataset import Variant
from tcdiverse.data.generate import dataset_stats
from tcdiverse.experiment import (
    ExperimentParams,
    Method,
    ResultsTable,
    aggregate_runs,
    collect_reports,
    emit_reports,
    evaluate_seed,
    generate_datasets,
    run_experiment,
    train_seed,
)
from tcdiverse.show_versions import show_versions


def tabulate(headers: list[str], rows: Sequence[Sequence[Any]]) -> str:
    """
    Creates a simple table from the given header and row data.
    """
    # These lengths are used to space each column properly.
    lens = [len(header) for header in headers]

    for row in rows:
        for idx, cell in enumerate(row):
            lens[idx] = max(lens[idx], len(str(cell)))

    header = [
        "  ".join(f"{hdr:<{ln}s}" for ln, hdr in zip(lens, headers)),
        "  ".join("-" * ln for ln in lens),
    ]

    content = [
        "  ".join(f"{c!s:>{ln}s}" for ln, c in zip(lens, r)) for r in rows
    ]

    return "\n".join(header + content)


def print_table(table: ResultsTable):
    headers = ["Method", "n", "Protocol", "Condition", "Mean", "SD", "Seeds"]
    rows = [
        (
            row.method,
            row.n_models,
            row.protocol,
            row.condition,
            f"{100 * row.mean:.1f}",
            f"{100 * row.sd:.1f}",
            row.n_seeds,
        )
        for row in table.rows
    ]

    print("\n", tabulate(headers, rows), "\n", sep="")


def make_params(args: argparse.Namespace) -> ExperimentParams:
    """
    Creates the experiment parameters from the configuration file, if any,
    with the command line arguments taking precedence.
    """
    data: dict[str, Any] = {}

    if args.config is not None:
        with open(args.config, "rb") as fh:
            data = tomllib.load(fh)

    overrides = {
        "variant": args.variant,
        "method": args.method,
        "n_models": args.n_models,
        "output_dir": args.out,
        "workers": args.workers,
    }

    data.update(
        {key: val for key, val in overrides.items() if val is not None}
    )

    if args.seed is not None:
        data["seeds"] = [args.seed]

    if args.epochs is not None:
        data["train"] = {**data.get("train", {}), "epochs": args.epochs}

    if args.overwrite:
        data["overwrite"] = True

    return ExperimentParams.from_dict(data)


def _for_seeds(func: Callable, params: ExperimentParams) -> list:
    seeds = list(params.seeds)

    if len(seeds) == 1 or params.workers == 1:
        return [func(params, seed) for seed in seeds]

    return process_map(
        partial(func, params), seeds, max_workers=params.workers, unit="seed"
    )


def _generate(params: ExperimentParams, seed: int) -> tuple:
    bundle = generate_datasets(params, seed)
    stats = dataset_stats(bundle.train)
    colour2 = stats.colour2_agreement

    return (
        seed,
        stats.size,
        f"{stats.digit_agreement:.3f}",
        f"{stats.colour_agreement:.3f}",
        "-" if colour2 is None else f"{colour2:.3f}",
    )


def generate(params: ExperimentParams) -> int:
    rows = _for_seeds(_generate, params)
    headers = ["Seed", "Size", "Digit agr.", "Colour agr.", "Colour2 agr."]
    print("\n", tabulate(headers, rows), "\n", sep="")
    return 0


def _train(params: ExperimentParams, seed: int, display: bool = False):
    ckpt = train_seed(params, seed, display=display)
    return seed, ckpt.epoch, f"{ckpt.val_accuracy:.4f}"


def train(params: ExperimentParams) -> int:
    display = len(params.seeds) == 1
    rows = _for_seeds(partial(_train, display=display), params)
    headers = ["Seed", "Best epoch", "Val. acc."]
    print("\n", tabulate(headers, rows), "\n", sep="")
    return 0


def evaluate(params: ExperimentParams) -> int:
    reports = [
        report
        for reports in _for_seeds(evaluate_seed, params)
        for report in reports
    ]

    print_table(aggregate_runs(reports))
    return 0


def run(params: ExperimentParams) -> int:
    res = run_experiment(params, display=len(params.seeds) == 1)
    print_table(res.table)

    for out in res.failures:
        print(f"Seed {out.seed} failed: {out.error}", file=sys.stderr)

    return 1 if res.failures else 0


def report(params: ExperimentParams) -> int:
    reports = collect_reports(params)

    if not reports:
        print(f"No reports found in {params.output_dir}.", file=sys.stderr)
        return 1

    table = aggregate_runs(reports)
    emit_reports(table, params.output_dir, overwrite=params.overwrite)
    print_table(table)

    return 0


VERBS = {
    "generate": generate,
    "train": train,
    "evaluate": evaluate,
    "run": run,
    "report": report,
}


def main(argv: Sequence[str] | None = None) -> int:
    description = """
    This program is a command line interface for training collections of
    diverse classifiers on the coloured digit benchmarks, and evaluating them
    on shifted test distributions. Every verb works on one or more seeds.
    """
    parser = argparse.ArgumentParser(prog="tcdiverse", description=description)

    msg = "Pipeline stage to run, or 'show-versions'."
    choices = [*VERBS, "show-versions"]
    parser.add_argument("verb", choices=choices, help=msg)

    msg = """
    Optional experiment configuration file (in TOML format). Command line
    arguments take precedence over the values in this file.
    """
    parser.add_argument("--config", type=Path, help=msg)

    msg = "Run a single seed instead of the configured seeds."
    parser.add_argument("--seed", type=int, help=msg)

    variants = [variant.value for variant in Variant]
    parser.add_argument("--variant", choices=variants, help="Benchmark.")

    methods = [method.value for method in Method]
    parser.add_argument("--method", choices=methods, help="Training method.")

    msg = "Number of models in each collection."
    parser.add_argument("--n-models", type=int, help=msg)

    parser.add_argument("--epochs", type=int, help="Number of epochs.")

    msg = "Directory to write all artifacts to."
    parser.add_argument("--out", type=Path, help=msg)

    msg = "Number of seeds to run in parallel."
    parser.add_argument("--workers", type=int, help=msg)

    msg = "Whether to replace existing checkpoints and reports."
    parser.add_argument("--overwrite", action="store_true", help=msg)

    args = parser.parse_args(argv)

    if args.verb == "show-versions":
        show_versions()
        return 0

    return VERBS[args.verb](make_params(args))


if __name__ == "__main__":
    sys.exit(main())
