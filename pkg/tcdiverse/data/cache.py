import warnings
from collections.abc import Callable
from dataclasses import dataclass, replace
from pathlib import Path

from tcdiverse.data.ColoredDataset import ColoredDataset, Shift, Variant
from tcdiverse.data.generate import (
    AdaptSplits,
    GeneratorParams,
    make_shifted_testset,
    make_train,
    shifted_conditions,
)
from tcdiverse.data.idx import RawDigits
from tcdiverse.exceptions import CacheMismatchWarning
from tcdiverse.serialise import config_hash, read_arrays, write_arrays

RawLoader = Callable[[], tuple[RawDigits, RawDigits]]


@dataclass
class DatasetBundle:
    """
    All datasets of one experiment seed: the training set, and the
    adaptation splits of each applicable shifted test condition.
    """

    train: ColoredDataset
    shifted: dict[Shift, AdaptSplits]

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, DatasetBundle)
            and self.train == other.train
            and self.shifted == other.shifted
        )


def generate_bundle(
    raw_train: RawDigits,
    raw_test: RawDigits,
    variant: Variant,
    params: GeneratorParams,
) -> DatasetBundle:
    """
    Generates the training set from ``raw_train``, and one shifted test set
    from ``raw_test`` for each test condition of the given benchmark. The
    shift of ``params`` is ignored.
    """
    params = replace(params, shift=Shift.NONE)
    train = make_train(raw_train, params, variant)

    shifted = {
        shift: make_shifted_testset(
            raw_test, replace(params, shift=shift), variant
        )
        for shift in shifted_conditions(variant)
    }

    return DatasetBundle(train, shifted)


def bundle_key(variant: Variant, params: GeneratorParams) -> str:
    """
    Cache key of a bundle: the benchmark, the seed, and the configuration
    hash of the generator parameters.
    """
    digest = config_hash(variant, replace(params, shift=Shift.NONE))
    return f"{variant.value}-seed{params.seed}-{digest}"


def _parts(bundle: DatasetBundle) -> dict[str, ColoredDataset]:
    parts = {"train": bundle.train}

    for shift, splits in bundle.shifted.items():
        parts[f"{shift.value}/adapt_train"] = splits.adapt_train
        parts[f"{shift.value}/adapt_val"] = splits.adapt_val
        parts[f"{shift.value}/adapt_test"] = splits.adapt_test

    return parts


def save_bundle(where: Path | str, key: str, bundle: DatasetBundle):
    """
    Writes the bundle to the given location, under the given cache key.
    """
    headers = {}
    arrays = {}

    for name, data in _parts(bundle).items():
        header, named = data.to_arrays(prefix=name + "/")
        headers[name] = header
        arrays.update(named)

    write_arrays(where, {"key": key, "parts": headers}, arrays)


def load_bundle(where: Path | str, key: str) -> DatasetBundle:
    """
    Reads a bundle written by :func:`save_bundle`.

    Raises
    ------
    ValueError
        When the file was written under another cache key, or has another
        format.
    """
    header, arrays = read_arrays(where)

    if header.get("key") != key:
        raise ValueError(f"{where} holds {header.get('key')}, not {key}.")

    parts = {
        name: ColoredDataset.from_arrays(part, arrays, prefix=name + "/")
        for name, part in header["parts"].items()
    }

    shifted = {}
    for shift in shifted_conditions(parts["train"].variant):
        prefix = shift.value + "/"
        shifted[shift] = AdaptSplits(
            parts[prefix + "adapt_train"],
            parts[prefix + "adapt_val"],
            parts[prefix + "adapt_test"],
        )

    return DatasetBundle(parts["train"], shifted)


def load_or_generate(
    cache_dir: Path | str | None,
    variant: Variant,
    params: GeneratorParams,
    load_raw: RawLoader,
) -> DatasetBundle:
    """
    Returns the dataset bundle of the given benchmark and parameters, reading
    it from the cache directory when possible. Otherwise the bundle is
    generated from the digits returned by ``load_raw`` (a pair of training
    and test digits), and stored in the cache directory.

    Parameters
    ----------
    cache_dir
        Directory of cached bundles. No caching happens when ``None``.
    variant
        Benchmark to generate.
    params
        Generator parameters.
    load_raw
        Called only when the bundle must be generated.

    Returns
    -------
    DatasetBundle
        The bundle.
    """
    key = bundle_key(variant, params)

    if cache_dir is None:
        return generate_bundle(*load_raw(), variant, params)

    where = Path(cache_dir) / f"{key}.bin"

    if where.exists():
        try:
            return load_bundle(where, key)
        except (ValueError, KeyError) as exc:
            msg = f"Regenerating cached datasets in {where}: {exc}"
            warnings.warn(msg, CacheMismatchWarning, stacklevel=2)

    bundle = generate_bundle(*load_raw(), variant, params)
    save_bundle(where, key, bundle)

    return bundle
