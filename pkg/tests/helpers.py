import gzip
import struct
from pathlib import Path

import numpy as np

from tcdiverse.data import (
    ColoredDataset,
    GeneratorParams,
    RawDigits,
    Variant,
    make_train,
)
from tcdiverse.data.idx import IMAGE_MAGIC, LABEL_MAGIC
from tcdiverse.nets import NetParams

# Architecture small enough that a few epochs run in well under a second.
TINY_NET = NetParams(
    hidden_sizes=(8,),
    repr_dim=4,
    critic_hidden_sizes=(16,),
)


def idx_bytes(array: np.ndarray) -> bytes:
    """
    Returns the contents of an IDX file holding the given ``uint8`` images
    (three dimensions) or labels (one dimension).
    """
    magic = IMAGE_MAGIC if array.ndim == 3 else LABEL_MAGIC
    header = struct.pack(f">{1 + array.ndim}I", magic, *array.shape)
    return header + array.astype(np.uint8).tobytes()


def write_idx(where: Path, array: np.ndarray, compress: bool = False):
    """
    Writes an IDX file, gzip-compressed if ``compress`` is set.
    """
    opener = gzip.open if compress else open
    with opener(where, "wb") as fh:
        fh.write(idx_bytes(array))


def random_digits(
    num: int, side: int = 8, seed: int = 0
) -> tuple[np.ndarray, np.ndarray]:
    """
    Returns random ``uint8`` images of the given side, and random digit
    labels.
    """
    rng = np.random.default_rng(seed)
    images = rng.integers(0, 256, size=(num, side, side), dtype=np.uint8)
    labels = rng.integers(0, 10, size=num, dtype=np.uint8)
    return images, labels


def raw_digits(num: int, side: int = 8, seed: int = 0) -> RawDigits:
    """
    Random digits, as the IDX reader would return them.
    """
    images, labels = random_digits(num, side, seed)
    return RawDigits(images / 255.0, labels.astype(np.int64))


def write_mnist(
    directory: Path,
    num_train: int = 200,
    num_test: int = 100,
    side: int = 8,
    compress: bool = False,
):
    """
    Writes the four MNIST files, filled with random digits, to the given
    directory.
    """
    directory.mkdir(parents=True, exist_ok=True)
    suffix = ".gz" if compress else ""

    for prefix, num, seed in [("train", num_train, 1), ("t10k", num_test, 2)]:
        images, labels = random_digits(num, side, seed)
        images_loc = directory / f"{prefix}-images-idx3-ubyte{suffix}"
        labels_loc = directory / f"{prefix}-labels-idx1-ubyte{suffix}"
        write_idx(images_loc, images, compress)
        write_idx(labels_loc, labels, compress)


def make_dataset(
    num: int,
    variant: Variant = Variant.CMNIST,
    seed: int = 0,
    side: int = 8,
) -> ColoredDataset:
    """
    Generates a small training set of the given benchmark from random digits.
    """
    params = GeneratorParams(seed=seed, num_train=num)
    return make_train(raw_digits(num, side, seed), params, variant)
