import gzip
from dataclasses import dataclass
from pathlib import Path
from typing import Literal

import numpy as np

from tcdiverse.exceptions import IdxFormatError

IMAGE_MAGIC = 0x00000803
LABEL_MAGIC = 0x00000801

_NDIMS = {IMAGE_MAGIC: 3, LABEL_MAGIC: 1}
_SPLIT_PREFIX = {"train": "train", "test": "t10k"}


@dataclass
class RawDigits:
    """
    Greyscale digit images and their digit labels.

    Parameters
    ----------
    images
        Array of shape ``(N, rows, cols)`` with entries in [0, 1].
    digit_labels
        Array of ``N`` integers in 0, ..., 9.

    Raises
    ------
    ValueError
        When the image and label counts differ, or the values are out of
        range.
    """

    images: np.ndarray
    digit_labels: np.ndarray

    def __post_init__(self):
        if self.images.ndim != 3:
            raise ValueError("Expected images of shape (N, rows, cols).")

        if len(self.images) != len(self.digit_labels):
            msg = "Number of images and digit labels do not match."
            raise ValueError(msg)

        images = self.images
        if images.size and (images.min() < 0 or images.max() > 1):
            raise ValueError("Expected pixel values in [0, 1].")

        labels = self.digit_labels
        if labels.size and (labels.min() < 0 or labels.max() > 9):
            raise ValueError("Expected digit labels in 0, ..., 9.")

    def __len__(self) -> int:
        return len(self.digit_labels)

    def subset(self, indices: np.ndarray) -> "RawDigits":
        """
        Returns the digits at the given indices, in order.
        """
        return RawDigits(self.images[indices], self.digit_labels[indices])


def parse_idx(buffer: bytes) -> np.ndarray:
    """
    Parses the contents of an IDX file holding either digit images or digit
    labels.

    Parameters
    ----------
    buffer
        Raw (uncompressed) file contents. The header is big-endian: a 32-bit
        magic number, followed by one 32-bit size per dimension.

    Returns
    -------
    np.ndarray
        For image files (magic ``0x00000803``), a float array of shape
        ``(N, rows, cols)`` with pixel values scaled to [0, 1]. For label files
        (magic ``0x00000801``), an integer array of ``N`` labels.

    Raises
    ------
    IdxFormatError
        When the magic number is unexpected, or the header or payload is
        truncated, or there are trailing bytes after the payload.
    """
    if len(buffer) < 4:
        raise IdxFormatError("Truncated header", len(buffer))

    magic = int(np.frombuffer(buffer, dtype=">u4", count=1)[0])
    if magic not in _NDIMS:
        raise IdxFormatError(f"Unexpected magic 0x{magic:08x}", 0)

    ndim = _NDIMS[magic]
    header_size = 4 + 4 * ndim

    if len(buffer) < header_size:
        raise IdxFormatError("Truncated header", len(buffer))

    dims = np.frombuffer(buffer, dtype=">u4", count=ndim, offset=4)
    shape = tuple(int(dim) for dim in dims)

    if magic == IMAGE_MAGIC and (shape[1] == 0 or shape[2] == 0):
        raise IdxFormatError(f"Image dimensions {shape} not understood", 8)

    payload_size = int(np.prod(shape))
    end = header_size + payload_size

    if len(buffer) < end:
        msg = f"Truncated payload: expected {payload_size} bytes"
        raise IdxFormatError(msg, len(buffer))

    if len(buffer) > end:
        raise IdxFormatError("Trailing bytes after payload", end)

    payload = np.frombuffer(
        buffer, dtype=np.uint8, count=payload_size, offset=header_size
    )

    if magic == IMAGE_MAGIC:
        return payload.reshape(shape) / 255.0

    return payload.astype(np.int64)


def read_idx(where: Path | str) -> np.ndarray:
    """
    Reads an IDX file from the given location. Files whose name ends with
    ``.gz`` are decompressed first. See :func:`parse_idx` for details.
    """
    where = Path(where)
    opener = gzip.open if where.suffix == ".gz" else open

    with opener(where, "rb") as fh:
        return parse_idx(fh.read())


def _locate(directory: Path, name: str) -> Path:
    for candidate in (directory / name, directory / (name + ".gz")):
        if candidate.exists():
            return candidate

    raise FileNotFoundError(f"MNIST file not found: {directory / name}")


def mnist_files(directory: Path | str) -> list[Path]:
    """
    Returns the locations of the four MNIST files in the given directory.

    Raises
    ------
    FileNotFoundError
        When a file is missing. The message names the path.
    """
    directory = Path(directory)
    return [
        _locate(directory, f"{prefix}-{kind}-ubyte")
        for prefix in _SPLIT_PREFIX.values()
        for kind in ("images-idx3", "labels-idx1")
    ]


def read_mnist(
    directory: Path | str, split: Literal["train", "test"]
) -> RawDigits:
    """
    Reads one of the two standard MNIST splits from the given directory. The
    directory must contain the usual ``train-images-idx3-ubyte``,
    ``train-labels-idx1-ubyte``, ``t10k-images-idx3-ubyte`` and
    ``t10k-labels-idx1-ubyte`` files, optionally gzip-compressed.

    Raises
    ------
    FileNotFoundError
        When a required file is missing. The message names the path.
    IdxFormatError
        When a file is not a valid IDX file.
    """
    if split not in _SPLIT_PREFIX:
        raise ValueError(f"Split '{split}' not understood.")

    directory = Path(directory)
    prefix = _SPLIT_PREFIX[split]

    images = read_idx(_locate(directory, f"{prefix}-images-idx3-ubyte"))
    labels = read_idx(_locate(directory, f"{prefix}-labels-idx1-ubyte"))

    if images.ndim != 3 or labels.ndim != 1:
        raise ValueError(f"MNIST {split} files have unexpected contents.")

    return RawDigits(images, labels)
