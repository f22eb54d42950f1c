"""
Versioned binary container used for dataset caches and checkpoints. A file
holds a magic string, a format version, a JSON header, and a sequence of
arrays in NumPy's ``.npy`` format. Writing the same content twice gives
byte-identical files.
"""

import hashlib
import json
import struct
from collections.abc import Mapping
from dataclasses import asdict, is_dataclass
from enum import Enum
from pathlib import Path
from typing import Any

import numpy as np

MAGIC = b"TCDIVERSE"
FORMAT_VERSION = 1

_UINT32 = struct.Struct("<I")


def _to_json(obj: Any) -> Any:
    if isinstance(obj, Enum):
        return obj.value

    if isinstance(obj, Path):
        return str(obj)

    if is_dataclass(obj) and not isinstance(obj, type):
        return asdict(obj)

    if isinstance(obj, np.generic):
        return obj.item()

    raise TypeError(f"Cannot serialise object of type {type(obj).__name__}.")


def dumps(obj: Any) -> str:
    """
    Deterministic JSON rendering: sorted keys, dataclasses as dictionaries and
    enums by value.
    """
    return json.dumps(obj, default=_to_json, sort_keys=True)


def config_hash(*params: Any) -> str:
    """
    Returns the first 16 hexadecimal characters of the SHA-256 digest of the
    given parameter objects, rendered as sorted JSON.
    """
    payload = dumps(list(params))
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


def write_arrays(
    where: Path | str,
    header: Mapping[str, Any],
    arrays: Mapping[str, np.ndarray],
):
    """
    Writes the header and named arrays to the given location.

    Parameters
    ----------
    where
        Filesystem location to write to. Parent directories are created.
    header
        JSON-serialisable metadata.
    arrays
        Arrays to store, in order.
    """
    meta = dumps({"header": dict(header), "arrays": list(arrays)}).encode()

    where = Path(where)
    where.parent.mkdir(parents=True, exist_ok=True)

    with open(where, "wb") as fh:
        fh.write(MAGIC)
        fh.write(_UINT32.pack(FORMAT_VERSION))
        fh.write(_UINT32.pack(len(meta)))
        fh.write(meta)

        for arr in arrays.values():
            np.lib.format.write_array(
                fh, np.ascontiguousarray(arr), allow_pickle=False
            )


def _read_uint32(fh, where) -> int:
    data = fh.read(_UINT32.size)
    if len(data) != _UINT32.size:
        raise ValueError(f"{where} is truncated.")

    return _UINT32.unpack(data)[0]


def read_arrays(where: Path | str) -> tuple[dict, dict[str, np.ndarray]]:
    """
    Reads a file written by :func:`write_arrays`.

    Returns
    -------
    tuple[dict, dict[str, np.ndarray]]
        The header, and the named arrays.

    Raises
    ------
    FileNotFoundError
        When there is no file at the given location.
    ValueError
        When the file is not a container of the current format version.
    """
    with open(where, "rb") as fh:
        if fh.read(len(MAGIC)) != MAGIC:
            raise ValueError(f"{where} is not a tcdiverse container.")

        if (found := _read_uint32(fh, where)) != FORMAT_VERSION:
            msg = f"Format version {found} not understood; expected "
            raise ValueError(f"{msg}{FORMAT_VERSION}.")

        size = _read_uint32(fh, where)
        meta = json.loads(fh.read(size))

        arrays = {
            name: np.lib.format.read_array(fh, allow_pickle=False)
            for name in meta["arrays"]
        }

    return meta["header"], arrays
