from __future__ import annotations

import hashlib
from collections.abc import Iterator, Mapping, Sequence

import numpy as np

from tcdiverse.diffengine import Node, Tape


class Parameters(Mapping[str, np.ndarray]):
    """
    Ordered collection of named, read-only float64 parameter arrays. Updates
    never happen in place: optimisers return new ``Parameters`` objects.

    Parameters
    ----------
    arrays
        Named arrays. These are copied.
    """

    def __init__(self, arrays: Mapping[str, np.ndarray]):
        self._arrays: dict[str, np.ndarray] = {}

        for name, value in arrays.items():
            arr = np.array(value, dtype=np.float64)
            arr.flags.writeable = False
            self._arrays[name] = arr

    def __getitem__(self, name: str) -> np.ndarray:
        return self._arrays[name]

    def __iter__(self) -> Iterator[str]:
        return iter(self._arrays)

    def __len__(self) -> int:
        return len(self._arrays)

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, Parameters)
            and list(self) == list(other)
            and all(np.array_equal(self[k], other[k]) for k in self)
        )

    def __repr__(self) -> str:
        shapes = ", ".join(f"{k}={v.shape}" for k, v in self.items())
        return f"Parameters({shapes})"

    def num_values(self) -> int:
        """
        Returns the total number of scalar parameters.
        """
        return sum(arr.size for arr in self.values())

    def attach(self, tape: Tape, trainable: bool = True) -> dict[str, Node]:
        """
        Records every array on the given tape, as a trainable leaf or as a
        constant.
        """
        record = tape.leaf if trainable else tape.constant
        return {name: record(arr) for name, arr in self.items()}

    def digest(self) -> str:
        """
        SHA-256 digest of the names, shapes, and values of all arrays. Equal
        parameters have equal digests.
        """
        sha = hashlib.sha256()

        for name, arr in self.items():
            sha.update(name.encode())
            sha.update(str(arr.shape).encode())
            sha.update(np.ascontiguousarray(arr).tobytes())

        return sha.hexdigest()

    def prefixed(self, prefix: str) -> dict[str, np.ndarray]:
        return {prefix + name: arr for name, arr in self.items()}

    @classmethod
    def unprefixed(
        cls, arrays: Mapping[str, np.ndarray], prefix: str
    ) -> Parameters:
        """
        Inverse of :meth:`prefixed`: selects the arrays whose names start with
        ``prefix``, and strips it.
        """
        return cls(
            {
                name[len(prefix) :]: arr
                for name, arr in arrays.items()
                if name.startswith(prefix)
            }
        )


def mlp_parameters(
    sizes: Sequence[int], rng: np.random.Generator
) -> Parameters:
    """
    Initialises the dense layers of a multilayer perceptron with the given
    layer sizes. Weights are drawn from a normal distribution with variance
    ``2 / fan_in``; biases are zero. Layer ``i`` has a weight named
    ``"{i}.weight"`` of shape ``(sizes[i], sizes[i + 1])`` and a bias named
    ``"{i}.bias"``.
    """
    if len(sizes) < 2 or min(sizes) < 1:
        raise ValueError("Expected at least two positive layer sizes.")

    arrays = {}
    for idx, (fan_in, fan_out) in enumerate(zip(sizes, sizes[1:])):
        scale = np.sqrt(2 / fan_in)
        arrays[f"{idx}.weight"] = rng.normal(0, scale, (fan_in, fan_out))
        arrays[f"{idx}.bias"] = np.zeros(fan_out)

    return Parameters(arrays)


def num_layers(params: Parameters) -> int:
    """
    Returns the number of dense layers in parameters created by
    :func:`mlp_parameters`.
    """
    return sum(name.endswith(".weight") for name in params)
