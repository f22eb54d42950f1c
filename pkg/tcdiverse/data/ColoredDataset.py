from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np


class Variant(Enum):
    """
    The three coloured digit benchmarks.
    """

    CMNIST = "CMNIST"
    RCMNIST = "RCMNIST"
    TCMNIST = "TCMNIST"

    @property
    def num_channels(self) -> int:
        return 3 if self is Variant.TCMNIST else 2


class Role(Enum):
    TRAIN = "train"
    ADAPT_TRAIN = "adapt_train"
    ADAPT_VAL = "adapt_val"
    ADAPT_TEST = "adapt_test"


class Shift(Enum):
    """
    Test condition of a generated set. ``NONE`` is the training distribution;
    the other conditions keep only one predictive signal.
    """

    NONE = "none"
    DIGIT_ONLY = "digit_only"
    COLOUR2_ONLY = "colour2_only"


# Provenance arrays that every dataset has, and those that only some have.
_REQUIRED = ("labels", "digit_group", "clean_label", "colour")
_OPTIONAL = ("colour2", "common_cause", "env")


@dataclass(frozen=True)
class ColoredExample:
    """
    A single example with its full provenance. ``colour2`` is ``None`` unless
    the example is from TC-MNIST; ``common_cause`` is ``None`` unless it is
    from RC-MNIST.
    """

    input: np.ndarray
    label: int
    digit_group: int
    clean_label: int
    colour: int
    colour2: int | None = None
    common_cause: int | None = None


@dataclass(eq=False)
class ColoredDataset:
    """
    Coloured digit examples, stored as one array per field.

    Parameters
    ----------
    inputs
        Float array of shape ``(N, C * side * side)``, holding the flattened
        ``(C, side, side)`` images.
    labels
        Corrupted binary labels, which serve as training targets.
    digit_group
        Whether the shown digit is in 5, ..., 9.
    clean_label
        The label before label noise was applied.
    colour
        Index of the channel that carries the digit.
    variant
        Benchmark the examples belong to.
    role
        Role of this set in an experiment.
    seed
        Seed the set was generated with.
    shift
        Test condition the set was generated under.
    colour2
        Second colour bit (TC-MNIST only).
    common_cause
        Whether the digit was rotated (RC-MNIST only).
    env
        Training environment index (training sets only).

    Raises
    ------
    ValueError
        When the field lengths differ, or the provenance is not binary.
    """

    inputs: np.ndarray
    labels: np.ndarray
    digit_group: np.ndarray
    clean_label: np.ndarray
    colour: np.ndarray
    variant: Variant
    role: Role
    seed: int
    shift: Shift = Shift.NONE
    colour2: np.ndarray | None = None
    common_cause: np.ndarray | None = None
    env: np.ndarray | None = None

    def __post_init__(self):
        if self.inputs.ndim != 2:
            raise ValueError("Expected inputs of shape (N, input_dim).")

        if self.inputs.shape[1] % self.variant.num_channels != 0:
            msg = f"Input width does not fit {self.variant.value} channels."
            raise ValueError(msg)

        num_examples = len(self.inputs)
        for name in _REQUIRED + _OPTIONAL:
            values = getattr(self, name)

            if values is None:
                continue

            if values.shape != (num_examples,):
                raise ValueError(f"Expected {num_examples} {name} values.")

            if name != "env" and np.any((values != 0) & (values != 1)):
                raise ValueError(f"Expected binary {name} values.")

        if (self.colour2 is None) == (self.variant is Variant.TCMNIST):
            msg = "Expected colour2 values exactly for TC-MNIST sets."
            raise ValueError(msg)

    def __len__(self) -> int:
        return len(self.labels)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ColoredDataset):
            return False

        if (self.variant, self.role, self.seed, self.shift) != (
            other.variant,
            other.role,
            other.seed,
            other.shift,
        ):
            return False

        for name in ("inputs",) + _REQUIRED + _OPTIONAL:
            mine, theirs = getattr(self, name), getattr(other, name)

            if (mine is None) != (theirs is None):
                return False

            if mine is not None and not np.array_equal(mine, theirs):
                return False

        return True

    @property
    def num_channels(self) -> int:
        return self.variant.num_channels

    @property
    def input_dim(self) -> int:
        return self.inputs.shape[1]

    @property
    def side(self) -> int:
        """
        Side length of the square image in each channel.
        """
        return int(round((self.input_dim // self.num_channels) ** 0.5))

    def images(self) -> np.ndarray:
        """
        Returns the inputs as an array of shape ``(N, C, side, side)``.
        """
        shape = (len(self), self.num_channels, self.side, self.side)
        return self.inputs.reshape(shape)

    def example(self, idx: int) -> ColoredExample:
        """
        Returns the example at the given index, with its provenance.
        """

        def bit(values: np.ndarray | None) -> int | None:
            return None if values is None else int(values[idx])

        return ColoredExample(
            input=self.inputs[idx],
            label=int(self.labels[idx]),
            digit_group=int(self.digit_group[idx]),
            clean_label=int(self.clean_label[idx]),
            colour=int(self.colour[idx]),
            colour2=bit(self.colour2),
            common_cause=bit(self.common_cause),
        )

    def subset(
        self, indices: np.ndarray | slice, role: Role
    ) -> ColoredDataset:
        """
        Returns a new dataset with the examples at the given indices, under
        the given role.
        """
        optional = {}
        for name in _OPTIONAL:
            values = getattr(self, name)
            optional[name] = None if values is None else values[indices]

        return ColoredDataset(
            inputs=self.inputs[indices],
            labels=self.labels[indices],
            digit_group=self.digit_group[indices],
            clean_label=self.clean_label[indices],
            colour=self.colour[indices],
            variant=self.variant,
            role=role,
            seed=self.seed,
            shift=self.shift,
            **optional,
        )

    def to_arrays(self, prefix: str = "") -> tuple[dict, dict]:
        """
        Returns a JSON-serialisable header and the named arrays of this set,
        with array names prefixed by ``prefix``.
        """
        header = {
            "variant": self.variant.value,
            "role": self.role.value,
            "seed": self.seed,
            "shift": self.shift.value,
        }

        arrays = {prefix + "inputs": self.inputs}
        for name in _REQUIRED + _OPTIONAL:
            if (values := getattr(self, name)) is not None:
                arrays[prefix + name] = values

        return header, arrays

    @classmethod
    def from_arrays(
        cls, header: dict, arrays: dict[str, np.ndarray], prefix: str = ""
    ) -> ColoredDataset:
        """
        Inverse of :meth:`to_arrays`.
        """
        names = ("inputs",) + _REQUIRED + _OPTIONAL
        values = {name: arrays.get(prefix + name) for name in names}

        return cls(
            variant=Variant(header["variant"]),
            role=Role(header["role"]),
            seed=int(header["seed"]),
            shift=Shift(header["shift"]),
            **values,  # type: ignore
        )
