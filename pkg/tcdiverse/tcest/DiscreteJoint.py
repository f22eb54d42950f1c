from __future__ import annotations

from collections.abc import Sequence

import numpy as np

_ATOL = 1e-12


class DiscreteJoint:
    """
    Joint probability table of a finite number of discrete variables. Axis
    ``k`` of the table indexes the values of variable ``k``.

    Parameters
    ----------
    table
        Nonnegative probabilities that sum to one (within 1e-12).

    Raises
    ------
    ValueError
        When the table has negative entries or is not normalised.
    """

    def __init__(self, table: np.ndarray):
        table = np.array(table, dtype=np.float64)

        if table.ndim == 0 or table.size == 0:
            raise ValueError("Expected a nonempty table of probabilities.")

        if np.any(table < 0) or not np.all(np.isfinite(table)):
            raise ValueError("Expected nonnegative, finite probabilities.")

        if abs(table.sum() - 1) > _ATOL:
            raise ValueError(f"Table sums to {table.sum()}, not 1.")

        table.flags.writeable = False
        self._table = table

    def __eq__(self, other: object) -> bool:
        return isinstance(other, DiscreteJoint) and np.array_equal(
            self._table, other._table
        )

    @property
    def table(self) -> np.ndarray:
        return self._table

    @property
    def num_variables(self) -> int:
        return self._table.ndim

    def marginal(self, var: int) -> np.ndarray:
        """
        Returns the marginal distribution of the given variable.
        """
        axes = tuple(ax for ax in range(self.num_variables) if ax != var)
        return self._table.sum(axis=axes)

    def product_of_marginals(self) -> np.ndarray:
        """
        Returns the table of the product of all marginal distributions.
        """
        marginals = [self.marginal(var) for var in range(self.num_variables)]
        return product_table(marginals)

    @classmethod
    def product(cls, marginals: Sequence[np.ndarray]) -> DiscreteJoint:
        """
        Joint distribution of independent variables with the given marginal
        distributions.
        """
        return cls(product_table(marginals))

    @classmethod
    def from_samples(
        cls, samples: np.ndarray, sizes: Sequence[int] | None = None
    ) -> DiscreteJoint:
        """
        Empirical joint distribution of integer samples.

        Parameters
        ----------
        samples
            Array of shape ``(N, num_variables)`` with nonnegative integers.
        sizes
            Number of values of each variable. By default one more than the
            largest observed value.
        """
        samples = np.asarray(samples)

        if samples.ndim != 2 or len(samples) == 0:
            raise ValueError("Expected a nonempty (N, num_variables) array.")

        if sizes is None:
            sizes = tuple(int(size) for size in samples.max(axis=0) + 1)

        counts = np.zeros(tuple(sizes))
        np.add.at(counts, tuple(samples.T), 1)
        return cls(counts / len(samples))


def product_table(marginals: Sequence[np.ndarray]) -> np.ndarray:
    table = np.ones(())
    for marginal in marginals:
        table = np.multiply.outer(table, marginal)

    return table


def conditional_joints_from_samples(
    samples: np.ndarray, labels: np.ndarray
) -> tuple[list[DiscreteJoint], np.ndarray]:
    """
    Empirical label-conditional joint distributions of integer samples.

    Parameters
    ----------
    samples
        Array of shape ``(N, num_variables)`` with nonnegative integers.
    labels
        Array of ``N`` labels in 0, ..., L - 1.

    Returns
    -------
    tuple[list[DiscreteJoint], np.ndarray]
        One joint distribution per observed label value (in increasing order),
        and the empirical distribution of those label values.
    """
    samples = np.asarray(samples)
    labels = np.asarray(labels)
    sizes = tuple(int(size) for size in samples.max(axis=0) + 1)

    values, counts = np.unique(labels, return_counts=True)
    joints = [
        DiscreteJoint.from_samples(samples[labels == value], sizes)
        for value in values
    ]

    return joints, counts / counts.sum()
