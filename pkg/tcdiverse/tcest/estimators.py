"""
Contrastive variational estimators of mutual information and total
correlation. The graph-building forms record the estimate on a tape so it can
be differentiated; the ``*_estimate`` forms return plain floats. All values
are in nats.
"""

from __future__ import annotations

from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass

import numpy as np

from tcdiverse.diffengine import Node, Tape, ops
from tcdiverse.nets.Critic import Critic
from tcdiverse.nets.RmsProp import RmsProp, RmsPropParams

DEGENERATE_BATCH_MSG = "Batch has no label group of size >= 2."

RngLike = np.random.Generator | int


@dataclass
class PermutationPlan:
    """
    Row indices that build permuted tuples from a batch of ``batch_size``
    joint tuples. Entry ``(j, k)`` is the batch row whose ``k``-th
    representation becomes the ``k``-th coordinate of permuted tuple ``j``.
    Indices are zero-based.

    Raises
    ------
    ValueError
        When the indices are not a two-dimensional array of integers in
        ``[0, batch_size)``.
    """

    indices: np.ndarray
    batch_size: int

    def __post_init__(self):
        indices = np.asarray(self.indices)

        if indices.ndim != 2 or not np.issubdtype(indices.dtype, np.integer):
            raise ValueError("Expected integer indices of shape (M, n).")

        size = self.batch_size
        if indices.size and (indices.min() < 0 or indices.max() >= size):
            raise ValueError(f"Expected indices in [0, {self.batch_size}).")

        self.indices = indices

    @property
    def num_samples(self) -> int:
        return self.indices.shape[0]

    @property
    def num_variables(self) -> int:
        return self.indices.shape[1]

    @classmethod
    def draw(
        cls,
        rng: np.random.Generator,
        num_samples: int,
        num_variables: int,
        batch_size: int,
    ) -> PermutationPlan:
        """
        Draws every index uniformly and independently, with replacement.
        """
        if num_samples < 1:
            raise ValueError("Expected num_samples >= 1.")

        shape = (num_samples, num_variables)
        return cls(rng.integers(0, batch_size, size=shape), batch_size)


@dataclass
class EstimatorBatch:
    """
    A batch of joint tuples: one ``(K, dim)`` array of representations per
    variable, and (for the conditional estimator) the ``K`` labels.
    """

    reps: list[np.ndarray]
    labels: np.ndarray | None = None

    def __post_init__(self):
        if not self.reps:
            raise ValueError("Expected at least one representation.")

        sizes = {len(rep) for rep in self.reps}
        if self.labels is not None:
            sizes.add(len(self.labels))

        if len(sizes) != 1:
            raise ValueError("Representations and labels differ in size.")

    @property
    def batch_size(self) -> int:
        return len(self.reps[0])

    @property
    def num_variables(self) -> int:
        return len(self.reps)


def _rng(rng: RngLike) -> np.random.Generator:
    return np.random.default_rng(rng)


def infonce(scores: Node) -> Node:
    """
    InfoNCE estimate from a ``(K, K)`` matrix of critic scores, where entry
    ``(i, j)`` scores sample ``x_i`` against sample ``y_j``. The diagonal holds
    the scores of the joint pairs. The estimate never exceeds ``ln K``.
    """
    num = scores.shape[0] if scores.value.ndim == 2 else 0

    if scores.shape != (num, num) or num < 2:
        raise ValueError("Expected a square score matrix with K >= 2.")

    flat = ops.reshape(scores, (num * num,))
    diagonal = ops.gather_rows(flat, np.arange(num) * (num + 1))
    normaliser = ops.logmeanexp(scores, axis=1)

    return ops.add(ops.mean(diagonal), ops.scale(ops.mean(normaliser), -1))


def infonce_scores(
    critic: Critic, weights: Mapping[str, Node], x: Node, y: Node
) -> Node:
    """
    Records the ``(K, K)`` matrix of critic scores of all pairs ``(x_i, y_j)``.
    """
    num = x.shape[0]
    rows = np.repeat(np.arange(num), num)
    cols = np.tile(np.arange(num), num)

    pairs = [ops.gather_rows(x, rows), ops.gather_rows(y, cols)]
    scores = critic.forward(weights, pairs)
    return ops.reshape(scores, (num, num))


def infonce_estimate(critic: Critic, x: np.ndarray, y: np.ndarray) -> float:
    """
    InfoNCE estimate of the mutual information between two variables, from
    ``K`` joint samples ``(x_i, y_i)``.
    """
    if len(x) != len(y):
        raise ValueError("Expected as many x as y samples.")

    tape = Tape()
    weights = critic.params.attach(tape, trainable=False)
    x_node, y_node = tape.constant(x), tape.constant(y)
    scores = infonce_scores(critic, weights, x_node, y_node)
    return infonce(scores).item()


def tc_nce(
    critic: Critic,
    weights: Mapping[str, Node],
    reps: Sequence[Node],
    plan: PermutationPlan,
) -> Node:
    """
    Records the total correlation estimate of a batch of joint tuples: the
    mean critic score of the joint tuples, minus the log-mean-exp of the
    critic scores of the permuted tuples of ``plan``. The permuted tuples form
    a single denominator, shared by all joint tuples.
    """
    if plan.num_variables != len(reps):
        raise ValueError("Plan and batch differ in number of variables.")

    if any(rep.shape[0] != plan.batch_size for rep in reps):
        raise ValueError("Plan and batch differ in batch size.")

    permuted = [
        ops.gather_rows(rep, plan.indices[:, var])
        for var, rep in enumerate(reps)
    ]

    joint_scores = critic.forward(weights, reps)
    perm_scores = critic.forward(weights, permuted)
    normaliser = ops.logmeanexp(
        ops.reshape(perm_scores, (plan.num_samples,)), axis=0
    )

    # Subtracting before averaging makes equal scores cancel exactly.
    shift = ops.reshape(ops.scale(normaliser, -1), (1,))
    return ops.mean(ops.add_bias(joint_scores, shift))


def label_groups(
    labels: np.ndarray | None, batch_size: int, conditional: bool = True
) -> list[np.ndarray]:
    """
    Returns the row indices of every label group with at least two members.
    Without conditioning (or without labels), the whole batch is one group.
    """
    if not conditional or labels is None:
        groups = [np.arange(batch_size)]
    else:
        labels = np.asarray(labels)
        groups = [np.flatnonzero(labels == val) for val in np.unique(labels)]

    return [group for group in groups if len(group) >= 2]


def grouped_tc_nce(
    critic: Critic,
    weights: Mapping[str, Node],
    reps: Sequence[Node],
    labels: np.ndarray | None,
    rng: np.random.Generator,
    num_samples: int = 64,
    conditional: bool = True,
) -> Node | None:
    """
    Records the conditional total correlation estimate of a batch. The batch
    is partitioned by label, and within each group of at least two members,
    :func:`tc_nce` is computed with ``min(num_samples, group size)``
    permuted tuples. The group estimates are averaged with weights
    proportional to group size. With ``conditional=False`` the whole batch
    is a single group, which estimates the unconditional total correlation.

    Returns
    -------
    Node | None
        The estimate, or ``None`` when no label group has two members.
    """
    batch_size = reps[0].shape[0]
    groups = label_groups(labels, batch_size, conditional)

    if not groups:
        return None

    total = sum(len(group) for group in groups)
    estimate = None

    for group in groups:
        if len(group) == batch_size:
            group_reps = list(reps)
        else:
            group_reps = [ops.gather_rows(rep, group) for rep in reps]

        size = len(group)
        plan = PermutationPlan.draw(
            rng, min(num_samples, size), len(reps), size
        )

        term = ops.scale(
            tc_nce(critic, weights, group_reps, plan), size / total
        )
        estimate = term if estimate is None else ops.add(estimate, term)

    return estimate


def tc_nce_estimate(
    critic: Critic, batch: EstimatorBatch, plan: PermutationPlan
) -> float:
    """
    Total correlation estimate of the batch under the given plan.
    """
    tape = Tape()
    weights = critic.params.attach(tape, trainable=False)
    reps = [tape.constant(rep) for rep in batch.reps]
    return tc_nce(critic, weights, reps, plan).item()


def conditional_tc_nce_estimate(
    critic: Critic,
    batch: EstimatorBatch,
    rng: RngLike = 0,
    num_samples: int = 64,
    conditional: bool = True,
) -> float:
    """
    Conditional (or, with ``conditional=False``, unconditional) total
    correlation estimate of the batch. See :func:`grouped_tc_nce`.

    Raises
    ------
    ValueError
        When no label group of the batch has two members.
    """
    tape = Tape()
    weights = critic.params.attach(tape, trainable=False)
    reps = [tape.constant(rep) for rep in batch.reps]

    gen = _rng(rng)
    estimate = grouped_tc_nce(
        critic, weights, reps, batch.labels, gen, num_samples, conditional
    )

    if estimate is None:
        raise ValueError(DEGENERATE_BATCH_MSG)

    return estimate.item()


def critic_loss_for_max(
    critic: Critic,
    batch: EstimatorBatch,
    rng: RngLike = 0,
    num_samples: int = 64,
    conditional: bool = True,
) -> tuple[Node, dict[str, Node]]:
    """
    Records the negated total correlation estimate, which the critic
    minimises. Only the critic parameters are trainable: the representations
    are recorded as constants and receive no gradient.

    Returns
    -------
    tuple[Node, dict[str, Node]]
        The loss, and the critic's parameters as trainable leaves on the same
        tape.

    Raises
    ------
    ValueError
        When no label group of the batch has two members.
    """
    tape = Tape()
    weights = critic.params.attach(tape, trainable=True)
    reps = [tape.constant(rep) for rep in batch.reps]

    gen = _rng(rng)
    estimate = grouped_tc_nce(
        critic, weights, reps, batch.labels, gen, num_samples, conditional
    )

    if estimate is None:
        raise ValueError(DEGENERATE_BATCH_MSG)

    return ops.scale(estimate, -1), weights


def fit_critic(
    critic: Critic,
    batches: Iterable[EstimatorBatch],
    rng: RngLike = 0,
    rms_params: RmsPropParams = RmsPropParams(lr=1e-3),
    num_samples: int = 64,
    conditional: bool = True,
) -> Critic:
    """
    Trains the critic to maximise the total correlation estimate, taking one
    RMSProp step per batch. Batches without a label group of two members are
    skipped.

    Returns
    -------
    Critic
        The trained critic. The given critic is left untouched.
    """
    gen = _rng(rng)
    optim = RmsProp(critic.params, rms_params)

    for batch in batches:
        if not label_groups(batch.labels, batch.batch_size, conditional):
            continue

        loss, leaves = critic_loss_for_max(
            critic, batch, gen, num_samples, conditional
        )

        grads = loss.tape.backward(loss).named(leaves)
        critic = critic.with_params(optim.step(critic.params, grads))

    return critic
