import numpy as np
import pytest
from numpy.testing import assert_, assert_allclose, assert_equal, assert_raises

from tcdiverse.diffengine import Tape, grad_check
from tcdiverse.nets import Critic, NetParams, Parameters, RmsPropParams
from tcdiverse.tcest import (
    DiscreteJoint,
    EstimatorBatch,
    PermutationPlan,
    conditional_tc_nce_estimate,
    critic_loss_for_max,
    discrete_conditional_tc_oracle,
    discrete_tc_oracle,
    fit_critic,
    gaussian_mi_oracle,
    grouped_tc_nce,
    infonce,
    infonce_estimate,
    label_groups,
    tc_nce,
    tc_nce_estimate,
)
from tests.helpers import TINY_NET

# Critic for low-dimensional test systems. Inputs are not normalised, since
# scalar inputs would collapse to their sign.
_SMALL_CRITIC = NetParams(
    critic_hidden_sizes=(32,), normalize_critic_inputs=False
)


def _logsumexp(values: np.ndarray, axis: int | None = None) -> np.ndarray:
    top = np.max(values, axis=axis, keepdims=True)
    total = np.log(np.sum(np.exp(values - top), axis=axis, keepdims=True))
    return np.squeeze(top + total, axis=axis)


def _batch(num: int, num_variables: int, seed: int = 0) -> EstimatorBatch:
    rng = np.random.default_rng(seed)
    reps = [rng.normal(size=(num, 4)) for _ in range(num_variables)]
    return EstimatorBatch(reps, rng.integers(0, 2, size=num))


def test_permutation_plan_draw():
    plan = PermutationPlan.draw(np.random.default_rng(0), 5, 3, 8)

    assert_equal(plan.num_samples, 5)
    assert_equal(plan.num_variables, 3)
    assert_(plan.indices.min() >= 0)
    assert_(plan.indices.max() < 8)


@pytest.mark.parametrize(
    "indices",
    [
        np.array([0, 1, 2]),
        np.array([[0, 1], [2, 4]]),
        np.array([[0, -1]]),
        np.array([[0.0, 1.0]]),
    ],
)
def test_permutation_plan_raises_invalid_indices(indices: np.ndarray):
    with assert_raises(ValueError):
        PermutationPlan(indices, batch_size=4)


def test_permutation_plan_raises_no_samples():
    with assert_raises(ValueError):
        PermutationPlan.draw(np.random.default_rng(0), 0, 2, 4)


def test_estimator_batch_raises_size_mismatch():
    with assert_raises(ValueError):
        EstimatorBatch([])

    with assert_raises(ValueError):
        EstimatorBatch([np.zeros((3, 2)), np.zeros((4, 2))])

    with assert_raises(ValueError):
        EstimatorBatch([np.zeros((3, 2))], labels=np.zeros(4))


def test_label_groups():
    """
    Tests that groups follow the labels, that groups with a single member are
    dropped, and that unconditional grouping uses the whole batch.
    """
    labels = np.array([1, 0, 1, 2, 0, 1])
    groups = label_groups(labels, 6)

    assert_equal(len(groups), 2)
    assert_equal(groups[0], [1, 4])
    assert_equal(groups[1], [0, 2, 5])

    assert_equal(label_groups(labels, 6, conditional=False), [np.arange(6)])
    assert_equal(label_groups(None, 3), [np.arange(3)])
    assert_equal(label_groups(np.array([0, 1]), 2), [])


def test_infonce_never_exceeds_log_k():
    """
    Tests that the InfoNCE estimate is bounded by ln K, even for scores that
    single out the joint pairs perfectly.
    """
    rng = np.random.default_rng(1)

    for num in (2, 8, 32):
        tape = Tape()
        perfect = tape.constant(100 * np.eye(num))
        assert_(infonce(perfect).item() <= np.log(num) + 1e-12)
        assert_allclose(infonce(perfect).item(), np.log(num), atol=1e-6)

        scores = tape.constant(rng.normal(scale=5, size=(num, num)))
        assert_(infonce(scores).item() <= np.log(num) + 1e-12)


def test_infonce_matches_numpy():
    scores = np.random.default_rng(2).normal(size=(6, 6))
    expected = np.mean(np.diag(scores) - _logsumexp(scores, axis=1))
    expected += np.log(6)

    tape = Tape()
    assert_allclose(infonce(tape.constant(scores)).item(), expected)


def test_infonce_raises_invalid_scores():
    tape = Tape()

    with assert_raises(ValueError):
        infonce(tape.constant(np.zeros((2, 3))))

    with assert_raises(ValueError):
        infonce(tape.constant(np.zeros((1, 1))))

    with assert_raises(ValueError):
        infonce(tape.constant(np.zeros(4)))


def test_infonce_estimate_raises_size_mismatch():
    critic = Critic.init(2, np.random.default_rng(0), TINY_NET)

    with assert_raises(ValueError):
        infonce_estimate(critic, np.zeros((3, 4)), np.zeros((4, 4)))


def test_tc_nce_matches_numpy():
    """
    Tests the estimate of a fixed critic and plan against a direct
    computation from the critic's scores.
    """
    rng = np.random.default_rng(3)
    critic = Critic.init(3, rng, TINY_NET)
    batch = _batch(10, 3)
    plan = PermutationPlan.draw(rng, 7, 3, 10)

    permuted = [rep[plan.indices[:, k]] for k, rep in enumerate(batch.reps)]
    joint_scores = critic(batch.reps)
    perm_scores = critic(permuted)
    expected = joint_scores.mean() - _logsumexp(perm_scores) + np.log(7)

    assert_allclose(tc_nce_estimate(critic, batch, plan), expected)


def _shift_last_layer(
    critic: Critic, shift: float, zero_weights: bool = False
) -> Critic:
    arrays = dict(critic.params)
    last = max(int(name.split(".")[0]) for name in arrays)

    if zero_weights:
        weight = arrays[f"{last}.weight"]
        arrays[f"{last}.weight"] = np.zeros_like(weight)

    arrays[f"{last}.bias"] = arrays[f"{last}.bias"] + shift
    return critic.with_params(Parameters(arrays))


@pytest.mark.parametrize("value", [0.1, 1.7, -2.3])
def test_constant_critic_gives_exactly_zero(value: float):
    """
    A critic that scores every tuple the same carries no information, so
    every estimator returns exactly zero, without rounding noise.
    """
    rng = np.random.default_rng(4)
    critic = Critic.init(2, rng, TINY_NET)
    critic = _shift_last_layer(critic, 0.0, zero_weights=True)
    critic = _shift_last_layer(critic, value)

    batch = _batch(256, 2)
    plan = PermutationPlan.draw(rng, 64, 2, 256)

    assert_(infonce_estimate(critic, *batch.reps) == 0.0)
    assert_(tc_nce_estimate(critic, batch, plan) == 0.0)

    for conditional in (True, False):
        estimate = conditional_tc_nce_estimate(
            critic, batch, 0, 64, conditional
        )
        assert_(estimate == 0.0)


@pytest.mark.parametrize("shift", [-3.0, 0.5, 10.0])
def test_estimates_invariant_to_critic_offset(shift: float):
    """
    Adding a constant to every critic score leaves each estimate unchanged.
    """
    rng = np.random.default_rng(5)
    critic = Critic.init(2, rng, TINY_NET)
    shifted = _shift_last_layer(critic, shift)

    batch = _batch(32, 2)
    plan = PermutationPlan.draw(rng, 16, 2, 32)

    assert_allclose(
        infonce_estimate(shifted, *batch.reps),
        infonce_estimate(critic, *batch.reps),
        atol=1e-12,
    )

    assert_allclose(
        tc_nce_estimate(shifted, batch, plan),
        tc_nce_estimate(critic, batch, plan),
        atol=1e-12,
    )

    assert_allclose(
        conditional_tc_nce_estimate(shifted, batch, 0, 16),
        conditional_tc_nce_estimate(critic, batch, 0, 16),
        atol=1e-12,
    )


def test_tc_nce_raises_plan_mismatch():
    rng = np.random.default_rng(4)
    critic = Critic.init(2, rng, TINY_NET)
    tape = Tape()
    weights = critic.params.attach(tape, trainable=False)
    reps = [tape.constant(rep) for rep in _batch(6, 2).reps]

    with assert_raises(ValueError):
        tc_nce(critic, weights, reps, PermutationPlan.draw(rng, 4, 3, 6))

    with assert_raises(ValueError):
        tc_nce(critic, weights, reps, PermutationPlan.draw(rng, 4, 2, 5))


def test_grouped_estimate_weights_groups_by_size():
    """
    Tests that the conditional estimate is the size-weighted average of the
    estimates within each label group, when every group uses all of its
    members as permuted tuples.
    """
    critic = Critic.init(2, np.random.default_rng(5), TINY_NET)
    batch = _batch(12, 2, seed=5)
    labels = batch.labels

    value = conditional_tc_nce_estimate(critic, batch, rng=6, num_samples=1)

    # With one permuted tuple per group, the plan of each group is drawn in
    # turn from the same generator.
    gen = np.random.default_rng(6)
    expected = 0.0
    for label in np.unique(labels):
        rows = np.flatnonzero(labels == label)
        group = EstimatorBatch([rep[rows] for rep in batch.reps])
        plan = PermutationPlan.draw(gen, 1, 2, len(rows))
        share = len(rows) / len(labels)
        expected += share * tc_nce_estimate(critic, group, plan)

    assert_allclose(value, expected)


def test_unconditional_ignores_labels():
    critic = Critic.init(2, np.random.default_rng(7), TINY_NET)
    batch = _batch(12, 2, seed=7)
    unlabelled = EstimatorBatch(batch.reps)

    with_labels = conditional_tc_nce_estimate(
        critic, batch, rng=1, conditional=False
    )
    without = conditional_tc_nce_estimate(critic, unlabelled, rng=1)

    assert_allclose(with_labels, without)


def test_degenerate_batch_raises():
    """
    Tests that a batch in which every label occurs once cannot be estimated
    conditionally, but can be estimated unconditionally.
    """
    critic = Critic.init(2, np.random.default_rng(8), TINY_NET)
    batch = EstimatorBatch(_batch(3, 2).reps, np.array([0, 1, 2]))

    with assert_raises(ValueError):
        conditional_tc_nce_estimate(critic, batch)

    with assert_raises(ValueError):
        critic_loss_for_max(critic, batch)

    conditional_tc_nce_estimate(critic, batch, conditional=False)

    tape = Tape()
    weights = critic.params.attach(tape, trainable=False)
    reps = [tape.constant(rep) for rep in batch.reps]
    gen = np.random.default_rng(0)
    assert_(grouped_tc_nce(critic, weights, reps, batch.labels, gen) is None)


def test_critic_loss_only_trains_critic():
    """
    Tests that the critic loss is the negated estimate, and that only the
    critic parameters receive gradients.
    """
    critic = Critic.init(2, np.random.default_rng(9), TINY_NET)
    batch = _batch(16, 2, seed=9)

    loss, leaves = critic_loss_for_max(critic, batch, rng=3)
    estimate = conditional_tc_nce_estimate(critic, batch, rng=3)
    grads = loss.tape.backward(loss)

    assert_allclose(loss.item(), -estimate)
    assert_equal(set(grads), {node.index for node in leaves.values()})


@pytest.mark.parametrize("conditional", [True, False])
def test_gradient_wrt_representation(conditional: bool):
    """
    Tests the gradient of the full estimator with respect to the entries of
    one representation.
    """
    critic = Critic.init(3, np.random.default_rng(10), TINY_NET)
    batch = _batch(12, 3, seed=10)

    def func(leaf):
        tape = leaf.tape
        weights = critic.params.attach(tape, trainable=False)
        reps = [leaf, *(tape.constant(rep) for rep in batch.reps[1:])]
        gen = np.random.default_rng(11)
        return grouped_tc_nce(
            critic, weights, reps, batch.labels, gen, 8, conditional
        )

    assert_(grad_check(func, batch.reps[0].copy()) < 1e-4)


@pytest.mark.parametrize("name", ["0.weight", "0.bias", "1.weight"])
def test_gradient_wrt_critic(name: str):
    critic = Critic.init(2, np.random.default_rng(12), TINY_NET)
    batch = _batch(12, 2, seed=12)

    def func(leaf):
        tape = leaf.tape
        weights = critic.params.attach(tape, trainable=False)
        weights[name] = leaf
        reps = [tape.constant(rep) for rep in batch.reps]
        gen = np.random.default_rng(13)
        return grouped_tc_nce(critic, weights, reps, batch.labels, gen, 8)

    assert_(grad_check(func, critic.params[name].copy()) < 1e-4)


def test_fit_critic_leaves_given_critic_untouched():
    critic = Critic.init(2, np.random.default_rng(14), TINY_NET)
    params = critic.params
    batches = [_batch(16, 2, seed=seed) for seed in range(3)]

    fitted = fit_critic(critic, batches, rng=0)

    assert_equal(critic.params, params)
    assert_(fitted != critic)
    assert_equal(fitted.slope, critic.slope)


def test_fit_critic_skips_degenerate_batches():
    critic = Critic.init(2, np.random.default_rng(15), TINY_NET)
    batch = EstimatorBatch(_batch(2, 2).reps, np.array([0, 1]))

    assert_equal(fit_critic(critic, [batch, batch]), critic)


def _one_hot(values: np.ndarray) -> np.ndarray:
    return np.eye(2)[values]


def _sampler(table: np.ndarray, labelled: bool):
    """
    Returns a function that draws batches from the joint distribution of
    binary variables in ``table``. When ``labelled`` is set, the first axis
    holds the label and the other axes the variables.
    """
    joint = DiscreteJoint(table)
    probs = joint.table.ravel()

    def sample(rng: np.random.Generator, num: int) -> EstimatorBatch:
        cells = rng.choice(len(probs), size=num, p=probs)
        values = np.unravel_index(cells, joint.table.shape)

        if labelled:
            reps = [_one_hot(value) for value in values[1:]]
            return EstimatorBatch(reps, values[0])

        return EstimatorBatch([_one_hot(value) for value in values])

    return sample


def _trained_estimate(
    table: np.ndarray, labelled: bool, conditional: bool, seed: int
) -> float:
    """
    Trains a critic for 2000 steps on batches drawn from the table, and
    returns its average estimate over fresh evaluation batches.
    """
    sample = _sampler(table, labelled)
    num_variables = table.ndim - labelled

    rng = np.random.default_rng(seed)
    critic = Critic.init(num_variables, rng, _SMALL_CRITIC, input_dim=2)
    batches = (sample(rng, 256) for _ in range(2000))
    critic = fit_critic(
        critic,
        batches,
        rng,
        RmsPropParams(lr=1e-3),
        num_samples=128,
        conditional=conditional,
    )

    estimates = [
        conditional_tc_nce_estimate(
            critic, sample(rng, 2048), rng, 2048, conditional
        )
        for _ in range(10)
    ]

    return float(np.mean(estimates))


def _median_estimate(table, labelled, conditional) -> float:
    estimates = [
        _trained_estimate(table, labelled, conditional, seed)
        for seed in range(5)
    ]

    return float(np.median(estimates))


def _noisy_copies(flip: float, num_variables: int) -> np.ndarray:
    """
    Joint table of a fair label and ``num_variables`` copies of it, each
    flipped independently with the given probability.
    """
    copy = np.array([[1 - flip, flip], [flip, 1 - flip]])

    table = np.array([0.5, 0.5])
    for _ in range(num_variables):
        table = table[..., None] * copy.reshape(
            (2,) + (1,) * (table.ndim - 1) + (2,)
        )

    return table


def test_noisy_copies_table():
    table = _noisy_copies(0.1, 2)

    assert_allclose(table.sum(), 1)
    assert_allclose(table[0, 0, 0], 0.5 * 0.9 * 0.9)
    assert_allclose(table[1, 0, 1], 0.5 * 0.1 * 0.9)


def test_trained_single_variable_is_zero():
    table = np.array([0.3, 0.7])
    assert_(abs(_median_estimate(table, False, False)) < 0.05)


def test_trained_binary_pair():
    table = np.array([[0.4, 0.1], [0.1, 0.4]])
    oracle = discrete_tc_oracle(table)

    assert_allclose(_median_estimate(table, False, False), oracle, atol=0.05)


def test_trained_three_variables():
    """
    Tests the estimate on a chain of three binary variables, where each
    variable copies the previous one and flips it with probability 0.2.
    """
    flip = np.array([[0.8, 0.2], [0.2, 0.8]])
    table = 0.5 * flip[:, :, None] * flip[None, :, :]
    oracle = discrete_tc_oracle(table)

    assert_(0.3 < oracle < 0.7)
    assert_allclose(_median_estimate(table, False, False), oracle, atol=0.05)


def test_trained_perfect_copies_of_label():
    """
    Copies of the label have no conditional total correlation, but ln 2 of
    unconditional total correlation.
    """
    table = _noisy_copies(0.0, 2)

    assert_(abs(_median_estimate(table, True, True)) < 0.05)
    assert_(_median_estimate(table, True, False) > 0.4)


def test_trained_noisy_copies_of_label():
    """
    Noisy copies of the label are independent given the label, while they are
    strongly dependent without it.
    """
    table = _noisy_copies(0.1, 2)

    joints = [DiscreteJoint(2 * table[label]) for label in range(2)]
    conditional = discrete_conditional_tc_oracle(joints, np.array([0.5] * 2))
    unconditional = discrete_tc_oracle(table.sum(axis=0))

    assert_allclose(conditional, 0.0, atol=1e-12)
    assert_allclose(_median_estimate(table, True, True), 0.0, atol=0.05)
    assert_allclose(
        _median_estimate(table, True, False), unconditional, atol=0.05
    )


def test_trained_gaussian_infonce():
    """
    Tests the InfoNCE estimate of a trained critic on a bivariate normal
    distribution with correlation 0.8, against the closed-form mutual
    information.
    """
    rho = 0.8
    cov = np.array([[1.0, rho], [rho, 1.0]])
    rng = np.random.default_rng(16)

    def sample(num: int) -> np.ndarray:
        return rng.multivariate_normal(np.zeros(2), cov, size=num)

    def batches():
        for _ in range(2000):
            xy = sample(256)
            yield EstimatorBatch([xy[:, :1], xy[:, 1:]])

    net = NetParams(critic_hidden_sizes=(64,), normalize_critic_inputs=False)
    critic = Critic.init(2, rng, net, input_dim=1)
    critic = fit_critic(
        critic, batches(), rng, RmsPropParams(lr=1e-3), num_samples=128
    )

    estimates = []
    for _ in range(40):
        xy = sample(256)
        estimates.append(infonce_estimate(critic, xy[:, :1], xy[:, 1:]))

    estimate = float(np.mean(estimates))
    assert_(0.35 <= estimate <= gaussian_mi_oracle(rho))
