from dataclasses import replace

import numpy as np
import pytest
from numpy.testing import assert_, assert_allclose, assert_equal, assert_raises

from tcdiverse.data import (
    GeneratorParams,
    Role,
    Shift,
    Variant,
    dataset_stats,
    make_cmnist_train,
    make_rcmnist_train,
    make_shifted_testset,
    make_tcmnist_train,
    make_train,
    shifted_conditions,
)
from tcdiverse.data.generate import downsample, rotate
from tests.helpers import raw_digits


@pytest.fixture(scope="module")
def large_raw():
    """
    50 000 random digits of 2x2 pixels: enough for tight agreement rates, but
    cheap to generate.
    """
    return raw_digits(50_000, side=2, seed=7)


def test_cmnist_agreement_rates(large_raw):
    """
    Tests the signal strengths of C-MNIST: the digit group agrees with the
    corrupted label 75% of the time, and the colour 85% of the time.
    """
    data = make_cmnist_train(large_raw, GeneratorParams(seed=0))
    stats = dataset_stats(data)

    assert_equal(stats.size, 50_000)
    assert_(0.74 <= stats.digit_agreement <= 0.76)
    assert_(0.84 <= stats.colour_agreement <= 0.86)
    assert_(stats.colour2_agreement is None)
    assert_(0.45 <= stats.class_balance <= 0.55)


def test_tcmnist_agreement_rates(large_raw):
    """
    Tests that the second colour of TC-MNIST agrees with the corrupted label
    75% of the time, and the other signals are as in C-MNIST.
    """
    data = make_tcmnist_train(large_raw, GeneratorParams(seed=0))
    stats = dataset_stats(data)

    assert_(0.74 <= stats.colour2_agreement <= 0.76)
    assert_(0.74 <= stats.digit_agreement <= 0.76)
    assert_(0.84 <= stats.colour_agreement <= 0.86)


@pytest.mark.parametrize("variant", [Variant.CMNIST, Variant.TCMNIST])
def test_noiseless_limit(variant: Variant):
    """
    Without label or colour noise, the training target, the clean label and
    the colour all coincide, and the digit group is the clean label.
    """
    params = GeneratorParams(
        label_flip_prob=0.0,
        colour_flip_probs=(0.0, 0.0),
        colour2_flip_prob=0.0,
        seed=2,
    )

    data = make_train(raw_digits(500, seed=2), params, variant)

    assert_equal(data.labels, data.clean_label)
    assert_equal(data.colour, data.labels)
    assert_equal(data.digit_group, data.clean_label)

    if variant is Variant.TCMNIST:
        assert_equal(data.colour2, data.labels)


def test_uninformative_second_colour(large_raw):
    """
    A second colour that flips half the time carries no label information.
    """
    params = GeneratorParams(colour2_flip_prob=0.5, seed=3)
    stats = dataset_stats(make_tcmnist_train(large_raw, params))

    assert_(stats.colour2_agreement is not None)
    assert_allclose(stats.colour2_agreement, 0.5, atol=0.01)


def test_environments_have_their_own_colour_noise(large_raw):
    """
    Tests that the colour flip probability of each environment is respected.
    """
    data = make_cmnist_train(large_raw, GeneratorParams(seed=1))

    for env, prob in enumerate((0.1, 0.2)):
        in_env = data.env == env
        flips = np.mean(data.colour[in_env] != data.labels[in_env])

        assert_equal(in_env.sum(), 25_000)
        assert_allclose(flips, prob, atol=0.01)


def test_digit_sits_in_colour_channel():
    """
    Tests that the digit is drawn in the channel given by the colour bit, and
    the other channel is empty.
    """
    data = make_cmnist_train(raw_digits(50), GeneratorParams(seed=2))
    images = data.images()

    assert_equal(images.shape, (50, 2, 4, 4))
    for idx in range(len(data)):
        other = 1 - data.colour[idx]
        assert_equal(images[idx, other], np.zeros((4, 4)))


def test_tcmnist_third_channel_is_constant():
    data = make_tcmnist_train(raw_digits(50), GeneratorParams(seed=2))
    images = data.images()

    assert_equal(data.num_channels, 3)
    for idx in range(len(data)):
        assert_(np.all(images[idx, 2] == data.colour2[idx]))


def test_rcmnist_matches_cmnist_without_common_cause():
    """
    Tests that RC-MNIST examples without the common cause are identical to
    the C-MNIST examples of the same seed, and the others are rotated.
    """
    raw = raw_digits(200)
    params = GeneratorParams(seed=4)

    cmnist = make_cmnist_train(raw, params)
    rcmnist = make_rcmnist_train(raw, params)
    cause = rcmnist.common_cause == 1

    assert_(0 < cause.sum() < 200)
    assert_equal(rcmnist.inputs[~cause], cmnist.inputs[~cause])
    assert_equal(rcmnist.colour[~cause], cmnist.colour[~cause])
    assert_equal(rcmnist.labels, cmnist.labels)

    # Rotated digits are rotated copies of the C-MNIST digits.
    rc_digits = rcmnist.images().sum(axis=1)[cause]
    cm_digits = cmnist.images().sum(axis=1)[cause]
    assert_allclose(rc_digits, rotate(cm_digits))


def test_rotation_perturbs_colour():
    """
    Tests that the colour of rotated RC-MNIST examples is flipped with the
    given probability, which weakens the colour signal.
    """
    raw = raw_digits(20_000, side=2)
    params = GeneratorParams(seed=5, rotation_flip_prob=0.5)
    data = make_rcmnist_train(raw, params)

    cause = data.common_cause == 1
    agree = data.colour == data.labels
    assert_allclose(agree[~cause].mean(), 0.85, atol=0.01)
    assert_allclose(agree[cause].mean(), 0.5, atol=0.02)


@pytest.mark.parametrize("variant", list(Variant))
def test_generation_is_deterministic(variant: Variant):
    """
    Tests that the same seed gives identical sets, and another seed does not.
    """
    raw = raw_digits(100)

    first = make_train(raw, GeneratorParams(seed=3), variant)
    second = make_train(raw, GeneratorParams(seed=3), variant)
    other = make_train(raw, GeneratorParams(seed=4), variant)

    assert_equal(first, second)
    assert_(first != other)
    assert_equal(first.variant, variant)
    assert_equal(first.role, Role.TRAIN)


def test_num_train_caps_training_pool():
    data = make_cmnist_train(raw_digits(100), GeneratorParams(num_train=30))
    assert_equal(len(data), 30)


def test_train_raises_empty_or_shifted():
    with assert_raises(ValueError):
        make_cmnist_train(raw_digits(0), GeneratorParams())

    params = GeneratorParams(shift=Shift.DIGIT_ONLY)
    with assert_raises(ValueError):
        make_cmnist_train(raw_digits(10), params)


def test_shifted_conditions():
    assert_equal(shifted_conditions(Variant.CMNIST), [Shift.DIGIT_ONLY])
    assert_equal(shifted_conditions(Variant.RCMNIST), [Shift.DIGIT_ONLY])
    assert_equal(
        shifted_conditions(Variant.TCMNIST),
        [Shift.DIGIT_ONLY, Shift.COLOUR2_ONLY],
    )


@pytest.fixture(scope="module")
def test_raw():
    return raw_digits(10_000, side=2, seed=8)


def test_digit_only_testset(test_raw):
    """
    Tests that the digit-only condition keeps the digit signal, but makes the
    colour uninformative, and splits into parts of the configured sizes.
    """
    params = GeneratorParams(seed=0, shift=Shift.DIGIT_ONLY)
    splits = make_shifted_testset(test_raw, params, Variant.CMNIST)

    assert_equal(len(splits.adapt_train), 500)
    assert_equal(len(splits.adapt_val), 500)
    assert_equal(len(splits.adapt_test), 9000)

    assert_equal(splits.adapt_train.role, Role.ADAPT_TRAIN)
    assert_equal(splits.adapt_val.role, Role.ADAPT_VAL)
    assert_equal(splits.adapt_test.role, Role.ADAPT_TEST)
    assert_equal(splits.adapt_test.shift, Shift.DIGIT_ONLY)

    stats = dataset_stats(splits.adapt_test)
    assert_(0.73 <= stats.digit_agreement <= 0.77)
    assert_(0.47 <= stats.colour_agreement <= 0.53)


def test_tcmnist_testsets(test_raw):
    """
    Tests that, in TC-MNIST, only the second colour is informative under the
    colour2-only condition, and it is uninformative under digit-only.
    """
    params = GeneratorParams(seed=0, shift=Shift.COLOUR2_ONLY)
    splits = make_shifted_testset(test_raw, params, Variant.TCMNIST)
    stats = dataset_stats(splits.adapt_test)

    assert_(0.73 <= stats.colour2_agreement <= 0.77)
    assert_(0.47 <= stats.digit_agreement <= 0.53)
    assert_(0.47 <= stats.colour_agreement <= 0.53)

    params = replace(params, shift=Shift.DIGIT_ONLY)
    splits = make_shifted_testset(test_raw, params, Variant.TCMNIST)
    stats = dataset_stats(splits.adapt_test)

    assert_(0.73 <= stats.digit_agreement <= 0.77)
    assert_(0.47 <= stats.colour2_agreement <= 0.53)


def test_rcmnist_testset_keeps_rotation(test_raw):
    params = GeneratorParams(seed=0, shift=Shift.DIGIT_ONLY)
    splits = make_shifted_testset(test_raw, params, Variant.RCMNIST)

    cause = splits.adapt_test.common_cause
    assert_(cause is not None)
    assert_allclose(cause.mean(), 0.5, atol=0.03)


def test_shifted_testset_raises():
    """
    Tests that shifted test sets refuse the training condition, conditions
    that do not apply to the benchmark, and too few digits.
    """
    raw = raw_digits(20)
    small = GeneratorParams(split_sizes=(5, 5, 5), shift=Shift.DIGIT_ONLY)

    with assert_raises(ValueError):
        none = replace(small, shift=Shift.NONE)
        make_shifted_testset(raw, none, Variant.CMNIST)

    with assert_raises(ValueError):
        colour2 = replace(small, shift=Shift.COLOUR2_ONLY)
        make_shifted_testset(raw, colour2, Variant.CMNIST)

    with assert_raises(ValueError):
        make_shifted_testset(raw_digits(14), small, Variant.CMNIST)

    splits = make_shifted_testset(raw_digits(15), small, Variant.CMNIST)
    assert_equal(len(splits.adapt_test), 5)


@pytest.mark.parametrize(
    "kwargs",
    [
        {"label_flip_prob": 1.5},
        {"colour_flip_probs": (0.1, -0.1)},
        {"colour_flip_probs": ()},
        {"num_train": 0},
        {"split_sizes": (10, 10)},
        {"split_sizes": (10, 0, 10)},
    ],
)
def test_generator_params_raise_invalid(kwargs):
    with assert_raises(ValueError):
        GeneratorParams(**kwargs)


def test_generator_params_normalise_config_values():
    """
    Tests that lists and strings, as they come from configuration files, are
    turned into tuples and enums.
    """
    params = GeneratorParams(
        colour_flip_probs=[0.2, 0.3],  # type: ignore
        split_sizes=[1, 2, 3],  # type: ignore
        shift="digit_only",  # type: ignore
    )

    assert_equal(params.colour_flip_probs, (0.2, 0.3))
    assert_equal(params.split_sizes, (1, 2, 3))
    assert_(params.shift is Shift.DIGIT_ONLY)


def test_downsample():
    images = np.arange(16.0).reshape(1, 4, 4)
    expected = [[[2.5, 4.5], [10.5, 12.5]]]
    assert_allclose(downsample(images), expected)

    with assert_raises(ValueError):
        downsample(np.ones((1, 3, 3)))

    with assert_raises(ValueError):
        downsample(np.ones((1, 4, 2)))


def test_rotate_is_a_permutation():
    """
    Tests that rotating four times is the identity, and rotating once keeps
    the pixel values.
    """
    images = np.random.default_rng(0).random((3, 4, 4))
    once = rotate(images)

    assert_allclose(np.sort(once.ravel()), np.sort(images.ravel()))
    assert_allclose(rotate(rotate(rotate(once))), images)
    assert_(not np.allclose(once, images))
