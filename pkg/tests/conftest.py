import pytest

from tcdiverse.data import GeneratorParams, Shift, Variant, generate_bundle
from tests.helpers import make_dataset, raw_digits


@pytest.fixture(scope="session")
def small_params():
    """
    Fixture that returns generator parameters for small shifted test sets of
    50 + 50 + 100 examples.
    """
    return GeneratorParams(seed=3, num_train=400, split_sizes=(50, 50, 100))


@pytest.fixture(scope="session")
def cmnist_train():
    """
    Fixture that returns a C-MNIST training set of 256 random digits, each
    with two 4x4 channels.
    """
    return make_dataset(256, Variant.CMNIST, seed=1)


@pytest.fixture(scope="session")
def cmnist_bundle(small_params):
    """
    Fixture that returns the C-MNIST training set and the digit-only test
    splits generated from random digits.
    """
    raw_train = raw_digits(400, seed=1)
    raw_test = raw_digits(200, seed=2)
    return generate_bundle(raw_train, raw_test, Variant.CMNIST, small_params)


@pytest.fixture(scope="session")
def cmnist_splits(cmnist_bundle):
    """
    Fixture that returns the digit-only adaptation splits of the C-MNIST
    bundle.
    """
    return cmnist_bundle.shifted[Shift.DIGIT_ONLY]


@pytest.fixture(scope="session")
def tcmnist_bundle(small_params):
    """
    Fixture that returns a TC-MNIST bundle, with both shifted test
    conditions.
    """
    raw_train = raw_digits(400, seed=1)
    raw_test = raw_digits(200, seed=2)
    return generate_bundle(raw_train, raw_test, Variant.TCMNIST, small_params)
