from dataclasses import replace

import pytest
from numpy.testing import assert_, assert_equal, assert_raises, assert_warns

from tcdiverse.data import GeneratorParams, Shift, Variant, load_or_generate
from tcdiverse.data.cache import (
    bundle_key,
    generate_bundle,
    load_bundle,
    save_bundle,
)
from tcdiverse.exceptions import CacheMismatchWarning
from tests.helpers import raw_digits


def _loader():
    return raw_digits(300, seed=1), raw_digits(100, seed=2)


def _failing_loader():
    raise AssertionError("Should not load raw digits.")


@pytest.fixture
def params():
    return GeneratorParams(seed=5, split_sizes=(20, 20, 40))


def test_bundle_has_every_condition(params):
    bundle = generate_bundle(*_loader(), Variant.TCMNIST, params)

    assert_equal(set(bundle.shifted), {Shift.DIGIT_ONLY, Shift.COLOUR2_ONLY})
    assert_equal(len(bundle.train), 300)
    assert_equal(len(bundle.shifted[Shift.COLOUR2_ONLY].adapt_test), 40)


def test_bundle_key(params):
    """
    Tests that the cache key depends on the benchmark, seed and generator
    parameters, but not on the shift.
    """
    key = bundle_key(Variant.CMNIST, params)

    assert_(key.startswith("CMNIST-seed5-"))
    assert_equal(key, bundle_key(Variant.CMNIST, params))
    assert_equal(
        key, bundle_key(Variant.CMNIST, replace(params, shift="digit_only"))
    )
    assert_(key != bundle_key(Variant.RCMNIST, params))
    assert_(key != bundle_key(Variant.CMNIST, replace(params, seed=6)))
    assert_(
        key != bundle_key(Variant.CMNIST, replace(params, num_train=10))
    )


def test_save_and_load(tmp_path, params):
    bundle = generate_bundle(*_loader(), Variant.RCMNIST, params)
    where = tmp_path / "bundle.bin"

    save_bundle(where, "key", bundle)
    assert_equal(load_bundle(where, "key"), bundle)

    with assert_raises(ValueError):
        load_bundle(where, "other")


def test_saving_is_byte_identical(tmp_path, params):
    """
    Tests that generating and storing the same bundle twice gives identical
    files.
    """
    for name in ("first.bin", "second.bin"):
        bundle = generate_bundle(*_loader(), Variant.TCMNIST, params)
        save_bundle(tmp_path / name, "key", bundle)

    first = (tmp_path / "first.bin").read_bytes()
    assert_equal(first, (tmp_path / "second.bin").read_bytes())


def test_load_or_generate_uses_cache(tmp_path, params):
    """
    Tests that a generated bundle is stored, and read back on the next call
    without loading any digits.
    """
    bundle = load_or_generate(tmp_path, Variant.CMNIST, params, _loader)
    assert_equal(len(list(tmp_path.iterdir())), 1)

    cached = load_or_generate(
        tmp_path, Variant.CMNIST, params, _failing_loader
    )
    assert_equal(cached, bundle)


def test_load_or_generate_regenerates_mismatch(tmp_path, params):
    """
    Tests that a cache file that holds something else is regenerated, with a
    warning.
    """
    key = bundle_key(Variant.CMNIST, params)
    where = tmp_path / f"{key}.bin"
    where.write_bytes(b"not a bundle")

    with assert_warns(CacheMismatchWarning):
        bundle = load_or_generate(tmp_path, Variant.CMNIST, params, _loader)

    assert_equal(load_bundle(where, key), bundle)


def test_load_or_generate_without_cache(tmp_path, params):
    bundle = load_or_generate(None, Variant.CMNIST, params, _loader)
    assert_equal(bundle, generate_bundle(*_loader(), Variant.CMNIST, params))
