"""
Generators for the coloured digit benchmarks. In each of them, the binary
target is a noisy version of whether a digit is at least five, and one or two
additional "colour" signals are constructed from that noisy target.
"""

from dataclasses import dataclass

import numpy as np

from tcdiverse.constants import (
    STREAM_BASE,
    STREAM_COLOUR2,
    STREAM_COMMON_CAUSE,
    STREAM_SHIFT,
)
from tcdiverse.data.ColoredDataset import ColoredDataset, Role, Shift, Variant
from tcdiverse.data.idx import RawDigits


@dataclass
class GeneratorParams:
    """
    Parameters for the dataset generators.

    Parameters
    ----------
    label_flip_prob
        Probability of flipping the clean label into the corrupted training
        target. Default 0.25.
    colour_flip_probs
        Per training environment, the probability that the colour bit
        disagrees with the corrupted label. The training pool is divided
        into equally sized environments. Default ``(0.1, 0.2)``.
    colour2_flip_prob
        Probability that the second colour bit (TC-MNIST) disagrees with the
        corrupted label. Default 0.25.
    rotation_flip_prob
        Probability that the colour bit of a rotated digit (RC-MNIST) is
        flipped once more. Default 0.5.
    shift
        Test condition of the generated test sets. Default ``Shift.NONE``.
    seed
        Seed for all random draws.
    num_train
        Maximum number of digits in the training pool. Default 50 000.
    split_sizes
        Sizes of the adaptation training, validation, and test splits of a
        shifted test set. Default ``(500, 500, 9000)``.

    Raises
    ------
    ValueError
        When any of the above arguments is out of range.
    """

    label_flip_prob: float = 0.25
    colour_flip_probs: tuple[float, ...] = (0.1, 0.2)
    colour2_flip_prob: float = 0.25
    rotation_flip_prob: float = 0.5
    shift: Shift = Shift.NONE
    seed: int = 0
    num_train: int = 50_000
    split_sizes: tuple[int, int, int] = (500, 500, 9000)

    def __post_init__(self):
        # Configuration files give lists and strings; normalise those.
        self.colour_flip_probs = tuple(self.colour_flip_probs)
        self.split_sizes = tuple(self.split_sizes)  # type: ignore
        self.shift = Shift(self.shift)

        probs = (
            self.label_flip_prob,
            self.colour2_flip_prob,
            self.rotation_flip_prob,
            *self.colour_flip_probs,
        )

        if not all(0 <= prob <= 1 for prob in probs):
            raise ValueError("Expected all probabilities in [0, 1].")

        if len(self.colour_flip_probs) == 0:
            raise ValueError("Expected at least one training environment.")

        if self.num_train < 1:
            raise ValueError("Expected num_train >= 1.")

        if len(self.split_sizes) != 3 or min(self.split_sizes) < 1:
            raise ValueError("Expected three positive split sizes.")


@dataclass
class AdaptSplits:
    """
    The three parts of a shifted test set: one to fit adaptation classifiers
    on, one to select their hyperparameters with, and one to report on.
    """

    adapt_train: ColoredDataset
    adapt_val: ColoredDataset
    adapt_test: ColoredDataset


@dataclass
class DatasetStats:
    """
    Empirical agreement rates of each signal with the corrupted label, and
    the fraction of examples with label 1.
    """

    size: int
    digit_agreement: float
    colour_agreement: float
    colour2_agreement: float | None
    class_balance: float


def downsample(images: np.ndarray) -> np.ndarray:
    """
    Halves the side of square ``(N, side, side)`` images by 2x2 mean pooling.
    """
    num, rows, cols = images.shape

    if rows != cols or rows % 2 != 0:
        raise ValueError(f"Image shape {(rows, cols)} not understood.")

    half = rows // 2
    return images.reshape(num, half, 2, half, 2).mean(axis=(2, 4))


def rotate(images: np.ndarray) -> np.ndarray:
    """
    Rotates ``(N, side, side)`` images by 90 degrees counter-clockwise. This
    is an exact permutation of the pixel grid.
    """
    return np.rot90(images, k=1, axes=(1, 2))


def _flip(
    rng: np.random.Generator, bits: np.ndarray, prob: float | np.ndarray
) -> np.ndarray:
    return bits ^ (rng.random(len(bits)) < prob).astype(np.int64)


def _colourise(
    images: np.ndarray, colour: np.ndarray, colour2: np.ndarray | None
) -> np.ndarray:
    num, side, _ = images.shape
    num_channels = 2 if colour2 is None else 3

    inputs = np.zeros((num, num_channels, side, side))
    inputs[np.arange(num), colour] = images

    if colour2 is not None:
        inputs[:, 2] = colour2[:, None, None]

    return inputs.reshape(num, -1)


@dataclass
class _Draws:
    images: np.ndarray
    digit_group: np.ndarray
    labels: np.ndarray
    colour: np.ndarray
    env: np.ndarray


def _training_draws(raw: RawDigits, params: GeneratorParams) -> _Draws:
    if len(raw) == 0:
        raise ValueError("Empty raw digit set not understood.")

    if params.shift is not Shift.NONE:
        raise ValueError("Expected shift == none for training sets.")

    rng = np.random.default_rng([params.seed, STREAM_BASE])

    num = min(params.num_train, len(raw))
    pool = raw.subset(rng.permutation(len(raw))[:num])

    digit_group = (pool.digit_labels >= 5).astype(np.int64)
    labels = _flip(rng, digit_group, params.label_flip_prob)

    # Consecutive, equally sized blocks of the pool form the environments.
    num_envs = len(params.colour_flip_probs)
    env = np.arange(num) * num_envs // num
    env_probs = np.asarray(params.colour_flip_probs)[env]
    colour = _flip(rng, labels, env_probs)

    order = rng.permutation(num)
    return _Draws(
        images=downsample(pool.images)[order],
        digit_group=digit_group[order],
        labels=labels[order],
        colour=colour[order],
        env=env[order],
    )


def make_cmnist_train(
    raw: RawDigits, params: GeneratorParams
) -> ColoredDataset:
    """
    Generates the C-MNIST training set, in which the environments of the
    usual two-environment benchmark are merged into a single set.

    Parameters
    ----------
    raw
        Digits to build the training set from.
    params
        Generator parameters. The shift must be ``Shift.NONE``.

    Returns
    -------
    ColoredDataset
        The training set. The digit is in the channel given by the colour bit,
        and the other channel is all zeros.

    Raises
    ------
    ValueError
        When ``raw`` is empty, or the shift is not ``Shift.NONE``.
    """
    draws = _training_draws(raw, params)

    return ColoredDataset(
        inputs=_colourise(draws.images, draws.colour, None),
        labels=draws.labels,
        digit_group=draws.digit_group,
        clean_label=draws.digit_group,
        colour=draws.colour,
        variant=Variant.CMNIST,
        role=Role.TRAIN,
        seed=params.seed,
        env=draws.env,
    )


def make_rcmnist_train(
    raw: RawDigits, params: GeneratorParams
) -> ColoredDataset:
    """
    Generates the RC-MNIST training set. This is C-MNIST where a binary common
    cause, drawn uniformly for each example, both rotates the digit and
    perturbs the colour: when it is set, the digit is rotated by 90 degrees
    and the colour bit is flipped with probability ``rotation_flip_prob``.
    Examples without the common cause are identical to their C-MNIST
    counterparts.
    """
    draws = _training_draws(raw, params)

    rng = np.random.default_rng([params.seed, STREAM_COMMON_CAUSE])
    num = len(draws.labels)
    cause = (rng.random(num) < 0.5).astype(np.int64)
    perturb = (rng.random(num) < params.rotation_flip_prob).astype(np.int64)
    colour = draws.colour ^ (cause & perturb)

    images = draws.images.copy()
    images[cause == 1] = rotate(images[cause == 1])

    return ColoredDataset(
        inputs=_colourise(images, colour, None),
        labels=draws.labels,
        digit_group=draws.digit_group,
        clean_label=draws.digit_group,
        colour=colour,
        variant=Variant.RCMNIST,
        role=Role.TRAIN,
        seed=params.seed,
        common_cause=cause,
        env=draws.env,
    )


def make_tcmnist_train(
    raw: RawDigits, params: GeneratorParams
) -> ColoredDataset:
    """
    Generates the TC-MNIST training set. This is C-MNIST with a third input
    channel that is all ones when a second colour bit is set, and all zeros
    otherwise. The second colour bit disagrees with the corrupted label with
    probability ``colour2_flip_prob``.
    """
    draws = _training_draws(raw, params)

    rng = np.random.default_rng([params.seed, STREAM_COLOUR2])
    colour2 = _flip(rng, draws.labels, params.colour2_flip_prob)

    return ColoredDataset(
        inputs=_colourise(draws.images, draws.colour, colour2),
        labels=draws.labels,
        digit_group=draws.digit_group,
        clean_label=draws.digit_group,
        colour=draws.colour,
        variant=Variant.TCMNIST,
        role=Role.TRAIN,
        seed=params.seed,
        colour2=colour2,
        env=draws.env,
    )


TRAIN_GENERATORS = {
    Variant.CMNIST: make_cmnist_train,
    Variant.RCMNIST: make_rcmnist_train,
    Variant.TCMNIST: make_tcmnist_train,
}
"""
Training set generator for each benchmark.
"""


def make_train(
    raw: RawDigits, params: GeneratorParams, variant: Variant
) -> ColoredDataset:
    """
    Generates the training set of the given benchmark.
    """
    return TRAIN_GENERATORS[variant](raw, params)


def shifted_conditions(variant: Variant) -> list[Shift]:
    """
    Returns the shifted test conditions that apply to the given benchmark.
    The digit-only condition always applies; the second-colour-only condition
    applies to TC-MNIST.
    """
    if variant is Variant.TCMNIST:
        return [Shift.DIGIT_ONLY, Shift.COLOUR2_ONLY]

    return [Shift.DIGIT_ONLY]


def make_shifted_testset(
    raw: RawDigits, params: GeneratorParams, variant: Variant
) -> AdaptSplits:
    """
    Generates a test set in which only one of the predictive signals of the
    training distribution remains.

    Parameters
    ----------
    raw
        Held-out digits, for example the MNIST test split.
    params
        Generator parameters. The shift determines the test condition:

        * ``Shift.DIGIT_ONLY``: labels are constructed as in training, but all
          colour bits are drawn uniformly and independently of the label.
        * ``Shift.COLOUR2_ONLY`` (TC-MNIST only): the second colour bit is
          constructed from the label as in training, while the colour bit is
          uniform and the shown digit is drawn independently of the label.

        RC-MNIST test sets keep the common-cause rotation.
    variant
        Benchmark to generate a test set for.

    Returns
    -------
    AdaptSplits
        The test set, split into parts of ``params.split_sizes``.

    Raises
    ------
    ValueError
        When the shift is ``Shift.NONE`` or does not apply to the benchmark,
        or when ``raw`` has fewer digits than the splits need.
    """
    if params.shift not in shifted_conditions(variant):
        msg = f"Shift {params.shift.value} for {variant.value} not understood."
        raise ValueError(msg)

    total = sum(params.split_sizes)
    if len(raw) < total:
        msg = f"Expected at least {total} raw test digits, got {len(raw)}."
        raise ValueError(msg)

    rng = np.random.default_rng([params.seed, STREAM_SHIFT])
    pool = raw.subset(rng.permutation(len(raw))[:total])
    images = downsample(pool.images)

    clean_label = (pool.digit_labels >= 5).astype(np.int64)
    labels = _flip(rng, clean_label, params.label_flip_prob)
    colour = rng.integers(0, 2, size=total)
    digit_group = clean_label

    colour2 = None
    if variant is Variant.TCMNIST:
        if params.shift is Shift.COLOUR2_ONLY:
            colour2 = _flip(rng, labels, params.colour2_flip_prob)

            # Show an unrelated digit, so the image carries no signal.
            shown = rng.permutation(total)
            images = images[shown]
            digit_group = clean_label[shown]
        else:
            colour2 = rng.integers(0, 2, size=total)

    common_cause = None
    if variant is Variant.RCMNIST:
        common_cause = rng.integers(0, 2, size=total)
        images[common_cause == 1] = rotate(images[common_cause == 1])

    data = ColoredDataset(
        inputs=_colourise(images, colour, colour2),
        labels=labels,
        digit_group=digit_group,
        clean_label=clean_label,
        colour=colour,
        variant=variant,
        role=Role.ADAPT_TEST,
        seed=params.seed,
        shift=params.shift,
        colour2=colour2,
        common_cause=common_cause,
    )

    num_train, num_val, _ = params.split_sizes
    return AdaptSplits(
        adapt_train=data.subset(slice(0, num_train), Role.ADAPT_TRAIN),
        adapt_val=data.subset(
            slice(num_train, num_train + num_val), Role.ADAPT_VAL
        ),
        adapt_test=data.subset(
            slice(num_train + num_val, total), Role.ADAPT_TEST
        ),
    )


def dataset_stats(data: ColoredDataset) -> DatasetStats:
    """
    Computes the empirical agreement of the digit group, colour bit, and (if
    present) second colour bit with the corrupted label, together with the
    fraction of examples labelled 1.
    """
    if len(data) == 0:
        nan = float("nan")
        colour2 = None if data.colour2 is None else nan
        return DatasetStats(0, nan, nan, colour2, nan)

    def agreement(bits: np.ndarray) -> float:
        return float(np.mean(bits == data.labels))

    colour2 = data.colour2
    return DatasetStats(
        size=len(data),
        digit_agreement=agreement(data.digit_group),
        colour_agreement=agreement(data.colour),
        colour2_agreement=None if colour2 is None else agreement(colour2),
        class_balance=float(np.mean(data.labels)),
    )
