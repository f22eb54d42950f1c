"""
Exact values of information quantities, used to check the variational
estimators. All values are in nats.
"""

from collections.abc import Sequence

import numpy as np

from tcdiverse.tcest.DiscreteJoint import DiscreteJoint


def discrete_tc_oracle(joint: DiscreteJoint | np.ndarray) -> float:
    """
    Total correlation of a discrete joint distribution: the KL divergence
    between the joint distribution and the product of its marginals,
    computed by enumerating all cells.

    Raises
    ------
    ValueError
        When the given table is not normalised.
    """
    if not isinstance(joint, DiscreteJoint):
        joint = DiscreteJoint(joint)

    table = joint.table
    product = joint.product_of_marginals()

    # Cells with zero joint probability do not contribute. Cells with positive
    # joint probability always have positive marginals.
    support = table > 0
    ratio = table[support] / product[support]
    return max(float(np.sum(table[support] * np.log(ratio))), 0.0)


def discrete_conditional_tc_oracle(
    joints: Sequence[DiscreteJoint | np.ndarray], label_marginal: np.ndarray
) -> float:
    """
    Conditional total correlation: the expectation over the label of the
    total correlation of the label-conditional joint distributions.

    Parameters
    ----------
    joints
        One conditional joint distribution per label value.
    label_marginal
        Probability of each label value.

    Raises
    ------
    ValueError
        When the label distribution does not match the joint distributions, or
        any distribution is not normalised.
    """
    label_marginal = np.asarray(label_marginal, dtype=np.float64)

    if len(joints) != len(label_marginal):
        raise ValueError("Expected one joint distribution per label value.")

    if np.any(label_marginal < 0) or abs(label_marginal.sum() - 1) > 1e-12:
        raise ValueError("Expected a normalised label distribution.")

    return float(
        sum(
            prob * discrete_tc_oracle(joint)
            for prob, joint in zip(label_marginal, joints)
        )
    )


def gaussian_mi_oracle(rho: float) -> float:
    """
    Mutual information between the two coordinates of a bivariate normal
    distribution with correlation ``rho``: :math:`-\\frac{1}{2} \\ln(1 -
    \\rho^2)`.

    Raises
    ------
    ValueError
        When ``|rho| >= 1``.
    """
    if not abs(rho) < 1:
        raise ValueError("Expected |rho| < 1.")

    return -0.5 * float(np.log1p(-(rho**2)))
