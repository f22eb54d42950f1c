from collections.abc import Mapping
from dataclasses import dataclass

import numpy as np

from tcdiverse.nets.Parameters import Parameters


@dataclass
class RmsPropParams:
    """
    Parameters for the RMSProp optimiser, which does not use momentum.

    Parameters
    ----------
    lr
        Learning rate. Default 1e-5.
    decay
        Decay of the running mean of squared gradients. Default 0.9.
    eps
        Added to the running mean before taking its square root. Default
        1e-8.

    Raises
    ------
    ValueError
        When ``lr`` or ``eps`` is not positive, or ``decay`` is not in
        [0, 1).
    """

    lr: float = 1e-5
    decay: float = 0.9
    eps: float = 1e-8

    def __post_init__(self):
        if self.lr <= 0:
            raise ValueError("Expected lr > 0.")

        if not 0 <= self.decay < 1:
            raise ValueError("Expected decay in [0, 1).")

        if self.eps <= 0:
            raise ValueError("Expected eps > 0.")


class RmsProp:
    """
    RMSProp optimiser state for one group of parameters. Every call to
    :meth:`step` updates the running means of squared gradients as

    .. math::

       a \\leftarrow d a + (1 - d) g^2,

    and returns parameters :math:`p - \\eta g / \\sqrt{a + \\epsilon}`.

    Parameters
    ----------
    params
        Parameters whose shapes the state mirrors.
    rms_params
        Optimiser parameters.
    """

    def __init__(
        self, params: Parameters, rms_params: RmsPropParams = RmsPropParams()
    ):
        self._params = rms_params
        self._acc = {name: np.zeros_like(arr) for name, arr in params.items()}
        self.num_steps = 0

    @property
    def accumulators(self) -> Mapping[str, np.ndarray]:
        return self._acc

    def step(
        self, params: Parameters, grads: Mapping[str, np.ndarray]
    ) -> Parameters:
        """
        Performs a single update.

        Parameters
        ----------
        params
            Current parameters.
        grads
            Gradients of the objective, one for each parameter.

        Returns
        -------
        Parameters
            Updated parameters. The given parameters are left untouched.

        Raises
        ------
        ValueError
            When the names or shapes of the parameters, gradients, and state
            do not agree.
        """
        if set(params) != set(self._acc) or set(grads) != set(self._acc):
            raise ValueError("Parameter and gradient names do not agree.")

        for name, value in params.items():
            shapes = {value.shape, grads[name].shape, self._acc[name].shape}

            if len(shapes) != 1:
                msg = f"Shapes of {name} do not agree: {sorted(shapes)}."
                raise ValueError(msg)

        lr, decay, eps = self._params.lr, self._params.decay, self._params.eps
        updated = {}

        for name, value in params.items():
            grad = grads[name]
            acc = decay * self._acc[name] + (1 - decay) * grad**2
            self._acc[name] = acc
            updated[name] = value - lr * grad / np.sqrt(acc + eps)

        self.num_steps += 1
        return Parameters(updated)
