from dataclasses import dataclass


@dataclass
class NetParams:
    """
    Architecture of the representation models and the critic.

    Parameters
    ----------
    hidden_sizes
        Hidden layer sizes of each representation model. Default (128, 64).
    repr_dim
        Output dimension of each representation model. Default 32.
    critic_hidden_sizes
        Hidden layer sizes of the critic. Default (256, 256).
    critic_slope
        Negative slope of the critic's leaky rectifiers. Default 0.2.
    normalize_critic_inputs
        Whether every representation is scaled to unit norm before it is
        passed to the critic. Default ``True``.

    Raises
    ------
    ValueError
        When a size is not positive, or the slope is negative.
    """

    hidden_sizes: tuple[int, ...] = (128, 64)
    repr_dim: int = 32
    critic_hidden_sizes: tuple[int, ...] = (256, 256)
    critic_slope: float = 0.2
    normalize_critic_inputs: bool = True

    def __post_init__(self):
        self.hidden_sizes = tuple(self.hidden_sizes)
        self.critic_hidden_sizes = tuple(self.critic_hidden_sizes)

        if any(size < 1 for size in self.hidden_sizes):
            raise ValueError("Expected positive hidden_sizes.")

        if any(size < 1 for size in self.critic_hidden_sizes):
            raise ValueError("Expected positive critic_hidden_sizes.")

        if self.repr_dim < 1:
            raise ValueError("Expected repr_dim >= 1.")

        if self.critic_slope < 0:
            raise ValueError("Negative critic_slope not understood.")
