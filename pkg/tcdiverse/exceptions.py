class DegenerateBatchWarning(UserWarning):
    """
    Raised when a minibatch has no label group with at least two members, so
    the conditional total correlation estimator cannot be evaluated on it. The
    affected critic step is skipped, and the affected model step only trains
    on the classification terms.
    """


class CacheMismatchWarning(UserWarning):
    """
    Raised when a cached dataset file cannot be used, for example because it
    was written by an incompatible format version. The dataset is regenerated.
    """


class ShapeError(ValueError):
    """
    Raised when the inputs of a differentiable operation have shapes that do
    not conform to the operation's contract.
    """


class IdxFormatError(ValueError):
    """
    Raised when bytes do not form a valid IDX file.

    Parameters
    ----------
    msg
        Description of the problem.
    offset
        Byte offset at which the problem was detected.
    """

    def __init__(self, msg: str, offset: int):
        super().__init__(f"{msg} (at byte offset {offset}).")
        self.offset = offset


class NonFiniteLossError(ArithmeticError):
    """
    Raised when training produces a NaN or infinite loss. The ``record``
    attribute holds the diagnostic values of the offending step.
    """

    def __init__(self, msg: str, record: dict):
        super().__init__(msg)
        self.record = record
