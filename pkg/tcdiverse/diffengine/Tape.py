from __future__ import annotations

from collections.abc import Callable, Iterator, Mapping
from dataclasses import dataclass, field

import numpy as np

Tensor = np.ndarray
"""
Dense float64 array in row-major order. All numeric values in the package are
tensors of this type.
"""

BackwardRule = Callable[[Tensor], tuple[Tensor, ...]]


@dataclass(eq=False)
class Node:
    """
    A single recorded value on a :class:`Tape`.

    Nodes are created by :meth:`Tape.leaf`, :meth:`Tape.constant`, and the
    operations in :mod:`tcdiverse.diffengine.ops`; they should not be created
    directly.

    Attributes
    ----------
    tape
        Tape this node is recorded on.
    index
        Position of this node on the tape.
    kind
        Operation kind that produced this node, or ``"leaf"``/``"constant"``.
    inputs
        Indices of the input nodes.
    value
        The (read-only) output tensor.
    requires_grad
        Whether a gradient flows back through this node.
    trainable
        Whether this node is a trainable leaf.
    """

    tape: Tape
    index: int
    kind: str
    inputs: tuple[int, ...]
    value: Tensor
    requires_grad: bool
    trainable: bool = False
    rule: BackwardRule | None = field(default=None, repr=False)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.value.shape

    def item(self) -> float:
        """
        Returns the value of a single-element node as a float.
        """
        return float(self.value.item())


class GradientMap(Mapping[int, Tensor]):
    """
    Read-only mapping from trainable leaf index to the gradient of the seed
    with respect to that leaf. Gradients have the same shape as their leaf.
    """

    def __init__(self, grads: dict[int, Tensor]):
        self._grads = grads

    def __getitem__(self, key: int | Node) -> Tensor:
        if isinstance(key, Node):
            key = key.index

        return self._grads[key]

    def __iter__(self) -> Iterator[int]:
        return iter(self._grads)

    def __len__(self) -> int:
        return len(self._grads)

    def named(self, leaves: Mapping[str, Node]) -> dict[str, Tensor]:
        """
        Returns the gradients of the given named leaves. Leaves that the seed
        does not depend on receive an all-zero gradient.
        """
        return {
            name: self._grads.get(node.index, np.zeros_like(node.value))
            for name, node in leaves.items()
        }


class Tape:
    """
    Records a computation as an ordered sequence of nodes, so that gradients
    can be obtained with :meth:`backward`. Every node's inputs precede it on
    the tape.
    """

    def __init__(self):
        self._nodes: list[Node] = []

    def __len__(self) -> int:
        return len(self._nodes)

    def __getitem__(self, idx: int) -> Node:
        return self._nodes[idx]

    def leaf(self, value: Tensor) -> Node:
        """
        Records a trainable leaf holding the given value.
        """
        value = np.array(value, dtype=np.float64)
        return self._add("leaf", (), value, None, trainable=True)

    def constant(self, value: Tensor) -> Node:
        """
        Records a non-trainable input. No gradients flow into constants.
        """
        value = np.array(value, dtype=np.float64)
        return self._add("constant", (), value, None, trainable=False)

    def record(
        self,
        kind: str,
        inputs: tuple[Node, ...],
        value: Tensor,
        rule: BackwardRule,
    ) -> Node:
        """
        Records the output of an operation.

        Parameters
        ----------
        kind
            Operation kind.
        inputs
            Input nodes, all of which must live on this tape.
        value
            Output tensor.
        rule
            Maps the gradient of the output to a tuple of gradients, one for
            each input (in order).

        Returns
        -------
        Node
            The newly recorded node.
        """
        if any(node.tape is not self for node in inputs):
            raise ValueError(f"{kind}: inputs live on different tapes.")

        indices = tuple(node.index for node in inputs)
        return self._add(kind, indices, np.asarray(value, np.float64), rule)

    def _add(
        self,
        kind: str,
        inputs: tuple[int, ...],
        value: Tensor,
        rule: BackwardRule | None,
        trainable: bool = False,
    ) -> Node:
        value.flags.writeable = False

        requires_grad = trainable or any(
            self._nodes[idx].requires_grad for idx in inputs
        )

        node = Node(
            tape=self,
            index=len(self._nodes),
            kind=kind,
            inputs=inputs,
            value=value,
            requires_grad=requires_grad,
            trainable=trainable,
            rule=rule if requires_grad else None,
        )

        self._nodes.append(node)
        return node

    def backward(self, seed: Node) -> GradientMap:
        """
        Computes the gradient of the given scalar seed node with respect to
        every trainable leaf it depends on. Gradients of nodes used more than
        once are summed.

        Parameters
        ----------
        seed
            Scalar node to differentiate.

        Returns
        -------
        GradientMap
            Gradients keyed by leaf index.

        Raises
        ------
        ValueError
            When the seed is not a scalar, or lives on another tape.
        """
        if seed.tape is not self:
            raise ValueError("Seed node lives on a different tape.")

        if seed.value.shape != ():
            raise ValueError(f"Expected a scalar seed, got {seed.shape}.")

        grads: dict[int, Tensor] = {}
        leaves: dict[int, Tensor] = {}

        if seed.requires_grad:
            grads[seed.index] = np.ones(())

        # Nodes are topologically ordered, so a single reverse sweep visits
        # every node after all of its consumers.
        for idx in range(seed.index, -1, -1):
            if idx not in grads:
                continue

            node = self._nodes[idx]
            grad = grads.pop(idx)

            if node.trainable:
                leaves[idx] = np.array(grad, dtype=np.float64)
                continue

            assert node.rule is not None
            in_grads = node.rule(grad)

            for in_idx, in_grad in zip(node.inputs, in_grads):
                if not self._nodes[in_idx].requires_grad:
                    continue

                if in_idx in grads:
                    grads[in_idx] = grads[in_idx] + in_grad
                else:
                    grads[in_idx] = in_grad

        return GradientMap(leaves)
