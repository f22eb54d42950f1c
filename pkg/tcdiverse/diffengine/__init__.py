from . import ops as ops
from .Tape import GradientMap as GradientMap
from .Tape import Node as Node
from .Tape import Tape as Tape
from .Tape import Tensor as Tensor
from .grad_check import grad_check as grad_check
from .grad_check import numerical_gradient as numerical_gradient
