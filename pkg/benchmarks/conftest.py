import pytest

from tcdiverse import DiversityTrainer, TrainParams
from tcdiverse.data import Variant
from tests.helpers import make_dataset


@pytest.fixture(scope="session")
def cmnist():
    """
    C-MNIST training set of 28x28 random digits, at the full input dimension.
    """
    return make_dataset(512, Variant.CMNIST, seed=0, side=28)


@pytest.fixture
def trainer():
    return DiversityTrainer(TrainParams(num_models=2, seed=0))
