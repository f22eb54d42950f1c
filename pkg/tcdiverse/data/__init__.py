from .ColoredDataset import ColoredDataset as ColoredDataset
from .ColoredDataset import ColoredExample as ColoredExample
from .ColoredDataset import Role as Role
from .ColoredDataset import Shift as Shift
from .ColoredDataset import Variant as Variant
from .cache import DatasetBundle as DatasetBundle
from .cache import generate_bundle as generate_bundle
from .cache import load_or_generate as load_or_generate
from .generate import AdaptSplits as AdaptSplits
from .generate import DatasetStats as DatasetStats
from .generate import GeneratorParams as GeneratorParams
from .generate import dataset_stats as dataset_stats
from .generate import make_cmnist_train as make_cmnist_train
from .generate import make_rcmnist_train as make_rcmnist_train
from .generate import make_shifted_testset as make_shifted_testset
from .generate import make_tcmnist_train as make_tcmnist_train
from .generate import make_train as make_train
from .generate import shifted_conditions as shifted_conditions
from .idx import RawDigits as RawDigits
from .idx import mnist_files as mnist_files
from .idx import parse_idx as parse_idx
from .idx import read_idx as read_idx
from .idx import read_mnist as read_mnist
