from .DiversityTrainer import DiversityTrainer as DiversityTrainer
from .DiversityTrainer import StepMetrics as StepMetrics
from .DiversityTrainer import TrainParams as TrainParams
from .DiversityTrainer import TrainState as TrainState
from .ProgressPrinter import ProgressPrinter as ProgressPrinter
from .Result import TrainResult as TrainResult
from .Statistics import EpochRecord as EpochRecord
from .Statistics import Statistics as Statistics
from .experiment import ExperimentParams as ExperimentParams
from .experiment import Method as Method
from .experiment import ResultsTable as ResultsTable
from .experiment import aggregate_runs as aggregate_runs
from .experiment import emit_reports as emit_reports
from .experiment import run_experiment as run_experiment
from .show_versions import show_versions as show_versions
from .train import checkpoint_select as checkpoint_select
from .train import train_collection as train_collection
from .train import train_erm_baseline as train_erm_baseline
