from .EvalReport import EvalReport as EvalReport
from .EvalReport import read_reports as read_reports
from .EvalReport import write_reports as write_reports
from .FrozenOutputs import FrozenOutputs as FrozenOutputs
from .FrozenOutputs import compute_frozen_outputs as compute_frozen_outputs
from .LogisticRegression import LogRegModel as LogRegModel
from .LogisticRegression import fit_logreg as fit_logreg
from .LogisticRegression import select_logreg as select_logreg
from .protocols import PROTOCOLS as PROTOCOLS
from .protocols import FrozenSplits as FrozenSplits
from .protocols import ProtocolResult as ProtocolResult
from .protocols import evaluate_checkpoint as evaluate_checkpoint
from .protocols import protocol_best as protocol_best
from .protocols import protocol_ensemble as protocol_ensemble
from .protocols import protocol_linear as protocol_linear
from .protocols import run_protocols as run_protocols
