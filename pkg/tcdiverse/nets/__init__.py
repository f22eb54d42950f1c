from .Critic import Critic as Critic
from .LinearClassifier import LinearClassifier as LinearClassifier
from .ModelCollection import Member as Member
from .ModelCollection import ModelCollection as ModelCollection
from .ModelCollection import init_collection as init_collection
from .ModelCollection import init_critic as init_critic
from .ModelCollection import init_member as init_member
from .NetParams import NetParams as NetParams
from .Parameters import Parameters as Parameters
from .Parameters import mlp_parameters as mlp_parameters
from .RepresentationModel import RepresentationModel as RepresentationModel
from .RmsProp import RmsProp as RmsProp
from .RmsProp import RmsPropParams as RmsPropParams
from .checkpoint import Checkpoint as Checkpoint
from .checkpoint import load_checkpoint as load_checkpoint
from .checkpoint import save_checkpoint as save_checkpoint
