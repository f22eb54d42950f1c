from .DiscreteJoint import DiscreteJoint as DiscreteJoint
from .DiscreteJoint import (
    conditional_joints_from_samples as conditional_joints_from_samples,
)
from .estimators import EstimatorBatch as EstimatorBatch
from .estimators import PermutationPlan as PermutationPlan
from .estimators import (
    conditional_tc_nce_estimate as conditional_tc_nce_estimate,
)
from .estimators import critic_loss_for_max as critic_loss_for_max
from .estimators import fit_critic as fit_critic
from .estimators import grouped_tc_nce as grouped_tc_nce
from .estimators import infonce as infonce
from .estimators import infonce_estimate as infonce_estimate
from .estimators import infonce_scores as infonce_scores
from .estimators import label_groups as label_groups
from .estimators import tc_nce as tc_nce
from .estimators import tc_nce_estimate as tc_nce_estimate
from .oracles import (
    discrete_conditional_tc_oracle as discrete_conditional_tc_oracle,
)
from .oracles import discrete_tc_oracle as discrete_tc_oracle
from .oracles import gaussian_mi_oracle as gaussian_mi_oracle
