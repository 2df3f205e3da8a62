"""Low-rank PARAFAC value functions for finite-horizon MDPs."""

from .agent import FHTLRAgent
from .exact import ExplicitDynamics, backward_induction, policy_value
from .mdp import EpsilonSchedule, StateActionSpace, Transition, run_episode
from .parafac import ParafacModel, count_params
from .tabular import FHQAgent, QAgent, StepSizeSchedule

__version__ = "0.1.0"
