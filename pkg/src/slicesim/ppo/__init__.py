from .agent import (
    PolicyState,
    TrajectoryBatch,
    action_log_prob,
    estimate_advantages,
    policy_forward,
    ppo_loss_and_grads,
    ppo_update,
    sample_action,
)
from .env import PpoSolver, SliceEnv, apply_action, compute_reward, make_toy_env
from .nets import Adam, Mlp, Sgd, log_sigmoid, sigmoid
from .obs import ObsLayout, action_mask, encode_observation, observed_requests
from .train import collect_rollout, load_checkpoint, save_checkpoint, train

__all__ = [
    "PolicyState",
    "TrajectoryBatch",
    "action_log_prob",
    "estimate_advantages",
    "policy_forward",
    "ppo_loss_and_grads",
    "ppo_update",
    "sample_action",
    "PpoSolver",
    "SliceEnv",
    "apply_action",
    "compute_reward",
    "make_toy_env",
    "Adam",
    "Mlp",
    "Sgd",
    "log_sigmoid",
    "sigmoid",
    "ObsLayout",
    "action_mask",
    "encode_observation",
    "observed_requests",
    "collect_rollout",
    "load_checkpoint",
    "save_checkpoint",
    "train",
]
