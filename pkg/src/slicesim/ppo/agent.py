"""Factorized Bernoulli policy, advantage estimation and the clipped update.

The policy net maps an observation to one acceptance logit per request slot;
the action is an independent Bernoulli draw per unmasked slot. The update
optimizes the clipped surrogate min(ratio*A, clip(ratio)*A) plus a value
squared-error term and an entropy bonus, with gradients derived by hand:

  d log pi / d logit_i = a_i - p_i          (unmasked slots)
  d surrogate / d ratio = A when ratio*A is the active min branch, else 0
  d entropy / d logit_i = -logit_i * p_i * (1 - p_i)
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..config import PpoConfig
from .nets import Mlp, log_sigmoid, make_optimizer, sigmoid
from .obs import ObsLayout


@dataclass
class PolicyState:
    """Policy/value parameters, optimizer state and hyperparameters."""

    cfg: PpoConfig
    layout: ObsLayout
    policy: Mlp
    value: Mlp
    policy_opt: object
    value_opt: object
    rng: np.random.Generator

    @classmethod
    def create(cls, cfg: PpoConfig, layout: ObsLayout) -> "PolicyState":
        rng = np.random.default_rng(cfg.seed)
        hidden = list(cfg.hidden_sizes())
        policy = Mlp([layout.dim, *hidden, layout.queue_slots], rng)
        value = Mlp([layout.dim, *hidden, 1], rng)
        return cls(
            cfg=cfg,
            layout=layout,
            policy=policy,
            value=value,
            policy_opt=make_optimizer(cfg.optimizer, policy, cfg.learning_rate),
            value_opt=make_optimizer(cfg.optimizer, value, cfg.learning_rate),
            rng=rng,
        )


def policy_forward(policy: Mlp, obs: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Per-slot acceptance probabilities; masked slots are forced to 0."""
    obs = np.asarray(obs, dtype=float)
    single = obs.ndim == 1
    logits = policy.forward(obs)
    probs = sigmoid(logits)
    probs = np.where(np.atleast_2d(np.asarray(mask, dtype=bool)), probs, 0.0)
    return probs[0] if single else probs


def sample_action(probs: np.ndarray, rng: np.random.Generator) -> tuple[np.ndarray, float]:
    """Independent Bernoulli draw per slot; returns (accept mask, joint log-prob).

    Slots with probability exactly 0 (masked) are never accepted and
    contribute log(1) = 0.
    """
    probs = np.asarray(probs, dtype=float)
    draws = rng.random(probs.shape)
    accept = draws < probs
    logp = action_log_prob(probs, accept)
    return accept, logp


def action_log_prob(probs: np.ndarray, accept: np.ndarray) -> float:
    probs = np.asarray(probs, dtype=float)
    accept = np.asarray(accept, dtype=bool)
    logp = 0.0
    for p, a in zip(probs, accept):
        if p <= 0.0:
            if a:
                return -np.inf
            continue  # masked / impossible slot contributes log(1)
        logp += np.log(p) if a else np.log1p(-p)
    return float(logp)


def estimate_advantages(
    rewards: np.ndarray,
    values: np.ndarray,
    dones: np.ndarray,
    bootstrap_value: float,
    gamma: float,
    gae_lambda: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Generalized advantage estimates and return targets.

    With gae_lambda = 1 this reduces to discounted-return-minus-baseline.
    The bootstrap value is used past the final step unless it is terminal.
    """
    rewards = np.asarray(rewards, dtype=float)
    values = np.asarray(values, dtype=float)
    dones = np.asarray(dones, dtype=bool)
    n = len(rewards)
    adv = np.zeros(n)
    next_value = bootstrap_value
    running = 0.0
    for t in range(n - 1, -1, -1):
        cont = 0.0 if dones[t] else 1.0
        delta = rewards[t] + gamma * next_value * cont - values[t]
        running = delta + gamma * gae_lambda * cont * running
        adv[t] = running
        next_value = values[t]
    returns = adv + values
    return adv, returns


@dataclass
class TrajectoryBatch:
    """Rollout records flattened into arrays for the update."""

    obs: np.ndarray  # (N, dim)
    actions: np.ndarray  # (N, M) bool
    masks: np.ndarray  # (N, M) bool
    log_probs: np.ndarray  # (N,) behavior-policy log-probabilities
    rewards: np.ndarray  # (N,)
    values: np.ndarray  # (N,)
    dones: np.ndarray  # (N,) bool
    bootstrap_value: float = 0.0
    advantages: np.ndarray = field(default=None)
    returns: np.ndarray = field(default=None)

    def __len__(self) -> int:
        return len(self.rewards)

    def compute_targets(self, gamma: float, gae_lambda: float) -> None:
        self.advantages, self.returns = estimate_advantages(
            self.rewards, self.values, self.dones, self.bootstrap_value, gamma, gae_lambda
        )


def ppo_loss_and_grads(policy: Mlp, value: Mlp, batch: dict, cfg: PpoConfig):
    """Total loss, its analytic parameter gradients and diagnostics.

    batch keys: obs (B,D), actions (B,M), masks (B,M), old_log_probs (B,),
    advantages (B,), returns (B,).
    """
    obs = batch["obs"]
    actions = batch["actions"].astype(float)
    masks = batch["masks"]
    old_logp = batch["old_log_probs"]
    adv = batch["advantages"]
    rets = batch["returns"]
    B = obs.shape[0]

    logits = policy.forward(obs)
    probs = sigmoid(logits)
    # per-slot log terms; masked slots contribute 0
    log_p = log_sigmoid(logits)
    log_1mp = log_sigmoid(-logits)
    per_slot = np.where(masks, actions * log_p + (1.0 - actions) * log_1mp, 0.0)
    new_logp = per_slot.sum(axis=1)

    ratio = np.exp(new_logp - old_logp)
    clipped = np.clip(ratio, 1.0 - cfg.clip, 1.0 + cfg.clip)
    s1 = ratio * adv
    s2 = clipped * adv
    surrogate = np.minimum(s1, s2)
    policy_loss = -surrogate.mean()

    pq = probs * (1.0 - probs)
    entropy_per_slot = np.where(masks, -(probs * log_p + (1.0 - probs) * log_1mp), 0.0)
    entropy = entropy_per_slot.sum(axis=1)
    entropy_loss = -cfg.entropy_coef * entropy.mean()

    v_out = value.forward(obs)
    v = v_out[:, 0]
    value_loss = cfg.value_coef * float(((v - rets) ** 2).mean())

    total = float(policy_loss + entropy_loss + value_loss)

    # gradient wrt the policy logits
    dsurr_dratio = np.where(s1 <= s2, adv, 0.0)
    dlogp = -(1.0 / B) * dsurr_dratio * ratio  # d policy_loss / d new_logp
    dz = dlogp[:, None] * np.where(masks, actions - probs, 0.0)
    # entropy: dH/dz = -z * p * (1 - p); loss term is -coef * mean(H)
    dz += (cfg.entropy_coef / B) * np.where(masks, logits * pq, 0.0)
    policy_grads = policy.backward(dz)

    dv = (2.0 * cfg.value_coef / B) * (v - rets)
    value_grads = value.backward(dv[:, None])

    diagnostics = {
        "loss": total,
        "policy_loss": float(policy_loss),
        "value_loss": float(value_loss),
        "entropy": float(entropy.mean()),
        "mean_ratio": float(ratio.mean()),
        "clip_fraction": float(((ratio < 1.0 - cfg.clip) | (ratio > 1.0 + cfg.clip)).mean()),
    }
    return total, policy_grads, value_grads, diagnostics


def _grads_finite(grads) -> bool:
    return all(np.isfinite(dw).all() and np.isfinite(db).all() for dw, db in grads)


def ppo_update(policy_state: PolicyState, batch: TrajectoryBatch) -> dict:
    """Run e epochs of minibatch updates on the clipped surrogate objective.

    Advantages are normalized once per batch. Minibatches with non-finite
    gradients are skipped and counted in the diagnostics.
    """
    cfg = policy_state.cfg
    if len(batch) == 0:
        raise ValueError("empty trajectory batch")
    if batch.advantages is None:
        batch.compute_targets(cfg.gamma, cfg.gae_lambda)
    adv = batch.advantages
    std = adv.std()
    # a degenerate (constant) advantage batch would be zeroed by centering,
    # losing the gradient sign; normalize only when there is spread
    norm_adv = (adv - adv.mean()) / (std + 1e-8) if std > 1e-12 else adv

    n = len(batch)
    stats: list[dict] = []
    skipped = 0
    for _ in range(cfg.epochs):
        order = policy_state.rng.permutation(n)
        for start in range(0, n, cfg.minibatch):
            idx = order[start : start + cfg.minibatch]
            sub = {
                "obs": batch.obs[idx],
                "actions": batch.actions[idx],
                "masks": batch.masks[idx],
                "old_log_probs": batch.log_probs[idx],
                "advantages": norm_adv[idx],
                "returns": batch.returns[idx],
            }
            _, pgrads, vgrads, diag = ppo_loss_and_grads(
                policy_state.policy, policy_state.value, sub, cfg
            )
            if not (_grads_finite(pgrads) and _grads_finite(vgrads)):
                skipped += 1
                continue
            policy_state.policy_opt.step(pgrads)
            policy_state.value_opt.step(vgrads)
            stats.append(diag)

    out = {"updates": len(stats), "skipped_minibatches": skipped}
    if stats:
        for key in ("loss", "policy_loss", "value_loss", "entropy", "mean_ratio", "clip_fraction"):
            out[key] = float(np.mean([s[key] for s in stats]))
    return out
