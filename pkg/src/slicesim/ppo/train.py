"""Rollout collection, the training loop and checkpoint I/O."""

from __future__ import annotations

import numpy as np

from ..config import PpoConfig
from .agent import PolicyState, TrajectoryBatch, policy_forward, ppo_update, sample_action
from .env import SliceEnv
from .nets import make_optimizer
from .obs import ObsLayout

CKPT_MAGIC = "ppo-ckpt"
CKPT_VERSION = "v1"


def _episode_seed(base_seed: int, episode: int) -> int:
    return int(np.random.SeedSequence((base_seed, episode)).generate_state(1)[0])


def collect_rollout(
    env: SliceEnv,
    policy_state: PolicyState,
    steps: int,
    rng: np.random.Generator,
    obs: np.ndarray,
    episode: int,
    base_seed: int,
) -> tuple[TrajectoryBatch, np.ndarray, int]:
    """Gather ``steps`` transitions, resetting the env at episode boundaries."""
    dim = env.layout.dim
    M = env.layout.queue_slots
    obs_buf = np.zeros((steps, dim))
    act_buf = np.zeros((steps, M), dtype=bool)
    mask_buf = np.zeros((steps, M), dtype=bool)
    logp_buf = np.zeros(steps)
    rew_buf = np.zeros(steps)
    val_buf = np.zeros(steps)
    done_buf = np.zeros(steps, dtype=bool)

    for t in range(steps):
        mask = env.mask()
        probs = policy_forward(policy_state.policy, obs, mask)
        accept, logp = sample_action(probs, rng)
        value = float(policy_state.value.forward(obs)[0, 0])
        next_obs, reward, done, _ = env.step(accept)
        obs_buf[t] = obs
        act_buf[t] = accept
        mask_buf[t] = mask
        logp_buf[t] = logp
        rew_buf[t] = reward
        val_buf[t] = value
        done_buf[t] = done
        if done:
            episode += 1
            next_obs = env.reset(_episode_seed(base_seed, episode))
        obs = next_obs

    bootstrap = 0.0 if done_buf[-1] else float(policy_state.value.forward(obs)[0, 0])
    batch = TrajectoryBatch(
        obs=obs_buf,
        actions=act_buf,
        masks=mask_buf,
        log_probs=logp_buf,
        rewards=rew_buf,
        values=val_buf,
        dones=done_buf,
        bootstrap_value=bootstrap,
    )
    return batch, obs, episode


def train(
    env: SliceEnv,
    policy_state: PolicyState,
    iters: int | None = None,
    rollout: int | None = None,
    seed: int | None = None,
    progress=None,
) -> list[dict]:
    """Repeat collect -> advantage -> update; returns the training curve.

    Deterministic for fixed seeds: action sampling, minibatch shuffling and
    episode arrival seeds all derive from ``seed``.
    """
    cfg = policy_state.cfg
    iters = cfg.iters if iters is None else iters
    rollout = cfg.rollout if rollout is None else rollout
    seed = cfg.seed if seed is None else seed

    action_rng = np.random.default_rng((seed, 1))
    episode = 0
    obs = env.reset(_episode_seed(seed, episode))
    curve: list[dict] = []
    for k in range(iters):
        batch, obs, episode = collect_rollout(
            env, policy_state, rollout, action_rng, obs, episode, seed
        )
        batch.compute_targets(cfg.gamma, cfg.gae_lambda)
        diag = ppo_update(policy_state, batch)
        entry = {
            "iter": k,
            "mean_reward": float(batch.rewards.mean()),
            **{key: val for key, val in diag.items()},
        }
        curve.append(entry)
        if progress:
            progress(entry)
    return curve


def save_checkpoint(policy_state: PolicyState, path: str) -> None:
    """Text layout: header then one tensor block per parameter array."""
    layout = policy_state.layout
    with open(path, "w") as fh:
        fh.write(f"{CKPT_MAGIC} {CKPT_VERSION} {layout.dim} {layout.queue_slots}\n")
        fh.write(
            f"layout {layout.node_count} {layout.link_count} "
            f"{layout.queue_slots} {layout.history_k}\n"
        )
        for net_name, net in (("policy", policy_state.policy), ("value", policy_state.value)):
            for i in range(net.layer_count):
                _write_tensor(fh, f"{net_name}.{i}.W", net.weights[i])
                _write_tensor(fh, f"{net_name}.{i}.b", net.biases[i][None, :])


def _write_tensor(fh, name: str, arr: np.ndarray) -> None:
    fh.write(f"tensor {name} {arr.shape[0]} {arr.shape[1]}\n")
    for row in arr:
        fh.write(" ".join(f"{v:.17g}" for v in row) + "\n")


def load_checkpoint(path: str, cfg: PpoConfig, expected_layout: ObsLayout | None = None) -> PolicyState:
    """Rebuild a PolicyState from a checkpoint, validating shapes."""
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise ValueError(f"{path}: empty checkpoint")
    head = lines[0].split()
    if len(head) != 4 or head[0] != CKPT_MAGIC:
        raise ValueError(f"{path}: not a ppo checkpoint")
    if head[1] != CKPT_VERSION:
        raise ValueError(f"{path}: unsupported checkpoint version {head[1]}")
    obs_dim, queue_slots = int(head[2]), int(head[3])
    lay = lines[1].split()
    if len(lay) != 5 or lay[0] != "layout":
        raise ValueError(f"{path}: missing layout line")
    layout = ObsLayout(
        node_count=int(lay[1]),
        link_count=int(lay[2]),
        queue_slots=int(lay[3]),
        history_k=int(lay[4]),
    )
    if layout.dim != obs_dim or layout.queue_slots != queue_slots:
        raise ValueError(f"{path}: header dims disagree with layout line")
    if expected_layout is not None and layout != expected_layout:
        raise ValueError(
            f"{path}: checkpoint layout {layout} incompatible with expected {expected_layout}"
        )

    tensors: dict[str, np.ndarray] = {}
    i = 2
    while i < len(lines):
        parts = lines[i].split()
        if len(parts) != 4 or parts[0] != "tensor":
            raise ValueError(f"{path}: line {i + 1}: expected tensor header")
        name, rows, cols = parts[1], int(parts[2]), int(parts[3])
        block = lines[i + 1 : i + 1 + rows]
        if len(block) != rows:
            raise ValueError(f"{path}: tensor {name} truncated")
        tensors[name] = np.array([[float(v) for v in row.split()] for row in block])
        if tensors[name].shape != (rows, cols):
            raise ValueError(f"{path}: tensor {name} has wrong shape")
        i += 1 + rows

    state = PolicyState.create(cfg, layout)
    for net_name, net in (("policy", state.policy), ("value", state.value)):
        for li in range(net.layer_count):
            w = tensors.get(f"{net_name}.{li}.W")
            b = tensors.get(f"{net_name}.{li}.b")
            if w is None or b is None:
                raise ValueError(f"{path}: missing tensor for {net_name} layer {li}")
            if w.shape != net.weights[li].shape or b.shape[1] != net.biases[li].shape[0]:
                raise ValueError(
                    f"{path}: {net_name} layer {li} shape {w.shape} incompatible "
                    f"with configured architecture {net.weights[li].shape}"
                )
            net.weights[li] = w
            net.biases[li] = b[0]
    # fresh optimizer state for the loaded parameters
    state.policy_opt = make_optimizer(cfg.optimizer, state.policy, cfg.learning_rate)
    state.value_opt = make_optimizer(cfg.optimizer, state.value, cfg.learning_rate)
    return state
