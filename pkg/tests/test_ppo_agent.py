import numpy as np
import pytest

from slicesim.config import PpoConfig
from slicesim.demand import RequestQueue
from slicesim.ppo.agent import (
    PolicyState,
    TrajectoryBatch,
    action_log_prob,
    estimate_advantages,
    policy_forward,
    ppo_loss_and_grads,
    ppo_update,
    sample_action,
)
from slicesim.ppo.nets import Mlp, log_sigmoid
from slicesim.ppo.obs import ObsLayout, action_mask, encode_observation
from slicesim.topology import ResidualState, generate_random_graph

from conftest import make_request


def obs_dim_oracle(node_count, link_count, M, k):
    """Independent dimension calculator: links carry 2 features, a request
    block is present + two one-hots + 3 scalars, history has k entries."""
    return link_count * 2 + M * (1 + node_count + node_count + 3) + k


class TestObservation:
    def test_table1_dimension_is_348(self):
        layout = ObsLayout(node_count=8, link_count=12, queue_slots=16, history_k=4)
        assert layout.dim == obs_dim_oracle(8, 12, 16, 4) == 348

    def test_idle_network_zero_features(self):
        graph = generate_random_graph(8, 12, seed=1)
        layout = ObsLayout(8, 12, 16, 4)
        obs = encode_observation(graph, ResidualState(graph), RequestQueue(), [], layout)
        # link cost features are static and nonzero; everything else is 0
        assert obs.shape == (348,)
        occupancy = obs[0:24:2]
        assert np.array_equal(occupancy, np.zeros(12))
        assert np.array_equal(obs[24:], np.zeros(324))

    def test_full_link_feature_is_one(self):
        graph = generate_random_graph(8, 12, seed=1)
        state = ResidualState(graph)
        state.reserve([0], graph.links[0].capacity, "full", expiry=9)
        layout = ObsLayout(8, 12, 16, 4)
        obs = encode_observation(graph, state, RequestQueue(), [], layout)
        assert obs[0] == 1.0

    def test_all_features_in_unit_interval(self):
        graph = generate_random_graph(8, 12, seed=2)
        state = ResidualState(graph)
        q = RequestQueue()
        q.enqueue_and_evict(
            [make_request(id=i, source=0, destination=7, rate=500.0, delay_bound=99.0) for i in range(20)],
            0,
        )
        layout = ObsLayout(8, 12, 16, 4)
        obs = encode_observation(graph, state, q, [1e9, 3.0], layout)
        assert np.all(obs >= 0.0) and np.all(obs <= 1.0)

    def test_mask_matches_queue(self):
        q = RequestQueue()
        q.enqueue_and_evict([make_request(id=i) for i in range(3)], 0)
        mask = action_mask(q, 8)
        assert mask.tolist() == [True] * 3 + [False] * 5


class TestPolicyForward:
    def test_zero_weights_half_before_masking(self):
        policy = Mlp([10, 4], np.random.default_rng(0))
        for w in policy.weights:
            w[...] = 0.0
        probs = policy_forward(policy, np.ones(10), np.array([True, True, False, False]))
        assert probs[0] == probs[1] == 0.5
        assert probs[2] == probs[3] == 0.0

    def test_outputs_in_open_interval_for_unmasked(self):
        rng = np.random.default_rng(1)
        policy = Mlp([10, 6], rng)
        probs = policy_forward(policy, rng.normal(size=10), np.ones(6, dtype=bool))
        assert np.all(probs > 0.0) and np.all(probs < 1.0)

    def test_dimension_mismatch_raises(self):
        policy = Mlp([10, 4], np.random.default_rng(0))
        with pytest.raises(ValueError):
            policy_forward(policy, np.ones(9), np.ones(4, dtype=bool))


class TestSampleAction:
    def test_probability_one_always_accepted(self):
        accept, logp = sample_action(np.array([1.0 - 1e-12, 0.0]), np.random.default_rng(0))
        assert accept[0]
        assert not accept[1]

    def test_masked_zero_never_accepted_and_contributes_zero(self):
        rng = np.random.default_rng(1)
        for _ in range(200):
            accept, logp = sample_action(np.array([0.0, 0.0]), rng)
            assert not accept.any()
            assert logp == 0.0

    def test_two_slot_log_prob_value(self):
        # both slots p=0.5, action [1, 0] -> ln(0.5) + ln(0.5)
        logp = action_log_prob(np.array([0.5, 0.5]), np.array([True, False]))
        assert abs(logp - np.log(0.25)) < 1e-12
        assert abs(logp + 1.3862943611198906) < 1e-12

    def test_deterministic_given_rng_state(self):
        p = np.array([0.3, 0.7, 0.5])
        a1, l1 = sample_action(p, np.random.default_rng(42))
        a2, l2 = sample_action(p, np.random.default_rng(42))
        assert np.array_equal(a1, a2) and l1 == l2


class TestAdvantages:
    def test_single_terminal_step(self):
        adv, ret = estimate_advantages([1.0], [0.0], [True], 0.0, gamma=1.0, gae_lambda=1.0)
        assert adv[0] == 1.0 and ret[0] == 1.0

    def test_all_zero(self):
        adv, ret = estimate_advantages([0.0] * 4, [0.0] * 4, [False] * 4, 0.0, 0.9, 0.95)
        assert np.array_equal(adv, np.zeros(4))

    def test_three_step_matches_discounted_oracle(self):
        # gae_lambda=1: advantage = discounted return - value
        rewards = [1.0, 2.0, 3.0]
        values = [0.5, 0.25, 0.125]
        gamma = 0.9
        adv, ret = estimate_advantages(rewards, values, [False, False, True], 0.0, gamma, 1.0)
        returns_oracle = []
        acc = 0.0
        for r in reversed(rewards):
            acc = r + gamma * acc
            returns_oracle.insert(0, acc)
        for t in range(3):
            assert abs(adv[t] - (returns_oracle[t] - values[t])) < 1e-12
            assert abs(ret[t] - returns_oracle[t]) < 1e-12

    def test_bootstrap_used_when_truncated(self):
        adv, _ = estimate_advantages([0.0], [0.0], [False], 10.0, gamma=0.5, gae_lambda=1.0)
        assert adv[0] == 5.0

    def test_random_against_bruteforce(self):
        rng = np.random.default_rng(9)
        for _ in range(30):
            n = int(rng.integers(1, 12))
            rewards = rng.normal(size=n)
            values = rng.normal(size=n)
            gamma, lam = float(rng.uniform(0.5, 1.0)), float(rng.uniform(0.0, 1.0))
            boot = float(rng.normal())
            adv, _ = estimate_advantages(rewards, values, [False] * n, boot, gamma, lam)
            # brute force: sum_k (gamma*lam)^k * delta_{t+k}
            vals = np.append(values, boot)
            deltas = rewards + gamma * vals[1:] - vals[:-1]
            for t in range(n):
                expect = sum((gamma * lam) ** k * deltas[t + k] for k in range(n - t))
                assert abs(adv[t] - expect) < 1e-9


def tiny_batch(rng, B=12, D=8, M=3, behavior_shift=True):
    policy = Mlp([D, 8, M], rng)
    value = Mlp([D, 8, 1], rng)
    obs = rng.normal(size=(B, D))
    masks = rng.random((B, M)) < 0.8
    actions = (rng.random((B, M)) < 0.5) & masks
    behavior = Mlp([D, 8, M], rng) if behavior_shift else policy
    logits = behavior.forward(obs)
    logp = np.where(
        masks, actions * log_sigmoid(logits) + (~actions) * log_sigmoid(-logits), 0.0
    ).sum(axis=1)
    batch = {
        "obs": obs,
        "actions": actions,
        "masks": masks,
        "old_log_probs": logp,
        "advantages": rng.normal(size=B),
        "returns": rng.normal(size=B),
    }
    return policy, value, batch


class TestLoss:
    def test_gradient_check_full_loss(self):
        rng = np.random.default_rng(11)
        cfg = PpoConfig()
        policy, value, batch = tiny_batch(rng)
        _, pgrads, vgrads, _ = ppo_loss_and_grads(policy, value, batch, cfg)
        for net, grads in ((policy, pgrads), (value, vgrads)):
            analytic = np.concatenate(
                [np.concatenate([dw.ravel(), db.ravel()]) for dw, db in grads]
            )
            flat = net.get_flat()

            def loss_at(vec):
                saved = net.get_flat()
                net.set_flat(vec)
                out, _, _, _ = ppo_loss_and_grads(policy, value, batch, cfg)
                net.set_flat(saved)
                return out

            for idx in rng.choice(flat.size, size=50, replace=False):
                fp = flat.copy()
                fp[idx] += 1e-5
                fm = flat.copy()
                fm[idx] -= 1e-5
                fd = (loss_at(fp) - loss_at(fm)) / 2e-5
                rel = abs(fd - analytic[idx]) / max(abs(fd), abs(analytic[idx]), 1e-8)
                assert rel < 1e-4

    def test_surrogate_gain_capped_by_clip(self):
        rng = np.random.default_rng(13)
        cfg = PpoConfig(clip=0.2)
        policy, value, batch = tiny_batch(rng, B=64)
        logits = policy.forward(batch["obs"])
        per_slot = np.where(
            batch["masks"],
            batch["actions"] * log_sigmoid(logits)
            + (~batch["actions"]) * log_sigmoid(-logits),
            0.0,
        )
        ratio = np.exp(per_slot.sum(axis=1) - batch["old_log_probs"])
        surr = np.minimum(
            ratio * batch["advantages"],
            np.clip(ratio, 0.8, 1.2) * batch["advantages"],
        )
        assert np.all(surr <= (1 + cfg.clip) * np.abs(batch["advantages"]) + 1e-12)

    def test_masked_slots_receive_no_gradient(self):
        rng = np.random.default_rng(15)
        cfg = PpoConfig(entropy_coef=0.0, value_coef=0.0)
        policy, value, batch = tiny_batch(rng)
        batch["masks"][:, 1] = False
        batch["actions"][:, 1] = False
        _, pgrads, _, _ = ppo_loss_and_grads(policy, value, batch, cfg)
        # last-layer weight column feeding slot 1 must be untouched
        assert np.allclose(pgrads[-1][0][:, 1], 0.0)
        assert pgrads[-1][1][1] == 0.0


class TestUpdate:
    def test_positive_advantage_raises_action_probability(self):
        cfg = PpoConfig(entropy_coef=0.0, epochs=4, minibatch=8, learning_rate=1e-2, seed=0)
        layout = ObsLayout(node_count=2, link_count=1, queue_slots=2, history_k=2)
        state = PolicyState.create(cfg, layout)
        obs = np.tile(np.linspace(0.1, 0.9, layout.dim), (8, 1))
        masks = np.ones((8, 2), dtype=bool)
        actions = np.zeros((8, 2), dtype=bool)
        actions[:, 0] = True
        p_before = policy_forward(state.policy, obs[0], masks[0])[0]
        logp = np.array([action_log_prob(
            policy_forward(state.policy, obs[i], masks[i]), actions[i]
        ) for i in range(8)])
        batch = TrajectoryBatch(
            obs=obs,
            actions=actions,
            masks=masks,
            log_probs=logp,
            rewards=np.ones(8),
            values=np.zeros(8),
            dones=np.array([False] * 7 + [True]),
        )
        batch.compute_targets(cfg.gamma, cfg.gae_lambda)
        batch.advantages = np.ones(8)  # force positive advantage on the taken action
        batch.returns = np.ones(8)
        ppo_update(state, batch)
        p_after = policy_forward(state.policy, obs[0], masks[0])[0]
        assert p_after > p_before

    def test_zero_advantage_zero_entropy_leaves_policy(self):
        cfg = PpoConfig(entropy_coef=0.0, epochs=2, minibatch=8, seed=1)
        layout = ObsLayout(node_count=2, link_count=1, queue_slots=2, history_k=2)
        state = PolicyState.create(cfg, layout)
        rng = np.random.default_rng(2)
        obs = rng.random((8, layout.dim))
        masks = np.ones((8, 2), dtype=bool)
        actions = rng.random((8, 2)) < 0.5
        logp = np.array([action_log_prob(
            policy_forward(state.policy, obs[i], masks[i]), actions[i]
        ) for i in range(8)])
        before = state.policy.get_flat()
        batch = TrajectoryBatch(
            obs=obs,
            actions=actions,
            masks=masks,
            log_probs=logp,
            rewards=np.zeros(8),
            values=np.zeros(8),
            dones=np.zeros(8, dtype=bool),
        )
        batch.compute_targets(cfg.gamma, cfg.gae_lambda)
        batch.advantages = np.zeros(8)
        batch.returns = np.zeros(8)
        # value head sees zero targets on zero values -> zero grads as well
        ppo_update(state, batch)
        assert np.array_equal(state.policy.get_flat(), before)

    def test_value_loss_decreases_over_first_epoch(self):
        cfg = PpoConfig(epochs=1, minibatch=16, learning_rate=1e-3, seed=3)
        layout = ObsLayout(node_count=2, link_count=1, queue_slots=2, history_k=2)
        state = PolicyState.create(cfg, layout)
        rng = np.random.default_rng(4)
        obs = rng.random((64, layout.dim))
        targets = rng.normal(size=64)

        def value_loss():
            v = state.value.forward(obs)[:, 0]
            return float(((v - targets) ** 2).mean())

        masks = np.ones((64, 2), dtype=bool)
        actions = rng.random((64, 2)) < 0.5
        logp = np.array([action_log_prob(
            policy_forward(state.policy, obs[i], masks[i]), actions[i]
        ) for i in range(64)])
        batch = TrajectoryBatch(
            obs=obs,
            actions=actions,
            masks=masks,
            log_probs=logp,
            rewards=np.zeros(64),
            values=np.zeros(64),
            dones=np.zeros(64, dtype=bool),
        )
        batch.compute_targets(cfg.gamma, cfg.gae_lambda)
        batch.advantages = np.zeros(64)
        batch.returns = targets
        before = value_loss()
        ppo_update(state, batch)
        assert value_loss() < before

    def test_non_finite_advantages_skip_update(self):
        cfg = PpoConfig(epochs=1, minibatch=8, seed=7)
        layout = ObsLayout(node_count=2, link_count=1, queue_slots=2, history_k=2)
        state = PolicyState.create(cfg, layout)
        rng = np.random.default_rng(8)
        obs = rng.random((8, layout.dim))
        masks = np.ones((8, 2), dtype=bool)
        actions = rng.random((8, 2)) < 0.5
        logp = np.array([action_log_prob(
            policy_forward(state.policy, obs[i], masks[i]), actions[i]
        ) for i in range(8)])
        before_p = state.policy.get_flat()
        before_v = state.value.get_flat()
        batch = TrajectoryBatch(
            obs=obs,
            actions=actions,
            masks=masks,
            log_probs=logp,
            rewards=np.zeros(8),
            values=np.zeros(8),
            dones=np.zeros(8, dtype=bool),
        )
        batch.advantages = np.full(8, np.nan)
        batch.returns = np.full(8, np.nan)
        diag = ppo_update(state, batch)
        assert diag["skipped_minibatches"] == 1 and diag["updates"] == 0
        assert np.array_equal(state.policy.get_flat(), before_p)
        assert np.array_equal(state.value.get_flat(), before_v)

    def test_empty_batch_rejected(self):
        cfg = PpoConfig()
        layout = ObsLayout(node_count=2, link_count=1, queue_slots=2, history_k=2)
        state = PolicyState.create(cfg, layout)
        empty = TrajectoryBatch(
            obs=np.zeros((0, layout.dim)),
            actions=np.zeros((0, 2), dtype=bool),
            masks=np.zeros((0, 2), dtype=bool),
            log_probs=np.zeros(0),
            rewards=np.zeros(0),
            values=np.zeros(0),
            dones=np.zeros(0, dtype=bool),
        )
        with pytest.raises(ValueError):
            ppo_update(state, empty)
