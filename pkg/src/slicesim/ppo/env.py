"""Admission-control environment over the slotted simulator, and the solver
adapter that runs a trained policy inside the benchmark engine."""

from __future__ import annotations

from collections import deque

import numpy as np

from ..config import DemandConfig, PpoConfig, SlicingConfig
from ..demand import ArrivalProcess, Request, RequestQueue
from ..engine import Simulation
from ..slicing import (
    Assignment,
    build_slice,
    enumerate_feasible_paths,
    slice_cost,
)
from ..topology import LinkAttr, NetworkGraph, ResidualState
from .agent import PolicyState, policy_forward, sample_action
from .obs import ObsLayout, action_mask, encode_observation, observed_requests


def apply_action(
    graph: NetworkGraph,
    state: ResidualState,
    queue: RequestQueue,
    accept: np.ndarray,
    slicing_cfg: SlicingConfig,
    slot: int,
) -> tuple[Assignment, list[float]]:
    """Route each accepted request on its minimum-cost feasible path.

    Accepted requests whose routing fails stay pending; rejected requests
    wait for a later slot. Returns the assignment and the committed costs.
    """
    max_hops = slicing_cfg.max_hops if slicing_cfg.max_hops > 0 else None
    observed = observed_requests(queue, len(accept))
    assignment: Assignment = {}
    costs: list[float] = []
    for i, request in enumerate(observed):
        if not accept[i]:
            continue
        paths = enumerate_feasible_paths(
            graph, state, request, max_hops=max_hops, max_paths=slicing_cfg.max_paths
        )
        if not paths:
            continue
        best = min(enumerate(paths), key=lambda t: (slice_cost(t[1], graph), t[0]))[1]
        inst = build_slice(request, best, slot, graph, state)
        state.reserve(inst.path.link_ids, inst.load, inst.slice_id, inst.expiry)
        assignment[request.id] = inst
        costs.append(slice_cost(best, graph))
    return assignment, costs


def compute_reward(
    served_costs: list[float],
    evicted_count: int,
    pending_costs: list[float],
    cfg: PpoConfig,
) -> float:
    """Slot reward.

    shaped (default): -cost/p_norm per served slice, -kappa per request that
    expired unserved on this transition. literal: +cost per served slice and
    -cheapest-hypothetical-path cost per still-pending request.
    """
    if cfg.reward == "shaped":
        return -sum(served_costs) / max(cfg.p_norm, 1e-12) - cfg.kappa * evicted_count
    if cfg.reward == "literal":
        return sum(served_costs) - sum(pending_costs)
    raise ValueError(f"unknown reward mode {cfg.reward!r}")


def _pending_cheapest_costs(
    graph: NetworkGraph,
    state: ResidualState,
    queue: RequestQueue,
    slicing_cfg: SlicingConfig,
) -> list[float]:
    """Hypothetical cheapest-path cost of each pending request (literal mode).

    Requests with no feasible path have no hypothetical assignment and
    contribute zero.
    """
    max_hops = slicing_cfg.max_hops if slicing_cfg.max_hops > 0 else None
    out = []
    for request in queue.pending:
        paths = enumerate_feasible_paths(
            graph, state, request, max_hops=max_hops, max_paths=slicing_cfg.max_paths
        )
        if paths:
            out.append(min(slice_cost(p, graph) for p in paths))
    return out


class SliceEnv:
    """Gym-style wrapper: one episode = one simulation of the horizon."""

    def __init__(
        self,
        graph: NetworkGraph,
        demand_cfg: DemandConfig,
        ppo_cfg: PpoConfig,
        slicing_cfg: SlicingConfig | None = None,
        horizon: int = 1000,
        process_factory=None,
    ):
        self.graph = graph
        self.demand_cfg = demand_cfg
        self.cfg = ppo_cfg
        self.slicing_cfg = slicing_cfg or SlicingConfig()
        self.horizon = horizon
        self.layout = ObsLayout(
            node_count=graph.node_count,
            link_count=graph.link_count,
            queue_slots=ppo_cfg.queue_slots,
            history_k=ppo_cfg.history_k,
        )
        self._process_factory = process_factory or self._default_process
        self.sim: Simulation | None = None
        self.cost_history: deque = deque(maxlen=ppo_cfg.history_k)

    def _default_process(self, episode_seed: int):
        return ArrivalProcess(
            node_count=self.graph.node_count,
            lam=self.demand_cfg.lam,
            rate_scale=self.demand_cfg.rate_scale,
            delay_scale=self.demand_cfg.delay_scale,
            lifetime_scale=self.demand_cfg.lifetime_scale,
            seed=episode_seed,
        )

    def reset(self, episode_seed: int) -> np.ndarray:
        self.sim = Simulation(
            self.graph,
            self._process_factory(episode_seed),
            self.horizon,
            record_events=False,
        )
        self.cost_history = deque([0.0] * self.cfg.history_k, maxlen=self.cfg.history_k)
        self.sim.begin_slot()
        return self._observe()

    def _observe(self) -> np.ndarray:
        return encode_observation(
            self.graph,
            self.sim.state,
            self.sim.queue,
            self.cost_history,
            self.layout,
            lifetime_ref=self.cfg.lifetime_ref,
        )

    def mask(self) -> np.ndarray:
        return action_mask(self.sim.queue, self.cfg.queue_slots)

    def step(self, accept: np.ndarray):
        """Provision with the action, then advance one slot.

        Returns (next_obs, reward, done, info). The eviction penalty covers
        requests whose last usable slot was the one just acted on.
        """
        assert self.sim is not None and not self.sim.done
        slot = self.sim.slot
        assignment, costs = apply_action(
            self.graph, self.sim.state, self.sim.queue, accept, self.slicing_cfg, slot
        )
        self.sim.finish_slot(assignment)
        self.cost_history.append(sum(costs) / len(costs) if costs else 0.0)

        # the literal-mode waiting penalty applies to what is still unserved
        # after this action, so take it before the next slot's arrivals land
        pending_costs: list[float] = []
        if self.cfg.reward == "literal":
            pending_costs = _pending_cheapest_costs(
                self.graph, self.sim.state, self.sim.queue, self.slicing_cfg
            )

        done = self.sim.done
        if done:
            evicted = self.sim.pending_expiring_at(self.sim.slot)
            next_obs = np.zeros(self.layout.dim)
        else:
            _, evicted = self.sim.begin_slot()
            next_obs = self._observe()
        reward = compute_reward(costs, len(evicted), pending_costs, self.cfg)
        info = {"served": len(assignment), "evicted": len(evicted), "slot": slot}
        return next_obs, reward, done, info


class PpoSolver:
    """Runs a policy as an admission solver inside the benchmark engine."""

    name = "ppo"

    def __init__(self, policy_state: PolicyState, slicing_cfg: SlicingConfig | None = None):
        self.policy_state = policy_state
        self.slicing_cfg = slicing_cfg or SlicingConfig()
        self.cfg = policy_state.cfg
        self.cost_history: deque = deque([0.0] * self.cfg.history_k, maxlen=self.cfg.history_k)
        self._rng = np.random.default_rng(self.cfg.seed)

    def provision(self, graph, state, queue, slot) -> Assignment:
        obs = encode_observation(
            graph,
            state,
            queue,
            self.cost_history,
            self.policy_state.layout,
            lifetime_ref=self.cfg.lifetime_ref,
        )
        mask = action_mask(queue, self.cfg.queue_slots)
        probs = policy_forward(self.policy_state.policy, obs, mask)
        if self.cfg.eval_mode == "sample":
            accept, _ = sample_action(probs, self._rng)
        else:
            accept = probs > 0.5
        assignment, costs = apply_action(graph, state, queue, accept, self.slicing_cfg, slot)
        self.cost_history.append(sum(costs) / len(costs) if costs else 0.0)
        return assignment


class _RecurringDemand:
    """One deterministic request per slot between the toy graph's endpoints."""

    def __init__(self, lifetime: int = 1):
        self.lifetime = lifetime

    def sample(self, slot: int) -> list[Request]:
        return [
            Request(
                id=slot,
                source=0,
                destination=1,
                rate=1.0,
                delay_bound=10.0,
                demand_type="eMBB",
                arrival_slot=slot,
                lifetime=self.lifetime,
            )
        ]


def make_toy_env(ppo_cfg: PpoConfig, horizon: int = 64) -> SliceEnv:
    """Degenerate single-link environment where accepting is strictly optimal.

    Every slot one unit-rate request arrives with lifetime 1; rejecting it
    costs kappa next slot while serving costs a tiny normalized path cost.
    """
    graph = NetworkGraph(2, [LinkAttr(0, 1, capacity=1000.0, delay=1.0, cost=2.0)])
    env = SliceEnv(
        graph,
        DemandConfig(lam=1.0),
        ppo_cfg,
        horizon=horizon,
        process_factory=lambda seed: _RecurringDemand(),
    )
    return env
