"""Exact joint provisioning over the pending batch via branch and bound.

Each request either picks one of its pre-enumerated feasible paths or is
rejected; the joint choice must respect shared link capacity. The default
objective is lexicographic: maximize served requests, then minimize total
cost, then maximize the utilization fairness index. A weighted scalarization
is available as an alternative.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .config import IpConfig, SlicingConfig
from .demand import Request, RequestQueue
from .slicing import (
    Assignment,
    Path,
    build_slice,
    enumerate_feasible_paths,
    jain_of_utilizations,
    slice_cost,
)
from .topology import NetworkGraph, ResidualState

REJECT = None

# Cost-bound slack: pruning is conservative by this margin so float summation
# order can never prune a branch that ties or beats the incumbent.
_PRUNE_GUARD = 1e-9


@dataclass
class CandidateSet:
    """Feasible path choices of one request, ascending in cost."""

    request: Request
    paths: list[Path]
    costs: list[float]


@dataclass
class IpInstance:
    """Immutable snapshot: solving it is a pure function."""

    requests: list[Request]
    candidates: list[CandidateSet]
    residual: np.ndarray
    base_occupied: np.ndarray
    capacity: np.ndarray
    config: IpConfig = field(default_factory=IpConfig)
    fairness_denominator: str = "links"
    cost_scale: float = 1.0
    base_active_slices: int = 0


@dataclass
class IpSolution:
    choice: list[int | None]  # per request: index into candidates[i].paths, or REJECT
    objective: tuple | float
    f1: float
    f2: float
    served: int
    optimal: bool
    nodes_explored: int


def build_instance(
    graph: NetworkGraph,
    state: ResidualState,
    queue: RequestQueue,
    config: IpConfig | None = None,
    slicing_cfg: SlicingConfig | None = None,
) -> IpInstance:
    config = config or IpConfig()
    slicing_cfg = slicing_cfg or SlicingConfig()
    max_hops = slicing_cfg.max_hops if slicing_cfg.max_hops > 0 else None
    requests = sorted(queue.pending, key=lambda r: (r.arrival_slot, r.id))
    candidates = []
    for request in requests:
        paths = enumerate_feasible_paths(
            graph, state, request, max_hops=max_hops, max_paths=slicing_cfg.max_paths
        )
        ranked = sorted(
            ((slice_cost(p, graph), i, p) for i, p in enumerate(paths)),
            key=lambda t: (t[0], t[1]),
        )
        candidates.append(
            CandidateSet(
                request=request,
                paths=[p for _, _, p in ranked],
                costs=[c for c, _, _ in ranked],
            )
        )
    cost_scale = max((l.cost for l in graph.links), default=1.0) * max(graph.link_count, 1)
    return IpInstance(
        requests=requests,
        candidates=candidates,
        residual=state.residuals(),
        base_occupied=state.occupied.copy(),
        capacity=state.capacity.copy(),
        config=config,
        fairness_denominator=slicing_cfg.fairness_denominator,
        cost_scale=cost_scale,
        base_active_slices=len(state.reservations),
    )


def choice_feasible(instance: IpInstance, choice: list[int | None]) -> bool:
    """Shared-capacity feasibility of a complete joint choice."""
    used = np.zeros_like(instance.residual)
    for i, pick in enumerate(choice):
        if pick is REJECT:
            continue
        cand = instance.candidates[i]
        load = cand.request.rate
        for lid in cand.paths[pick].link_ids:
            used[lid] += load
            if used[lid] > instance.residual[lid]:
                return False
    return True


def evaluate_choice(instance: IpInstance, choice: list[int | None]):
    """(served, f1, f2) of a complete joint choice, in fixed evaluation order."""
    served = 0
    cost = 0.0
    occ = instance.base_occupied.copy()
    for i, pick in enumerate(choice):
        if pick is REJECT:
            continue
        served += 1
        cand = instance.candidates[i]
        cost += cand.costs[pick]
        for lid in cand.paths[pick].link_ids:
            occ[lid] += cand.request.rate
    with np.errstate(invalid="ignore", divide="ignore"):
        u = np.where(instance.capacity > 0, occ / instance.capacity, 0.0)
    if instance.fairness_denominator == "slices":
        f2 = jain_of_utilizations(u, m=max(1, served + instance.base_active_slices))
    else:
        f2 = jain_of_utilizations(u)
    return served, cost, f2


def scalarize(instance: IpInstance, served: int, cost: float, f2: float):
    if instance.config.mode == "lex":
        return (-served, cost, -f2)
    w1, w2 = instance.config.w1, instance.config.w2
    return w1 * cost - w2 * instance.cost_scale * f2


class _Search:
    def __init__(self, instance: IpInstance):
        self.inst = instance
        self.n = len(instance.requests)
        self.nodes = 0
        self.limit_hit = False
        # suffix counts/min-cost sums for the optimistic bound
        servable = [1 if c.paths else 0 for c in instance.candidates]
        min_costs = [c.costs[0] if c.costs else 0.0 for c in instance.candidates]
        self.suffix_servable = [0] * (self.n + 1)
        self.suffix_min_cost = [0.0] * (self.n + 1)
        for i in range(self.n - 1, -1, -1):
            self.suffix_servable[i] = self.suffix_servable[i + 1] + servable[i]
            self.suffix_min_cost[i] = self.suffix_min_cost[i + 1] + min_costs[i]
        self.choice = [REJECT] * self.n
        self.best_choice = list(self.choice)
        served, cost, f2 = evaluate_choice(instance, self.choice)
        self.best_key = self._key(served, cost, f2)
        self.best_stats = (served, cost, f2)
        # running occupancy of the partial choice, rebuilt exactly on leaf
        # evaluation; during descent it is used only for feasibility checks
        self.used = np.zeros_like(instance.residual)

    def _key(self, served, cost, f2):
        if self.inst.config.mode == "lex":
            return (-served, cost, -f2)
        return self.inst.config.w1 * cost - self.inst.config.w2 * self.inst.cost_scale * f2

    def _bound(self, i, served, cost):
        if self.inst.config.mode == "lex":
            return (
                -(served + self.suffix_servable[i]),
                cost + self.suffix_min_cost[i] - _PRUNE_GUARD,
                -1.0,
            )
        # rejection is free, so the optimistic completion adds no cost
        return self.inst.config.w1 * cost - self.inst.config.w2 * self.inst.cost_scale - _PRUNE_GUARD

    def run(self, node_limit: int):
        self._descend(0, 0, 0.0, node_limit)
        return not self.limit_hit

    def _descend(self, i, served, cost, node_limit):
        if self.limit_hit:
            return
        self.nodes += 1
        if self.nodes > node_limit:
            self.limit_hit = True
            return
        if i == self.n:
            leaf_served, leaf_cost, leaf_f2 = evaluate_choice(self.inst, self.choice)
            key = self._key(leaf_served, leaf_cost, leaf_f2)
            if key < self.best_key:
                self.best_key = key
                self.best_choice = list(self.choice)
                self.best_stats = (leaf_served, leaf_cost, leaf_f2)
            return
        if self._bound(i, served, cost) >= self.best_key:
            return
        cand = self.inst.candidates[i]
        load = cand.request.rate
        residual = self.inst.residual
        for pick, path in enumerate(cand.paths):
            # costs ascend, so once a child bound fails all later picks fail too
            child_bound = self._child_bound(i, served, cost, cand.costs[pick])
            if child_bound >= self.best_key:
                break
            fits = True
            for lid in path.link_ids:
                if self.used[lid] + load > residual[lid]:
                    fits = False
                    break
            if not fits:
                continue
            for lid in path.link_ids:
                self.used[lid] += load
            self.choice[i] = pick
            self._descend(i + 1, served + 1, cost + cand.costs[pick], node_limit)
            self.choice[i] = REJECT
            for lid in path.link_ids:
                self.used[lid] -= load
        self._descend(i + 1, served, cost, node_limit)

    def _child_bound(self, i, served, cost, pick_cost):
        if self.inst.config.mode == "lex":
            return (
                -(served + 1 + self.suffix_servable[i + 1]),
                cost + pick_cost + self.suffix_min_cost[i + 1] - _PRUNE_GUARD,
                -1.0,
            )
        return (
            self.inst.config.w1 * (cost + pick_cost)
            - self.inst.config.w2 * self.inst.cost_scale
            - _PRUNE_GUARD
        )


def solve_exact(instance: IpInstance) -> IpSolution:
    """Provably optimal joint choice under the configured scalarization.

    Branches on requests in queue order with candidate paths in ascending
    cost; prunes with an optimistic (admissible) bound built from suffix
    served-counts and minimum candidate costs, using fairness <= 1. Exceeding
    the node limit returns the best incumbent with optimal=False.
    """
    search = _Search(instance)
    optimal = search.run(instance.config.node_limit)
    served, cost, f2 = search.best_stats
    return IpSolution(
        choice=search.best_choice,
        objective=scalarize(instance, served, cost, f2),
        f1=cost,
        f2=f2,
        served=served,
        optimal=optimal,
        nodes_explored=search.nodes,
    )


class ExactSolver:
    """Engine adapter: build an instance per slot, solve, commit the choice."""

    name = "ip"

    def __init__(self, config: IpConfig | None = None, slicing_cfg: SlicingConfig | None = None):
        self.config = config or IpConfig()
        self.slicing_cfg = slicing_cfg or SlicingConfig()
        self.last_solution: IpSolution | None = None

    def provision(self, graph, state, queue, slot) -> Assignment:
        instance = build_instance(graph, state, queue, self.config, self.slicing_cfg)
        solution = solve_exact(instance)
        self.last_solution = solution
        assignment: Assignment = {}
        for i, pick in enumerate(solution.choice):
            if pick is REJECT:
                continue
            cand = instance.candidates[i]
            inst = build_slice(cand.request, cand.paths[pick], slot, graph, state)
            state.reserve(inst.path.link_ids, inst.load, inst.slice_id, inst.expiry)
            assignment[cand.request.id] = inst
        return assignment
