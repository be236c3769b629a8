"""Sequential per-request provisioning with both-objective path upgrades."""

from __future__ import annotations

from .config import GreedyConfig, SlicingConfig
from .demand import RequestQueue
from .slicing import (
    Assignment,
    build_slice,
    enumerate_feasible_paths,
    hypothetical_fairness,
    slice_cost,
)
from .topology import NetworkGraph, ResidualState


def greedy_solve(
    graph: NetworkGraph,
    state: ResidualState,
    queue: RequestQueue,
    config: GreedyConfig | None = None,
    slicing_cfg: SlicingConfig | None = None,
) -> Assignment:
    """Serve requests in arrival order, committing one path per request.

    For each request the first feasible path becomes the incumbent; a later
    path replaces it only when it improves the comparison rule (default:
    strictly lower cost AND strictly higher fairness). The winner is reserved
    immediately, so later requests see the updated residual capacity.
    Requests without a feasible path are left pending.
    """
    config = config or GreedyConfig()
    slicing_cfg = slicing_cfg or SlicingConfig()
    max_hops = slicing_cfg.max_hops if slicing_cfg.max_hops > 0 else None
    fair_mode = slicing_cfg.fairness_denominator
    # weighted_sum puts cost and the [0,1] fairness index on one scale
    cost_scale = max((l.cost for l in graph.links), default=1.0) * max(graph.link_count, 1)

    assignment: Assignment = {}
    for request in sorted(queue.pending, key=lambda r: (r.arrival_slot, r.id)):
        paths = enumerate_feasible_paths(
            graph, state, request, max_hops=max_hops, max_paths=slicing_cfg.max_paths
        )
        if not paths:
            continue
        best = paths[0]
        best_cost = slice_cost(best, graph)
        best_fair = hypothetical_fairness(state, best, request.rate, denominator=fair_mode)
        for path in paths[1:]:
            cost = slice_cost(path, graph)
            fair = hypothetical_fairness(state, path, request.rate, denominator=fair_mode)
            if _improves(cost, fair, best_cost, best_fair, config, cost_scale):
                best, best_cost, best_fair = path, cost, fair
        inst = build_slice(request, best, queue.current_slot, graph, state)
        state.reserve(inst.path.link_ids, inst.load, inst.slice_id, inst.expiry)
        assignment[request.id] = inst
    return assignment


def _improves(cost, fair, inc_cost, inc_fair, config: GreedyConfig, cost_scale: float) -> bool:
    if config.improvement == "strict_both":
        return cost < inc_cost and fair > inc_fair
    if config.improvement == "either":
        return cost < inc_cost or fair > inc_fair
    if config.improvement == "weighted_sum":
        score = config.w1 * cost - config.w2 * cost_scale * fair
        inc_score = config.w1 * inc_cost - config.w2 * cost_scale * inc_fair
        return score < inc_score
    raise ValueError(f"unknown improvement rule {config.improvement!r}")


class GreedySolver:
    """Engine adapter around greedy_solve."""

    name = "greedy"

    def __init__(self, config: GreedyConfig | None = None, slicing_cfg: SlicingConfig | None = None):
        self.config = config or GreedyConfig()
        self.slicing_cfg = slicing_cfg or SlicingConfig()

    def provision(self, graph, state, queue, slot) -> Assignment:
        return greedy_solve(graph, state, queue, self.config, self.slicing_cfg)
