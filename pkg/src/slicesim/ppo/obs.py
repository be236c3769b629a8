"""Fixed-size observation encoding of the network and the pending queue."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..demand import Request, RequestQueue
from ..topology import NetworkGraph, ResidualState


@dataclass(frozen=True)
class ObsLayout:
    """Dimension bookkeeping for the observation vector.

    Layout: per-link [occupied/capacity, cost/max_cost], then M request
    blocks [present, source one-hot(V), destination one-hot(V), rate, delay
    bound, remaining lifetime], then the last k normalized per-slot average
    provisioning costs.
    """

    node_count: int
    link_count: int
    queue_slots: int  # M
    history_k: int

    @property
    def request_block(self) -> int:
        return 2 * self.node_count + 4

    @property
    def dim(self) -> int:
        return 2 * self.link_count + self.queue_slots * self.request_block + self.history_k


def observed_requests(queue: RequestQueue, queue_slots: int) -> list[Request]:
    """The M earliest-expiring pending requests, deterministic order."""
    ranked = sorted(queue.pending, key=lambda r: (r.expiry, r.arrival_slot, r.id))
    return ranked[:queue_slots]


def encode_observation(
    graph: NetworkGraph,
    state: ResidualState,
    queue: RequestQueue,
    cost_history,
    layout: ObsLayout,
    lifetime_ref: float = 10.0,
) -> np.ndarray:
    """Deterministic feature vector; every feature lies in [0, 1]."""
    if graph.node_count != layout.node_count or graph.link_count != layout.link_count:
        raise ValueError("graph does not match the observation layout")
    cap_max = max(l.capacity for l in graph.links)
    cost_max = max(l.cost for l in graph.links)
    delay_max = max(l.delay for l in graph.links)
    delay_ref = max(delay_max * (graph.node_count - 1), 1e-12)
    cost_ref = max(cost_max * (graph.node_count - 1), 1e-12)

    out = np.zeros(layout.dim)
    for lid, link in enumerate(graph.links):
        out[2 * lid] = state.occupied[lid] / link.capacity if link.capacity > 0 else 0.0
        out[2 * lid + 1] = link.cost / cost_max if cost_max > 0 else 0.0

    base = 2 * layout.link_count
    block = layout.request_block
    for i, req in enumerate(observed_requests(queue, layout.queue_slots)):
        off = base + i * block
        out[off] = 1.0
        out[off + 1 + req.source] = 1.0
        out[off + 1 + layout.node_count + req.destination] = 1.0
        feat = off + 1 + 2 * layout.node_count
        out[feat] = min(req.rate / cap_max, 1.0) if cap_max > 0 else 0.0
        out[feat + 1] = min(req.delay_bound / delay_ref, 1.0)
        remaining = req.expiry - queue.current_slot
        out[feat + 2] = min(max(remaining, 0) / max(lifetime_ref, 1e-12), 1.0)

    hist_base = base + layout.queue_slots * block
    history = list(cost_history)[-layout.history_k :]
    history = [0.0] * (layout.history_k - len(history)) + history
    for j, value in enumerate(history):
        out[hist_base + j] = min(max(value, 0.0) / cost_ref, 1.0)
    return out


def action_mask(queue: RequestQueue, queue_slots: int) -> np.ndarray:
    mask = np.zeros(queue_slots, dtype=bool)
    mask[: min(len(observed_requests(queue, queue_slots)), queue_slots)] = True
    return mask
