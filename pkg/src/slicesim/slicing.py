"""Path enumeration, feasibility checks, slice construction and objectives."""

from __future__ import annotations

import weakref
from collections import deque
from dataclasses import dataclass

import numpy as np

from .demand import Request
from .topology import NetworkGraph, ResidualState


class InfeasiblePathError(ValueError):
    pass


@dataclass(frozen=True)
class Path:
    """Loop-free route: node sequence plus the link ids joining it."""

    link_ids: tuple[int, ...]
    nodes: tuple[int, ...]

    def __post_init__(self):
        if len(self.nodes) != len(self.link_ids) + 1:
            raise InfeasiblePathError("node sequence and link list lengths disagree")
        if len(set(self.nodes)) != len(self.nodes):
            raise InfeasiblePathError(f"path revisits a node: {self.nodes}")

    @property
    def hops(self) -> int:
        return len(self.link_ids)


@dataclass(frozen=True)
class SliceInstance:
    slice_id: int
    request_id: int
    path: Path
    load: float
    slice_type: str
    expiry: int


# request id -> admitted slice; absent id = rejected/pending
Assignment = dict[int, SliceInstance]


@dataclass(frozen=True)
class ObjectiveValues:
    cost: float
    fairness: float


# Cached full simple-path enumerations per graph instance. Static link
# attributes make the cached (delay, cost) per path valid for the graph's
# lifetime; only the bandwidth filter depends on mutable state.
_PATH_CACHE: "weakref.WeakKeyDictionary[NetworkGraph, dict]" = weakref.WeakKeyDictionary()


def _all_simple_paths(graph: NetworkGraph, src: int, dst: int, max_hops: int):
    """All simple src->dst paths ordered by (hop count, node sequence).

    Breadth-first over partial paths with neighbors expanded in ascending
    node order, which yields exactly that ordering.
    """
    cache = _PATH_CACHE.setdefault(graph, {})
    key = (src, dst, max_hops)
    if key in cache:
        return cache[key]
    found = []
    frontier = deque([((src,), ())])
    while frontier:
        nodes, links = frontier.popleft()
        if len(links) >= max_hops:
            continue
        for nbr, lid in graph.neighbors(nodes[-1]):
            if nbr in nodes:
                continue
            if nbr == dst:
                path = Path(links + (lid,), nodes + (nbr,))
                delay = sum(graph.links[l].delay for l in path.link_ids)
                cost = sum(graph.links[l].cost for l in path.link_ids)
                found.append((path, delay, cost))
            else:
                frontier.append((nodes + (nbr,), links + (lid,)))
    cache[key] = found
    return found


def enumerate_feasible_paths(
    graph: NetworkGraph,
    state: ResidualState,
    request: Request,
    max_hops: int | None = None,
    max_paths: int = 1000,
) -> list[Path]:
    """Simple paths satisfying the bandwidth and latency constraints.

    Returned in breadth-first order (hop count, then lexicographic node
    sequence), truncated to max_paths.
    """
    if request.source == request.destination:
        raise InfeasiblePathError("source equals destination")
    if not (0 <= request.source < graph.node_count and 0 <= request.destination < graph.node_count):
        raise InfeasiblePathError("endpoint outside graph")
    if max_hops is None:
        max_hops = graph.node_count - 1
    residual = state.residuals()
    out = []
    for path, delay, _cost in _all_simple_paths(graph, request.source, request.destination, max_hops):
        if delay > request.delay_bound:
            continue
        if any(residual[lid] < request.rate for lid in path.link_ids):
            continue
        out.append(path)
        if len(out) >= max_paths:
            break
    return out


def check_bandwidth(path: Path, state: ResidualState, rate: float) -> bool:
    """True iff every path link has residual capacity >= rate."""
    return all(state.residual(lid) >= rate for lid in path.link_ids)


def check_latency(path: Path, graph: NetworkGraph, delay_bound: float) -> bool:
    return path_delay(path, graph) <= delay_bound


def path_delay(path: Path, graph: NetworkGraph) -> float:
    return sum(graph.links[lid].delay for lid in path.link_ids)


def slice_cost(path: Path, graph: NetworkGraph) -> float:
    return sum(graph.links[lid].cost for lid in path.link_ids)


def jain_of_utilizations(values, m: int | None = None) -> float:
    """Jain index (sum u)^2 / (m * sum u^2); 1.0 for the all-zero vector."""
    u = np.asarray(values, dtype=float)
    s1 = float(u.sum())
    s2 = float((u * u).sum())
    if s1 == 0.0 or s2 == 0.0:  # all-zero (or denormal) utilization: vacuously fair
        return 1.0
    if m is None:
        m = len(u)
    return s1 * s1 / (m * s2)


def jain_fairness(
    state: ResidualState,
    denominator: str = "links",
    active_slices: int | None = None,
) -> float:
    """Fairness of per-link utilization alpha/C.

    denominator="links" normalizes by the number of links (the standard Jain
    index over the summed terms); "slices" divides by the active slice count
    instead, for fidelity experiments with the literal formula.
    """
    u = state.utilizations()
    if denominator == "links":
        return jain_of_utilizations(u)
    if denominator == "slices":
        n = active_slices if active_slices is not None else len(state.reservations)
        return jain_of_utilizations(u, m=max(1, n))
    raise ValueError(f"unknown fairness denominator {denominator!r}")


def hypothetical_fairness(
    state: ResidualState,
    path: Path,
    load: float,
    denominator: str = "links",
) -> float:
    """Fairness the network would have if ``load`` were reserved along ``path``."""
    occ = state.occupied.copy()
    for lid in path.link_ids:
        occ[lid] += load
    with np.errstate(invalid="ignore", divide="ignore"):
        u = np.where(state.capacity > 0, occ / state.capacity, 0.0)
    if denominator == "slices":
        return jain_of_utilizations(u, m=max(1, len(state.reservations) + 1))
    return jain_of_utilizations(u)


def build_slice(
    request: Request,
    path: Path,
    current_slot: int,
    graph: NetworkGraph,
    state: ResidualState,
) -> SliceInstance:
    """Construct the slice serving ``request`` over ``path``.

    Validates feasibility at the current residual state; the load equals the
    request rate and the reservation runs until arrival + lifetime.
    """
    if current_slot >= request.expiry or current_slot < request.arrival_slot:
        raise InfeasiblePathError(
            f"request {request.id} not live at slot {current_slot}"
        )
    if path.nodes[0] != request.source or path.nodes[-1] != request.destination:
        raise InfeasiblePathError("path endpoints do not match the request")
    if not check_latency(path, graph, request.delay_bound):
        raise InfeasiblePathError("path violates the delay bound")
    if not check_bandwidth(path, state, request.rate):
        raise InfeasiblePathError("path lacks residual bandwidth for the request rate")
    return SliceInstance(
        slice_id=request.id,
        request_id=request.id,
        path=path,
        load=request.rate,
        slice_type=request.demand_type,
        expiry=request.expiry,
    )


def evaluate_assignment(
    assignment: Assignment,
    graph: NetworkGraph,
    state: ResidualState,
    denominator: str = "links",
) -> ObjectiveValues:
    """Total admitted-slice cost plus fairness of the post-assignment state."""
    cost = 0.0
    for rid in sorted(assignment):
        cost += slice_cost(assignment[rid].path, graph)
    return ObjectiveValues(cost=cost, fairness=jain_fairness(state, denominator=denominator))
