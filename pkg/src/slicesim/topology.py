"""Substrate network graph, link attributes and reservation bookkeeping."""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np


class TopologyError(ValueError):
    """Malformed graph, infeasible generator arguments or bad graph file."""


class CapacityError(RuntimeError):
    """Reservation would exceed the capacity of at least one link."""


@dataclass(frozen=True)
class LinkAttr:
    """Undirected link between nodes a < b with static attributes."""

    a: int
    b: int
    capacity: float
    delay: float
    cost: float

    def __post_init__(self):
        if self.a == self.b:
            raise TopologyError(f"self-loop on node {self.a}")
        for name in ("capacity", "delay", "cost"):
            v = getattr(self, name)
            if not math.isfinite(v) or v < 0:
                raise TopologyError(
                    f"link ({self.a},{self.b}): {name}={v!r} must be finite and >= 0"
                )

    def other(self, node: int) -> int:
        return self.b if node == self.a else self.a


class NetworkGraph:
    """Connected simple undirected graph with per-link capacity/delay/cost."""

    def __init__(self, node_count: int, links: list[LinkAttr], require_connected: bool = True):
        if node_count < 2:
            raise TopologyError(f"need at least 2 nodes, got {node_count}")
        seen: set[tuple[int, int]] = set()
        for link in links:
            if not (0 <= link.a < node_count and 0 <= link.b < node_count):
                raise TopologyError(f"link ({link.a},{link.b}) has endpoint outside 0..{node_count - 1}")
            pair = (min(link.a, link.b), max(link.a, link.b))
            if pair in seen:
                raise TopologyError(f"duplicate link between {pair[0]} and {pair[1]}")
            seen.add(pair)
        self.node_count = node_count
        self.links = list(links)
        self.adjacency: list[list[int]] = [[] for _ in range(node_count)]
        for lid, link in enumerate(self.links):
            self.adjacency[link.a].append(lid)
            self.adjacency[link.b].append(lid)
        # neighbor lists sorted by the opposite endpoint so traversals are deterministic
        for node in range(node_count):
            self.adjacency[node].sort(key=lambda lid: self.links[lid].other(node))
        self._pair_to_link = {
            (min(l.a, l.b), max(l.a, l.b)): lid for lid, l in enumerate(self.links)
        }
        if require_connected and not self.is_connected():
            raise TopologyError("graph is not connected")

    @property
    def link_count(self) -> int:
        return len(self.links)

    def link_between(self, a: int, b: int) -> int | None:
        return self._pair_to_link.get((min(a, b), max(a, b)))

    def neighbors(self, node: int) -> list[tuple[int, int]]:
        """(neighbor, link_id) pairs sorted by neighbor id."""
        return [(self.links[lid].other(node), lid) for lid in self.adjacency[node]]

    def is_connected(self) -> bool:
        if not self.links and self.node_count > 1:
            return False
        seen = {0}
        frontier = deque([0])
        while frontier:
            node = frontier.popleft()
            for lid in self.adjacency[node]:
                nxt = self.links[lid].other(node)
                if nxt not in seen:
                    seen.add(nxt)
                    frontier.append(nxt)
        return len(seen) == self.node_count

    def capacities(self) -> np.ndarray:
        return np.array([l.capacity for l in self.links], dtype=float)

    def delays(self) -> np.ndarray:
        return np.array([l.delay for l in self.links], dtype=float)

    def costs(self) -> np.ndarray:
        return np.array([l.cost for l in self.links], dtype=float)


def max_link_count(node_count: int) -> int:
    return node_count * (node_count - 1) // 2


def generate_random_graph(
    node_count: int,
    link_count: int,
    capacity_range: tuple[float, float] = (100.0, 200.0),
    delay_range: tuple[float, float] = (1.0, 10.0),
    cost_range: tuple[float, float] = (1.0, 20.0),
    seed: int = 0,
    max_attempts: int = 100_000,
) -> NetworkGraph:
    """Uniform connected G(n, m): rejection-sample m node pairs until connected.

    Deterministic for a fixed seed; attributes drawn uniformly per link in
    sorted pair order after the topology is accepted.
    """
    if link_count < node_count - 1 or link_count > max_link_count(node_count):
        raise TopologyError(
            f"link_count={link_count} infeasible for node_count={node_count} "
            f"(need {node_count - 1}..{max_link_count(node_count)})"
        )
    for lo, hi, name in (
        (*capacity_range, "capacity"),
        (*delay_range, "delay"),
        (*cost_range, "cost"),
    ):
        if lo < 0 or hi < lo:
            raise TopologyError(f"bad {name} range ({lo}, {hi})")

    pairs = [(a, b) for a in range(node_count) for b in range(a + 1, node_count)]
    rng = np.random.default_rng(seed)
    for _ in range(max_attempts):
        idx = rng.choice(len(pairs), size=link_count, replace=False)
        chosen = sorted(pairs[i] for i in idx)
        if _pairs_connected(node_count, chosen):
            break
    else:
        raise TopologyError(
            f"no connected sample after {max_attempts} attempts for G({node_count},{link_count})"
        )
    caps = rng.uniform(capacity_range[0], capacity_range[1], size=link_count)
    dels = rng.uniform(delay_range[0], delay_range[1], size=link_count)
    costs = rng.uniform(cost_range[0], cost_range[1], size=link_count)
    links = [
        LinkAttr(a, b, float(caps[i]), float(dels[i]), float(costs[i]))
        for i, (a, b) in enumerate(chosen)
    ]
    return NetworkGraph(node_count, links)


def _pairs_connected(node_count: int, pairs: list[tuple[int, int]]) -> bool:
    adj: list[list[int]] = [[] for _ in range(node_count)]
    for a, b in pairs:
        adj[a].append(b)
        adj[b].append(a)
    seen = {0}
    frontier = deque([0])
    while frontier:
        node = frontier.popleft()
        for nxt in adj[node]:
            if nxt not in seen:
                seen.add(nxt)
                frontier.append(nxt)
    return len(seen) == node_count


def save_graph(graph: NetworkGraph, path: str) -> None:
    with open(path, "w") as fh:
        fh.write(serialize_graph(graph))


def serialize_graph(graph: NetworkGraph) -> str:
    lines = [f"graph {graph.node_count} {graph.link_count}"]
    for l in graph.links:
        lines.append(f"link {l.a} {l.b} {l.capacity!r} {l.delay!r} {l.cost!r}")
    return "\n".join(lines) + "\n"


def load_graph(path: str) -> NetworkGraph:
    with open(path) as fh:
        return parse_graph(fh.read())


def parse_graph(text: str) -> NetworkGraph:
    """Parse the line-oriented graph format, raising line-numbered errors."""
    lines = [ln for ln in text.splitlines()]
    rows = [(i + 1, ln.strip()) for i, ln in enumerate(lines) if ln.strip()]
    if not rows:
        raise TopologyError("line 1: empty graph file")
    lineno, header = rows[0]
    parts = header.split()
    if len(parts) != 3 or parts[0] != "graph":
        raise TopologyError(f"line {lineno}: expected 'graph <node_count> <link_count>'")
    try:
        node_count, link_count = int(parts[1]), int(parts[2])
    except ValueError:
        raise TopologyError(f"line {lineno}: counts must be integers") from None
    links: list[LinkAttr] = []
    for lineno, row in rows[1:]:
        parts = row.split()
        if len(parts) != 6 or parts[0] != "link":
            raise TopologyError(f"line {lineno}: expected 'link <a> <b> <capacity> <delay> <cost>'")
        try:
            a, b = int(parts[1]), int(parts[2])
            cap, delay, cost = float(parts[3]), float(parts[4]), float(parts[5])
        except ValueError:
            raise TopologyError(f"line {lineno}: malformed numeric field") from None
        try:
            links.append(LinkAttr(a, b, cap, delay, cost))
        except TopologyError as exc:
            raise TopologyError(f"line {lineno}: {exc}") from None
    if len(links) != link_count:
        raise TopologyError(
            f"line {rows[0][0]}: header declares {link_count} links, file has {len(links)}"
        )
    try:
        return NetworkGraph(node_count, links)
    except TopologyError as exc:
        raise TopologyError(f"line {rows[0][0]}: {exc}") from None


@dataclass(frozen=True)
class Reservation:
    links: tuple[int, ...]
    load: float
    expiry: int


class ResidualState:
    """Occupied-capacity bookkeeping for a graph's links.

    ``occupied`` is always recomputed as the sum of active reservation loads
    (in reservation insertion order) rather than patched incrementally, so
    releasing a reservation restores the exact prior float values.
    """

    def __init__(self, graph: NetworkGraph):
        self.capacity = graph.capacities()
        self.occupied = np.zeros(graph.link_count, dtype=float)
        self.reservations: dict[object, Reservation] = {}

    def residual(self, link_id: int) -> float:
        return float(self.capacity[link_id] - self.occupied[link_id])

    def residuals(self) -> np.ndarray:
        return self.capacity - self.occupied

    def utilizations(self) -> np.ndarray:
        with np.errstate(invalid="ignore", divide="ignore"):
            u = np.where(self.capacity > 0, self.occupied / self.capacity, 0.0)
        return u

    def reserve(self, link_ids, load: float, slice_id, expiry: int) -> None:
        """Atomically reserve ``load`` on every listed link until ``expiry``."""
        if slice_id in self.reservations:
            raise CapacityError(f"slice id {slice_id!r} already holds a reservation")
        if load < 0 or not math.isfinite(load):
            raise CapacityError(f"bad load {load!r}")
        link_ids = tuple(link_ids)
        if len(set(link_ids)) != len(link_ids):
            # the per-link feasibility check below assumes one pass per link
            raise CapacityError(f"duplicate link id in reservation {slice_id!r}")
        for lid in link_ids:
            if self.occupied[lid] + load > self.capacity[lid]:
                raise CapacityError(
                    f"link {lid}: occupied {self.occupied[lid]} + load {load} "
                    f"exceeds capacity {self.capacity[lid]}"
                )
        self.reservations[slice_id] = Reservation(link_ids, load, expiry)
        self._recompute()

    def release_expired(self, current_slot: int) -> list[object]:
        """Drop reservations with expiry <= current_slot; return their ids."""
        dropped = [sid for sid, res in self.reservations.items() if res.expiry <= current_slot]
        for sid in dropped:
            del self.reservations[sid]
        if dropped:
            self._recompute()
        return dropped

    def release(self, slice_id) -> None:
        if slice_id not in self.reservations:
            raise KeyError(slice_id)
        del self.reservations[slice_id]
        self._recompute()

    def _recompute(self) -> None:
        occ = np.zeros_like(self.occupied)
        for res in self.reservations.values():
            for lid in res.links:
                occ[lid] += res.load
        self.occupied = occ

    def copy(self) -> "ResidualState":
        dup = object.__new__(ResidualState)
        dup.capacity = self.capacity
        dup.occupied = self.occupied.copy()
        dup.reservations = dict(self.reservations)
        return dup
