"""Poisson slice-request generation and the backlog queue."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

DEMAND_TYPES = ("eMBB", "URLLC")

# Base request attributes are shaped N(mean, variance) with variance 0.1 and
# then scaled; sigma is the standard deviation of that base shape.
BASE_SIGMA = math.sqrt(0.1)


class UnknownRequestError(KeyError):
    pass


@dataclass(frozen=True)
class Request:
    id: int
    source: int
    destination: int
    rate: float
    delay_bound: float
    demand_type: str
    arrival_slot: int
    lifetime: int

    def __post_init__(self):
        if self.source == self.destination:
            raise ValueError(f"request {self.id}: source == destination")
        if not self.rate > 0:
            raise ValueError(f"request {self.id}: rate must be > 0")
        if not self.delay_bound > 0:
            raise ValueError(f"request {self.id}: delay bound must be > 0")
        if self.lifetime < 1:
            raise ValueError(f"request {self.id}: lifetime must be >= 1")

    @property
    def expiry(self) -> int:
        """First slot in which the request is no longer usable."""
        return self.arrival_slot + self.lifetime


class ArrivalProcess:
    """Poisson arrivals; a pure function of (seed, slot).

    Rates, delay bounds and lifetimes are scaled transforms of the base
    normal shapes: rate = rate_scale*|N(0, 0.1)|, delay = delay_scale*N(1, 0.1)
    (floored at a small epsilon), lifetime = round(lifetime_scale*N(1, 0.1))
    floored at 1.
    """

    # request ids are <slot>*ID_STRIDE + index within the slot
    ID_STRIDE = 10_000

    def __init__(
        self,
        node_count: int,
        lam: float,
        rate_scale: float = 100.0,
        delay_scale: float = 10.0,
        lifetime_scale: float = 5.0,
        seed: int = 0,
    ):
        if lam < 0:
            raise ValueError(f"arrival rate must be >= 0, got {lam}")
        if node_count < 2:
            raise ValueError("need at least 2 nodes to draw source/destination pairs")
        self.node_count = node_count
        self.lam = lam
        self.rate_scale = rate_scale
        self.delay_scale = delay_scale
        self.lifetime_scale = lifetime_scale
        self.seed = seed

    def sample(self, slot: int) -> list[Request]:
        rng = np.random.default_rng((self.seed, slot))
        count = int(rng.poisson(self.lam))
        out = []
        for i in range(count):
            src, dst = (int(v) for v in rng.choice(self.node_count, size=2, replace=False))
            rate = max(self.rate_scale * abs(float(rng.normal(0.0, BASE_SIGMA))), 1e-6)
            delay = self.delay_scale * max(float(rng.normal(1.0, BASE_SIGMA)), 1e-6)
            lifetime = max(1, round(self.lifetime_scale * float(rng.normal(1.0, BASE_SIGMA))))
            dtype = DEMAND_TYPES[int(rng.integers(len(DEMAND_TYPES)))]
            out.append(
                Request(
                    id=slot * self.ID_STRIDE + i,
                    source=src,
                    destination=dst,
                    rate=rate,
                    delay_bound=delay,
                    demand_type=dtype,
                    arrival_slot=slot,
                    lifetime=lifetime,
                )
            )
        return out


class TraceProcess:
    """Replays a fixed request list instead of sampling."""

    def __init__(self, requests: list[Request]):
        self._by_slot: dict[int, list[Request]] = {}
        for r in requests:
            self._by_slot.setdefault(r.arrival_slot, []).append(r)
        for slot_reqs in self._by_slot.values():
            slot_reqs.sort(key=lambda r: r.id)

    def sample(self, slot: int) -> list[Request]:
        return list(self._by_slot.get(slot, []))


@dataclass
class RequestQueue:
    """FIFO backlog of unserved, unexpired requests."""

    pending: list[Request] = field(default_factory=list)
    current_slot: int = 0

    def enqueue_and_evict(self, new_requests: list[Request], current_slot: int) -> list[Request]:
        """Add arrivals, drop expired requests and return them (SLA violations)."""
        self.current_slot = current_slot
        merged = self.pending + sorted(new_requests, key=lambda r: (r.arrival_slot, r.id))
        ids = [r.id for r in merged]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate request id in queue")
        evicted = [r for r in merged if r.expiry <= current_slot]
        self.pending = [r for r in merged if r.expiry > current_slot]
        return evicted

    def remove_served(self, served_ids) -> None:
        served = set(served_ids)
        known = {r.id for r in self.pending}
        missing = served - known
        if missing:
            raise UnknownRequestError(f"unknown request ids: {sorted(missing)}")
        self.pending = [r for r in self.pending if r.id not in served]

    def ids(self) -> list[int]:
        return [r.id for r in self.pending]

    def __len__(self) -> int:
        return len(self.pending)


def write_trace(requests: list[Request], path: str) -> None:
    with open(path, "w") as fh:
        for r in sorted(requests, key=lambda r: (r.arrival_slot, r.id)):
            fh.write(
                f"req {r.id} {r.arrival_slot} {r.lifetime} {r.source} {r.destination} "
                f"{r.rate!r} {r.delay_bound!r} {r.demand_type}\n"
            )


def read_trace(path: str) -> list[Request]:
    out = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            row = raw.strip()
            if not row:
                continue
            parts = row.split()
            if len(parts) != 9 or parts[0] != "req":
                raise ValueError(
                    f"line {lineno}: expected 'req <id> <a> <h> <src> <dst> <b> <d> <type>'"
                )
            try:
                out.append(
                    Request(
                        id=int(parts[1]),
                        arrival_slot=int(parts[2]),
                        lifetime=int(parts[3]),
                        source=int(parts[4]),
                        destination=int(parts[5]),
                        rate=float(parts[6]),
                        delay_bound=float(parts[7]),
                        demand_type=parts[8],
                    )
                )
            except ValueError as exc:
                raise ValueError(f"line {lineno}: {exc}") from None
    return out
