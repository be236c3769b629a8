"""Time-slotted simulation loop and the cost / SLA-violation metrics."""

from __future__ import annotations

from dataclasses import dataclass

from .demand import Request, RequestQueue
from .slicing import Assignment, jain_fairness, slice_cost
from .topology import NetworkGraph, ResidualState


@dataclass(frozen=True)
class SlotReport:
    slot: int
    arrivals: int
    served: int
    evicted: int
    queue_length: int
    slot_cost: float
    fairness: float
    cumulative_sla_rate: float


@dataclass(frozen=True)
class RunSummary:
    horizon: int
    generated: int
    served: int
    evicted: int
    pending_end: int
    total_cost: float
    avg_cost_per_served: float
    sla_violation_rate: float
    mean_fairness: float

    @property
    def any_served(self) -> bool:
        return self.served > 0


class Simulation:
    """Slot-stepped core shared by the batch runner and the RL environment.

    Within a slot: (1) expired reservations are released, (2) arrivals are
    sampled and enqueued, (3) expired requests are evicted and counted as
    violations, (4) the solver provisions over the pending queue, (5) served
    requests leave the queue, (6) metrics are recorded.
    """

    def __init__(
        self,
        graph: NetworkGraph,
        process,
        horizon: int,
        fairness_denominator: str = "links",
        record_events: bool = True,
    ):
        self.graph = graph
        self.process = process
        self.horizon = horizon
        self.fairness_denominator = fairness_denominator
        self.record_events = record_events
        self.state = ResidualState(graph)
        self.queue = RequestQueue()
        self.slot = 0
        self.generated = 0
        self.served = 0
        self.evicted = 0
        self.total_cost = 0.0
        self.requests: dict[int, Request] = {}
        self.events: list[str] = []
        self.reports: list[SlotReport] = []
        self._slot_open = False
        self._slot_arrivals = 0
        self._slot_evicted = 0

    @property
    def done(self) -> bool:
        return self.slot >= self.horizon

    def begin_slot(self) -> tuple[list[Request], list[Request]]:
        assert not self._slot_open, "begin_slot called twice"
        assert not self.done, "simulation past horizon"
        self.state.release_expired(self.slot)
        arrivals = self.process.sample(self.slot)
        evicted = self.queue.enqueue_and_evict(arrivals, self.slot)
        self.generated += len(arrivals)
        self.evicted += len(evicted)
        for r in arrivals:
            self.requests[r.id] = r
            if self.record_events:
                self.events.append(f"evt {self.slot} arrive {r.id}")
        if self.record_events:
            for r in evicted:
                self.events.append(f"evt {self.slot} evict {r.id}")
        self._slot_open = True
        self._slot_arrivals = len(arrivals)
        self._slot_evicted = len(evicted)
        return arrivals, evicted

    def finish_slot(self, assignment: Assignment) -> SlotReport:
        assert self._slot_open, "finish_slot without begin_slot"
        self.queue.remove_served(assignment.keys())
        slot_cost = 0.0
        for rid in sorted(assignment):
            inst = assignment[rid]
            cost = slice_cost(inst.path, self.graph)
            slot_cost += cost
            if self.record_events:
                nodes = "-".join(str(n) for n in inst.path.nodes)
                self.events.append(f"evt {self.slot} serve {rid} {nodes} {cost!r}")
        self.served += len(assignment)
        self.total_cost += slot_cost
        decided = self.served + self.evicted
        report = SlotReport(
            slot=self.slot,
            arrivals=self._slot_arrivals,
            served=len(assignment),
            evicted=self._slot_evicted,
            queue_length=len(self.queue),
            slot_cost=slot_cost,
            fairness=jain_fairness(self.state, denominator=self.fairness_denominator),
            cumulative_sla_rate=(self.evicted / decided) if decided else 0.0,
        )
        self.reports.append(report)
        self.slot += 1
        self._slot_open = False
        return report

    def pending_expiring_at(self, slot: int) -> list[Request]:
        """Requests that will be evicted once ``slot`` begins."""
        return [r for r in self.queue.pending if r.expiry <= slot]

    def summary(self) -> RunSummary:
        decided = self.served + self.evicted
        return RunSummary(
            horizon=self.horizon,
            generated=self.generated,
            served=self.served,
            evicted=self.evicted,
            pending_end=len(self.queue),
            total_cost=self.total_cost,
            avg_cost_per_served=(self.total_cost / self.served) if self.served else 0.0,
            sla_violation_rate=(self.evicted / decided) if decided else 0.0,
            mean_fairness=(
                sum(r.fairness for r in self.reports) / len(self.reports)
                if self.reports
                else 1.0
            ),
        )


@dataclass
class RunResult:
    reports: list[SlotReport]
    summary: RunSummary
    events: list[str]
    requests: dict[int, Request]


def run(
    graph: NetworkGraph,
    process,
    solver,
    horizon: int,
    fairness_denominator: str = "links",
    record_events: bool = True,
) -> RunResult:
    """Run the full horizon with one solver; deterministic per inputs."""
    sim = Simulation(
        graph,
        process,
        horizon,
        fairness_denominator=fairness_denominator,
        record_events=record_events,
    )
    while not sim.done:
        sim.begin_slot()
        assignment = solver.provision(graph, sim.state, sim.queue, sim.slot)
        sim.finish_slot(assignment)
    return RunResult(sim.reports, sim.summary(), sim.events, sim.requests)
