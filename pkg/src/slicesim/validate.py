"""Post-hoc replay validator for simulation event logs.

Independently re-derives link occupancy from the event stream and checks the
capacity, bandwidth and latency constraints at every serve, plus eviction
timing and single-service bookkeeping. Comparisons use a small tolerance so
legitimate float summation-order differences are not flagged.
"""

from __future__ import annotations

from .demand import Request
from .topology import NetworkGraph

_TOL = 1e-9


def validate_events(
    graph: NetworkGraph, requests: dict[int, Request], events: list[str]
) -> list[str]:
    """Return a list of violation descriptions; empty means the log is clean."""
    violations: list[str] = []
    occupied = [0.0] * graph.link_count
    # slice id -> (expiry, load, link ids)
    active: dict[int, tuple[int, float, tuple[int, ...]]] = {}
    served_ids: set[int] = set()
    evicted_ids: set[int] = set()
    current_slot = -1

    def advance_to(slot: int) -> None:
        nonlocal current_slot
        if slot < current_slot:
            violations.append(f"slot {slot}: events out of order (was at {current_slot})")
        current_slot = slot
        expired = [sid for sid, (expiry, _, _) in active.items() if expiry <= slot]
        for sid in expired:
            _, load, links = active.pop(sid)
            for lid in links:
                occupied[lid] -= load

    for raw in events:
        parts = raw.split()
        if len(parts) < 4 or parts[0] != "evt":
            violations.append(f"malformed event line: {raw!r}")
            continue
        slot, kind, rid = int(parts[1]), parts[2], int(parts[3])
        advance_to(slot)
        req = requests.get(rid)
        if req is None:
            violations.append(f"slot {slot}: {kind} for unknown request {rid}")
            continue
        if kind == "arrive":
            if slot != req.arrival_slot:
                violations.append(f"slot {slot}: request {rid} arrives but its arrival slot is {req.arrival_slot}")
        elif kind == "evict":
            if slot < req.expiry:
                violations.append(f"slot {slot}: request {rid} evicted before expiry {req.expiry}")
            if rid in served_ids:
                violations.append(f"slot {slot}: request {rid} evicted after being served")
            evicted_ids.add(rid)
        elif kind == "serve":
            if len(parts) != 6:
                violations.append(f"slot {slot}: malformed serve event: {raw!r}")
                continue
            nodes = [int(n) for n in parts[4].split("-")]
            logged_cost = float(parts[5])
            if rid in served_ids:
                violations.append(f"slot {slot}: request {rid} served twice")
                continue
            if rid in evicted_ids:
                violations.append(f"slot {slot}: request {rid} served after eviction")
            if not (req.arrival_slot <= slot < req.expiry):
                violations.append(
                    f"slot {slot}: request {rid} served outside its lifetime "
                    f"[{req.arrival_slot}, {req.expiry})"
                )
            if nodes[0] != req.source or nodes[-1] != req.destination:
                violations.append(f"slot {slot}: request {rid} served on wrong endpoints")
            if len(set(nodes)) != len(nodes):
                violations.append(f"slot {slot}: request {rid} path has a loop")
            links = []
            ok = True
            for a, b in zip(nodes, nodes[1:]):
                lid = graph.link_between(a, b)
                if lid is None:
                    violations.append(f"slot {slot}: request {rid} uses absent link {a}-{b}")
                    ok = False
                    break
                links.append(lid)
            if not ok:
                continue
            delay = sum(graph.links[lid].delay for lid in links)
            if delay > req.delay_bound + _TOL:
                violations.append(
                    f"slot {slot}: request {rid} path delay {delay} > bound {req.delay_bound}"
                )
            cost = sum(graph.links[lid].cost for lid in links)
            if abs(cost - logged_cost) > 1e-6:
                violations.append(
                    f"slot {slot}: request {rid} logged cost {logged_cost} != path cost {cost}"
                )
            for lid in links:
                if graph.links[lid].capacity - occupied[lid] < req.rate - _TOL:
                    violations.append(
                        f"slot {slot}: request {rid} lacks bandwidth on link {lid} "
                        f"(residual {graph.links[lid].capacity - occupied[lid]}, rate {req.rate})"
                    )
            for lid in links:
                occupied[lid] += req.rate
                if occupied[lid] > graph.links[lid].capacity + _TOL:
                    violations.append(
                        f"slot {slot}: link {lid} occupancy {occupied[lid]} exceeds "
                        f"capacity {graph.links[lid].capacity}"
                    )
            active[rid] = (req.expiry, req.rate, tuple(links))
            served_ids.add(rid)
        else:
            violations.append(f"slot {slot}: unknown event kind {kind!r}")
    return violations
