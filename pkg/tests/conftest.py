import numpy as np
import pytest

from slicesim.demand import Request
from slicesim.topology import LinkAttr, NetworkGraph


def make_graph(node_count, edges):
    """edges: list of (a, b, capacity, delay, cost)."""
    return NetworkGraph(node_count, [LinkAttr(*e) for e in edges])


@pytest.fixture
def triangle():
    # 0-1, 1-2, 0-2
    return make_graph(
        3,
        [
            (0, 1, 100.0, 1.0, 3.0),
            (1, 2, 100.0, 1.0, 5.0),
            (0, 2, 100.0, 1.0, 20.0),
        ],
    )


@pytest.fixture
def path3():
    # line 0-1-2
    return make_graph(3, [(0, 1, 100.0, 2.0, 3.0), (1, 2, 100.0, 3.0, 5.0)])


@pytest.fixture
def k4():
    edges = []
    cost = iter([3.0, 5.0, 7.0, 11.0, 13.0, 17.0])
    for a in range(4):
        for b in range(a + 1, 4):
            edges.append((a, b, 100.0, 1.0, next(cost)))
    return make_graph(4, edges)


def make_request(
    id=0,
    source=0,
    destination=2,
    rate=1.0,
    delay_bound=1000.0,
    demand_type="eMBB",
    arrival_slot=0,
    lifetime=10,
):
    return Request(id, source, destination, rate, delay_bound, demand_type, arrival_slot, lifetime)


def dfs_simple_paths(graph, src, dst, max_hops=None):
    """Independent exhaustive oracle: all simple paths as node tuples."""
    if max_hops is None:
        max_hops = graph.node_count - 1
    out = []

    def walk(node, visited, nodes):
        if node == dst:
            out.append(tuple(nodes))
            return
        if len(nodes) - 1 >= max_hops:
            return
        for nbr, _lid in graph.neighbors(node):
            if nbr not in visited:
                visited.add(nbr)
                nodes.append(nbr)
                walk(nbr, visited, nodes)
                nodes.pop()
                visited.remove(nbr)

    walk(src, {src}, [src])
    return out


def random_small_graph(rng: np.random.Generator, max_nodes=6):
    from slicesim.topology import generate_random_graph, max_link_count

    n = int(rng.integers(2, max_nodes + 1))
    m = int(rng.integers(n - 1, max_link_count(n) + 1))
    return generate_random_graph(
        n,
        m,
        capacity_range=(5.0, 50.0),
        delay_range=(1.0, 10.0),
        cost_range=(1.0, 20.0),
        seed=int(rng.integers(0, 2**31)),
    )
