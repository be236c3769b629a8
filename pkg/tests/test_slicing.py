import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from slicesim.slicing import (
    InfeasiblePathError,
    Path,
    build_slice,
    check_bandwidth,
    check_latency,
    enumerate_feasible_paths,
    evaluate_assignment,
    hypothetical_fairness,
    jain_fairness,
    jain_of_utilizations,
    path_delay,
    slice_cost,
)
from slicesim.topology import ResidualState, generate_random_graph

from conftest import dfs_simple_paths, make_graph, make_request, random_small_graph


class TestPathType:
    def test_rejects_loop(self):
        with pytest.raises(InfeasiblePathError):
            Path((0, 1), (0, 1, 0))

    def test_rejects_length_mismatch(self):
        with pytest.raises(InfeasiblePathError):
            Path((0,), (0, 1, 2))


class TestEnumeration:
    def test_triangle_two_paths_in_bfs_order(self, triangle):
        state = ResidualState(triangle)
        paths = enumerate_feasible_paths(triangle, state, make_request(source=0, destination=2))
        assert [p.nodes for p in paths] == [(0, 2), (0, 1, 2)]

    def test_line_graph_unique_path(self, path3):
        state = ResidualState(path3)
        paths = enumerate_feasible_paths(path3, state, make_request(source=0, destination=2))
        assert [p.nodes for p in paths] == [(0, 1, 2)]

    def test_k4_five_paths(self, k4):
        # exhaustive simple-path count between any K4 pair is 5
        state = ResidualState(k4)
        paths = enumerate_feasible_paths(k4, state, make_request(source=0, destination=3))
        assert len(paths) == 5
        assert len(dfs_simple_paths(k4, 0, 3)) == 5

    def test_bandwidth_filter_applies(self, triangle):
        state = ResidualState(triangle)
        state.reserve([2], 95.0, "hog", expiry=99)  # link 0-2
        paths = enumerate_feasible_paths(
            triangle, state, make_request(source=0, destination=2, rate=10.0)
        )
        assert [p.nodes for p in paths] == [(0, 1, 2)]

    def test_latency_filter_applies(self, triangle):
        state = ResidualState(triangle)
        paths = enumerate_feasible_paths(
            triangle, state, make_request(source=0, destination=2, delay_bound=1.5)
        )
        assert [p.nodes for p in paths] == [(0, 2)]

    def test_max_paths_truncates(self, k4):
        state = ResidualState(k4)
        paths = enumerate_feasible_paths(
            k4, state, make_request(source=0, destination=3), max_paths=2
        )
        assert len(paths) == 2

    def test_max_hops_limits(self, k4):
        state = ResidualState(k4)
        paths = enumerate_feasible_paths(
            k4, state, make_request(source=0, destination=3), max_hops=1
        )
        assert [p.nodes for p in paths] == [(0, 3)]

    def test_order_is_hops_then_lexicographic(self, k4):
        state = ResidualState(k4)
        paths = enumerate_feasible_paths(k4, state, make_request(source=0, destination=3))
        keys = [(p.hops, p.nodes) for p in paths]
        assert keys == sorted(keys)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 2**31))
    def test_matches_dfs_oracle_on_random_graphs(self, seed):
        rng = np.random.default_rng(seed)
        graph = random_small_graph(rng)
        state = ResidualState(graph)
        src, dst = rng.choice(graph.node_count, size=2, replace=False)
        req = make_request(source=int(src), destination=int(dst))
        got = {p.nodes for p in enumerate_feasible_paths(graph, state, req, max_paths=10**6)}
        want = set(dfs_simple_paths(graph, int(src), int(dst)))
        assert got == want

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**31))
    def test_returned_paths_satisfy_both_checks(self, seed):
        rng = np.random.default_rng(seed)
        graph = random_small_graph(rng)
        state = ResidualState(graph)
        # occupy one random link partially
        lid = int(rng.integers(graph.link_count))
        state.reserve([lid], graph.links[lid].capacity * 0.7, "x", expiry=99)
        src, dst = rng.choice(graph.node_count, size=2, replace=False)
        req = make_request(
            source=int(src),
            destination=int(dst),
            rate=float(rng.uniform(0.1, 20.0)),
            delay_bound=float(rng.uniform(1.0, 25.0)),
        )
        for p in enumerate_feasible_paths(graph, state, req):
            assert check_bandwidth(p, state, req.rate)
            assert check_latency(p, graph, req.delay_bound)


class TestChecks:
    def test_bandwidth_boundary(self, path3):
        state = ResidualState(path3)
        state.reserve([0], 90.0, "a", expiry=99)  # residuals [10, 100]
        state.reserve([1], 95.0, "b", expiry=99)  # residuals [10, 5]
        path = Path((0, 1), (0, 1, 2))
        assert not check_bandwidth(path, state, 6.0)
        assert check_bandwidth(path, state, 5.0)

    def test_bandwidth_zero_rate_empty_path(self, path3):
        state = ResidualState(path3)
        assert check_bandwidth(Path((), (0,)), state, 0.0)

    def test_latency_boundary(self, path3):
        path = Path((0, 1), (0, 1, 2))  # delays 2 + 3
        assert not check_latency(path, path3, 4.0)
        assert check_latency(path, path3, 5.0)

    def test_single_link_latency(self, path3):
        assert check_latency(Path((0,), (0, 1)), path3, 10.0)


class TestCost:
    def test_two_link_sum(self, path3):
        assert slice_cost(Path((0, 1), (0, 1, 2)), path3) == 8.0

    def test_single_link(self, triangle):
        assert slice_cost(Path((2,), (0, 2)), triangle) == 20.0

    def test_three_links(self):
        g = make_graph(4, [(0, 1, 1, 1, 1.0), (1, 2, 1, 1, 20.0), (2, 3, 1, 1, 7.0)])
        assert slice_cost(Path((0, 1, 2), (0, 1, 2, 3)), g) == 28.0

    def test_additive_under_concatenation(self, k4):
        whole = slice_cost(Path((0, 3), (0, 1, 2)), k4)  # links 0-1, 1-2
        assert whole == slice_cost(Path((0,), (0, 1)), k4) + slice_cost(Path((3,), (1, 2)), k4)


class TestJain:
    def test_equal_shares_give_one(self):
        assert jain_of_utilizations([0.5, 0.5, 0.5]) == 1.0

    def test_single_user_gives_quarter(self):
        assert jain_of_utilizations([1.0, 0.0, 0.0, 0.0]) == 0.25

    def test_two_value_example(self):
        # (0.2+0.4)^2 / (2 * (0.04+0.16)) = 0.36/0.4
        assert abs(jain_of_utilizations([0.2, 0.4]) - 0.9) < 1e-15

    def test_idle_network_is_one(self, triangle):
        assert jain_fairness(ResidualState(triangle)) == 1.0

    def test_slices_denominator(self, triangle):
        state = ResidualState(triangle)
        state.reserve([0], 50.0, "a", expiry=99)
        u = state.utilizations()
        expected = (u.sum() ** 2) / (1 * (u**2).sum())
        assert abs(jain_fairness(state, denominator="slices") - expected) < 1e-12

    @settings(max_examples=200, deadline=None)
    @given(
        st.lists(st.floats(min_value=0.0, max_value=1.0, allow_nan=False), min_size=1, max_size=24)
    )
    def test_range_bounds(self, values):
        f = jain_of_utilizations(values)
        if any(v > 0 for v in values):
            assert 1.0 / len(values) - 1e-12 <= f <= 1.0 + 1e-12
        else:
            assert f == 1.0

    @settings(max_examples=100, deadline=None)
    @given(
        st.lists(
            st.floats(min_value=1e-6, max_value=1.0, allow_nan=False), min_size=1, max_size=24
        ),
        st.floats(min_value=0.01, max_value=1.0),
    )
    def test_scale_invariance(self, values, c):
        scaled = [v * c for v in values]
        assert abs(jain_of_utilizations(values) - jain_of_utilizations(scaled)) < 1e-12

    @settings(max_examples=100, deadline=None)
    @given(
        st.lists(
            st.floats(min_value=0.0, max_value=1.0, allow_nan=False), min_size=2, max_size=24
        )
    )
    def test_equals_one_iff_all_equal(self, values):
        f = jain_of_utilizations(values)
        if max(values) > 0 and max(values) - min(values) > 1e-9:
            assert f < 1.0 - 1e-15
        if max(values) == min(values):
            assert abs(f - 1.0) < 1e-12


class TestBuildSlice:
    def test_field_mapping(self, path3):
        state = ResidualState(path3)
        req = make_request(id=9, rate=5.0, arrival_slot=0, lifetime=3, demand_type="URLLC")
        path = Path((0, 1), (0, 1, 2))
        inst = build_slice(req, path, 0, path3, state)
        assert inst.load == 5.0
        assert inst.expiry == 3
        assert inst.slice_type == "URLLC"
        assert inst.request_id == 9

    def test_expired_request_rejected(self, path3):
        state = ResidualState(path3)
        req = make_request(arrival_slot=0, lifetime=2)
        with pytest.raises(InfeasiblePathError):
            build_slice(req, Path((0, 1), (0, 1, 2)), 2, path3, state)

    def test_bandwidth_violation_rejected(self, path3):
        state = ResidualState(path3)
        state.reserve([0], 99.0, "hog", expiry=99)
        with pytest.raises(InfeasiblePathError):
            build_slice(make_request(rate=5.0), Path((0, 1), (0, 1, 2)), 0, path3, state)

    def test_wrong_endpoints_rejected(self, path3):
        state = ResidualState(path3)
        with pytest.raises(InfeasiblePathError):
            build_slice(
                make_request(source=0, destination=1), Path((0, 1), (0, 1, 2)), 0, path3, state
            )


class TestEvaluateAssignment:
    def test_empty_idle(self, triangle):
        state = ResidualState(triangle)
        values = evaluate_assignment({}, triangle, state)
        assert values.cost == 0.0 and values.fairness == 1.0

    def test_single_slice_cost(self, path3):
        state = ResidualState(path3)
        req = make_request(rate=2.0)
        inst = build_slice(req, Path((0, 1), (0, 1, 2)), 0, path3, state)
        state.reserve(inst.path.link_ids, inst.load, inst.slice_id, inst.expiry)
        values = evaluate_assignment({req.id: inst}, path3, state)
        assert values.cost == 8.0
        assert 0.0 < values.fairness <= 1.0

    def test_fairness_in_link_bound_on_table1_graph(self):
        graph = generate_random_graph(8, 12, seed=6)
        state = ResidualState(graph)
        state.reserve([0, 3], 40.0, "a", expiry=99)
        state.reserve([5], 80.0, "b", expiry=99)
        values = evaluate_assignment({}, graph, state)
        assert 1.0 / 12 <= values.fairness <= 1.0

    def test_hypothetical_fairness_matches_commit(self, triangle):
        state = ResidualState(triangle)
        state.reserve([0], 10.0, "x", expiry=99)
        path = Path((2,), (0, 2))
        hypo = hypothetical_fairness(state, path, 25.0)
        state.reserve(path.link_ids, 25.0, "y", expiry=99)
        assert abs(hypo - jain_fairness(state)) < 1e-12


def test_path_delay_sums(path3):
    assert path_delay(Path((0, 1), (0, 1, 2)), path3) == 5.0
