import itertools
import random

import pytest

from dagbench.model import (
    CycleError,
    GraphError,
    Resource,
    Subtask,
    TaskGraph,
    all_topological_orders,
    count_linear_extensions,
    depths,
    graph_depth,
    graph_width,
    is_topological_order,
    levels,
    node_depth,
    topological_sort,
    validate_graph,
)
from dagbench.synth import random_dag

from conftest import chain, diamond


def longest_path_depth(graph, node):
    """Oracle: enumerate every path ending at ``node`` and keep the longest."""
    preds = graph.predecessors[node]
    if not preds:
        return 1
    return 1 + max(longest_path_depth(graph, p) for p in preds)


def brute_orders(graph):
    return sorted(list(p) for p in itertools.permutations(graph.nodes) if is_topological_order(graph, p))


def test_validate_minimal_dag():
    assert validate_graph(TaskGraph.from_edges("AB", [("A", "B")])) == []


def test_validate_reports_cycle():
    report = validate_graph(TaskGraph.from_edges("AB", [("A", "B"), ("B", "A")]))
    assert any("cycle" in line for line in report)


def test_validate_reports_unknown_node():
    report = validate_graph(TaskGraph.from_edges("AB", [("A", "Z")]))
    assert any("unknown node" in line and "'Z'" in line for line in report)


def test_validate_reports_self_loop_and_bad_topo():
    assert any("self-loop" in line for line in validate_graph(TaskGraph.from_edges("A", [("A", "A")])))
    g = TaskGraph.from_edges("AB", [("A", "B")], successful_topo=[["B", "A"]])
    assert validate_graph(g) == ["successful_topo[0] is not a topological order"]


def test_duplicate_edges_collapse():
    g = TaskGraph.from_edges("AB", [("A", "B"), ("A", "B")])
    assert g.edge_list() == [("A", "B")]
    assert g.edges["B"] == ()


def test_graph_equality_ignores_edge_listing_order():
    g1 = TaskGraph("ABC", {"A": ("C", "B")})
    g2 = TaskGraph.from_edges("CBA", [("A", "B"), ("A", "C")])
    assert g1 == g2


def test_depth_examples():
    assert node_depth(TaskGraph(("A",)), "A") == 1
    assert node_depth(chain(2), "c1") == 2
    assert node_depth(diamond(), "D") == 3
    assert depths(diamond()) == {"A": 1, "B": 2, "C": 2, "D": 3}


def test_depth_of_unknown_node():
    with pytest.raises(GraphError):
        node_depth(diamond(), "Q")


def test_depth_uses_longest_path():
    g = TaskGraph.from_edges("ABC", [("A", "B"), ("B", "C"), ("A", "C")])
    assert node_depth(g, "C") == 3


def test_width_examples():
    assert graph_width(chain(5)) == 1
    assert graph_width(diamond()) == 2
    assert graph_width(TaskGraph(("A", "B", "C"))) == 3
    with pytest.raises(GraphError):
        graph_width(TaskGraph(()))


def test_levels_group_by_depth():
    assert levels(diamond()) == [["A"], ["B", "C"], ["D"]]


def test_topological_order_examples():
    assert all_topological_orders(chain(2)) == [["c0", "c1"]]
    assert all_topological_orders(TaskGraph(("A", "B"))) == [["A", "B"], ["B", "A"]]
    assert all_topological_orders(diamond()) == [["A", "B", "C", "D"], ["A", "C", "B", "D"]]


def test_topological_sort_rejects_cycle():
    with pytest.raises(GraphError):
        topological_sort(TaskGraph.from_edges("AB", [("A", "B"), ("B", "A")]))
    with pytest.raises(GraphError):
        all_topological_orders(TaskGraph.from_edges("ABC", [("A", "B"), ("B", "C"), ("C", "A")]))


def test_cycle_error_names_path():
    err = CycleError(["A", "B", "A"])
    assert str(err) == "cycle: A -> B -> A"


def test_enumeration_cap():
    with pytest.raises(GraphError):
        all_topological_orders(TaskGraph(tuple(f"n{i}" for i in range(13))))
    assert len(all_topological_orders(chain(13), cap=13)) == 1


def test_orders_match_permutation_filter():
    rng = random.Random(7)
    for _ in range(120):
        g = random_dag(rng, rng.randint(0, 6), rng.random())
        expected = brute_orders(g)
        got = all_topological_orders(g)
        assert got == expected
        assert len({tuple(o) for o in got}) == len(got)
        assert count_linear_extensions(g) == len(expected)


def test_count_linear_extensions_antichain():
    assert count_linear_extensions(TaskGraph(tuple("ABCDEFGHIJKLMN"))) == 87178291200


def test_depth_matches_path_oracle_and_grows_along_edges():
    rng = random.Random(11)
    for _ in range(200):
        g = random_dag(rng, rng.randint(1, 9), rng.random())
        d = depths(g)
        for n in g.nodes:
            assert d[n] == longest_path_depth(g, n)
        for u, v in g.edge_set():
            assert d[v] > d[u]
        assert graph_depth(g) == max(d.values())
        assert sum(len(lv) for lv in levels(g)) == len(g.nodes)


def test_resource_category_rules():
    assert Resource("xlsx_path", "a.xlsx").matches(Resource("xlsx_path"))
    assert not Resource("xlsx_path").matches(Resource("pdf_path"))
    with pytest.raises(ValueError):
        Resource("has space")
    with pytest.raises(ValueError):
        Resource("")


def test_subtask_instantiate_and_problems():
    s = Subtask("s1", "Open '{xlsx_path}'.", "Excel", ({"xlsx_path": "a.xlsx"},), input_resources=("xlsx_path",))
    assert s.instantiate() == "Open 'a.xlsx'."
    assert s.instantiate({"xlsx_path": "b.xlsx"}) == "Open 'b.xlsx'."
    assert s.problems() == []
    with pytest.raises(KeyError, match="s1"):
        s.instantiate({"other": "x"})
    bad = Subtask("s2", "Open '{p}' and '{q}'.", "Excel", ({"p": "x"},), input_resources=("r", "r"))
    problems = bad.problems()
    assert any("lacks q" in p for p in problems)
    assert any("duplicate input" in p for p in problems)
