import os

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fedwalk.graph import (
    Graph,
    GraphFormatError,
    device_views,
    load_edge_list,
    load_labels,
    write_edge_list,
    write_id_map,
)

BLOGCATALOG = os.environ.get("FEDWALK_BLOGCATALOG")


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_load_simple_path(tmp_path):
    g = load_edge_list(write(tmp_path, "g.txt", "0 1\n1 2\n"))
    assert g.num_vertices == 3
    assert set(g.edges()) == {(0, 1), (1, 2)}
    assert g.degrees().tolist() == [1, 2, 1]


def test_reversed_duplicate_collapses(tmp_path):
    g = load_edge_list(write(tmp_path, "g.txt", "0 1\n1 0\n0 1\n"))
    assert g.num_edges == 1
    assert g.adjacency == ((1,), (0,))


def test_comments_and_blank_lines(tmp_path):
    g = load_edge_list(write(tmp_path, "g.txt", "# header\n\n0 1  # trailing\n"))
    assert g.num_edges == 1


def test_ids_are_compacted(tmp_path):
    g = load_edge_list(write(tmp_path, "g.txt", "10 20\n20 30\n"))
    assert g.num_vertices == 3
    assert g.original_ids.tolist() == [10, 20, 30]
    assert g.neighbors(1) == (0, 2)


@pytest.mark.parametrize(
    "text, match",
    [("0 1\n2\n", ":2:"), ("0 x\n", "non-integer"), ("0 1 0.5\n", "two vertex ids"), ("-1 2\n", "negative")],
)
def test_malformed_lines(tmp_path, text, match):
    with pytest.raises(GraphFormatError, match=match):
        load_edge_list(write(tmp_path, "g.txt", text))


def test_self_loop_rejected(tmp_path):
    with pytest.raises(GraphFormatError, match="self-loop"):
        load_edge_list(write(tmp_path, "g.txt", "0 1\n2 2\n"))


def test_missing_file():
    with pytest.raises(FileNotFoundError):
        load_edge_list("/nonexistent/edges.txt")


def test_invalid_adjacency_rejected():
    with pytest.raises(GraphFormatError, match="symmetric"):
        Graph(((1,), ()))
    with pytest.raises(GraphFormatError, match="self-loop"):
        Graph(((0,),))


def test_labels(tmp_path, path3):
    ls = load_labels(write(tmp_path, "l.txt", "0 3,5\n2 1\n"), path3)
    assert ls.labels[0] == {3, 5}
    assert ls.labels[1] == frozenset()
    assert ls.num_labels == 6
    assert ls.labeled_vertices() == [0, 2]


def test_empty_label_file(tmp_path, path3):
    ls = load_labels(write(tmp_path, "l.txt", ""), path3)
    assert all(not s for s in ls.labels)
    assert ls.num_labels == 0


def test_label_vertex_out_of_range(tmp_path, path3):
    with pytest.raises(GraphFormatError, match="not in the graph"):
        load_labels(write(tmp_path, "l.txt", "7 1\n"), path3)


def test_labels_use_original_ids(tmp_path):
    g = load_edge_list(write(tmp_path, "g.txt", "1 2\n2 3\n"))
    ls = load_labels(write(tmp_path, "l.txt", "3 0\n"), g)
    assert ls.labels[2] == {0}


def test_device_views(path3, k4):
    views = device_views(path3)
    assert views[1].neighbors == (0, 2)
    assert all(v.degree == 3 for v in device_views(k4))


def test_isolated_vertex_view():
    g = Graph.from_edges(3, [(0, 1)])
    assert device_views(g)[2].neighbors == ()
    assert g.non_isolated() == [0, 1]


edge_lists = st.integers(2, 25).flatmap(
    lambda n: st.tuples(
        st.just(n),
        st.lists(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)).filter(lambda e: e[0] != e[1]), max_size=60),
    )
)


@given(edge_lists)
@settings(max_examples=60, deadline=None)
def test_graph_invariants(data):
    n, edges = data
    g = Graph.from_edges(n, edges)
    assert g.degrees().sum() == 2 * g.num_edges
    views = device_views(g)
    # each edge visible from exactly its two endpoints
    for u, v in g.edges():
        holders = [
            w.vertex for w in views
            if (w.vertex == u and v in w.neighbors) or (w.vertex == v and u in w.neighbors)
        ]
        assert holders == [u, v]
    for view in views:
        assert view.neighbors == g.adjacency[view.vertex]


@given(edge_lists)
@settings(max_examples=40, deadline=None)
def test_round_trip(tmp_path_factory, data):
    n, edges = data
    if not edges:
        return
    g = Graph.from_edges(n, edges)
    path = tmp_path_factory.mktemp("rt") / "g.txt"
    write_edge_list(g, str(path), header="# test")
    h = load_edge_list(str(path))
    # isolated vertices have no edge line, so compare on the non-isolated part
    keep = np.array(g.non_isolated())
    assert h.original_ids.tolist() == keep.tolist()
    relabel = {int(v): i for i, v in enumerate(keep)}
    expect = tuple(tuple(sorted(relabel[u] for u in g.adjacency[v])) for v in keep)
    assert h.adjacency == expect


def test_id_map(tmp_path):
    g = load_edge_list(write(tmp_path, "g.txt", "5 9\n"))
    out = tmp_path / "map.txt"
    write_id_map(g, str(out), header="# h")
    assert out.read_text().splitlines()[1:] == ["0 5", "1 9"]


@pytest.mark.skipif(not BLOGCATALOG, reason="set FEDWALK_BLOGCATALOG to the dataset directory")
def test_blogcatalog_shape():
    g = load_edge_list(os.path.join(BLOGCATALOG, "edges.csv"))
    assert g.num_vertices == 10312
    assert g.num_edges == 333983
    ls = load_labels(os.path.join(BLOGCATALOG, "labels.txt"), g)
    assert len({lab for s in ls.labels for lab in s}) == 39
