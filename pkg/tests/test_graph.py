import io

import pytest

from graphscan import (
    EdgeList,
    Graph,
    ParseError,
    build_graph,
    edge_index,
    is_graph_cache,
    load_graph,
    parse_edge_list,
    save_graph,
)
from conftest import TWO_COMMUNITIES


def test_parse_basic():
    el = parse_edge_list("0 1\n1 2\n")
    assert el.n_hint == 3
    assert el.edges == [(0, 1), (1, 2)]


def test_parse_comments_blanks_and_tabs():
    text = "# header\n\n0\t1\n  2 3\n\n  # indented comment\n"
    el = parse_edge_list(text)
    assert el.edges == [(0, 1), (2, 3)]


def test_parse_bytes_and_file_objects():
    data = b"0 1\n1 2\n"
    assert parse_edge_list(data).edges == parse_edge_list(io.BytesIO(data)).edges


def test_parse_duplicate_edges_collapse():
    el = parse_edge_list("0 1\n1 0\n0 1\n")
    assert el.edges == [(0, 1)]


def test_parse_self_loop_dropped_but_vertex_kept():
    el = parse_edge_list("5 5\n0 1\n")
    # vertex 5 must survive as an isolated vertex (dense id 2)
    assert el.n_hint == 3
    assert el.edges == [(0, 1)]
    assert list(el.orig_ids) == [0, 1, 5]


def test_parse_remaps_sparse_ids_preserving_order():
    el = parse_edge_list("100 7\n1000000 100\n")
    # sorted original ids 7,100,1000000 -> 0,1,2
    assert el.edges == [(0, 1), (1, 2)]
    assert list(el.orig_ids) == [7, 100, 1000000]


def test_parse_error_reports_line_number():
    with pytest.raises(ParseError) as ei:
        parse_edge_list("0 1\nnope\n")
    assert ei.value.line == 2
    assert "line 2" in str(ei.value)

    with pytest.raises(ParseError) as ei:
        parse_edge_list("0 1 2\n")
    assert ei.value.line == 1

    with pytest.raises(ParseError):
        parse_edge_list("-1 4\n")


def test_build_graph_empty():
    g = build_graph(EdgeList(n_hint=0, edges=[]))
    assert g.n == 0 and g.m == 0
    assert list(g.vertex_offsets) == [0]


def test_build_graph_csr_invariants(two_communities):
    g = two_communities
    assert g.n == 14 and g.m == 23
    assert g.vertex_offsets[0] == 0 and g.vertex_offsets[g.n] == 2 * g.m
    for v in range(g.n):
        run = list(g.neighbors(v))
        assert run == sorted(run)
        assert len(run) == len(set(run))
        assert v not in run
    # adjacency is symmetric
    pairs = {(v, w) for v in range(g.n) for w in g.neighbors(v)}
    assert all((w, v) in pairs for v, w in pairs)


def test_degree_oriented_edge_list(two_communities):
    g = two_communities
    seen = set()
    prev = None
    for k in range(g.m):
        a, b = g.edge_list[2 * k], g.edge_list[2 * k + 1]
        da, db = g.degree(a), g.degree(b)
        assert (da, a) < (db, b)
        assert (min(a, b), max(a, b)) not in seen
        seen.add((min(a, b), max(a, b)))
        # grouped by owner ascending, neighbor ascending within a group
        if prev is not None:
            assert prev <= (a, b)
        prev = (a, b)
    assert len(seen) == g.m


def test_edge_ids_cover_both_directions(two_communities):
    g = two_communities
    hits = [0] * g.m
    for v in range(g.n):
        for i in range(g.vertex_offsets[v], g.vertex_offsets[v + 1]):
            hits[g.edge_ids[i]] += 1
    assert all(h == 2 for h in hits)


def test_endpoints_match_edge_list(two_communities):
    g = two_communities
    for k in range(g.m):
        a, b = g.endpoints(k)
        assert (a, b) == (g.edge_list[2 * k], g.edge_list[2 * k + 1])


def test_edge_index(two_communities):
    g = two_communities
    for k in range(g.m):
        a, b = g.endpoints(k)
        assert edge_index(g, a, b) == k
        assert edge_index(g, b, a) == k
    assert edge_index(g, 3, 5) is None
    assert edge_index(g, 0, 0) is None
    with pytest.raises(IndexError):
        edge_index(g, 0, 99)


def test_build_graph_rejects_bad_edges():
    with pytest.raises(ValueError):
        build_graph(EdgeList(n_hint=2, edges=[(0, 0)]))
    with pytest.raises(ValueError):
        build_graph(EdgeList(n_hint=2, edges=[(0, 1), (0, 1)]))
    with pytest.raises(ValueError):
        build_graph(EdgeList(n_hint=1, edges=[(0, -1)]))


def test_isolated_vertices_from_n_hint():
    g = build_graph(EdgeList(n_hint=5, edges=[(0, 1)]))
    assert g.n == 5
    assert [g.degree(v) for v in range(5)] == [1, 1, 0, 0, 0]


def test_cache_roundtrip(tmp_path, two_communities):
    g = two_communities
    path = str(tmp_path / "g.bin")
    save_graph(g, path)
    assert is_graph_cache(path)
    h = load_graph(path)
    assert h.n == g.n and h.m == g.m
    assert h.vertex_offsets == g.vertex_offsets
    assert h.adjacency == g.adjacency
    assert h.edge_ids == g.edge_ids
    assert h.edge_list == g.edge_list
    assert h.orig_ids == g.orig_ids


def test_cache_rejects_garbage(tmp_path):
    path = tmp_path / "junk.bin"
    path.write_bytes(b"not a graph")
    assert not is_graph_cache(str(path))
    with pytest.raises(ValueError):
        load_graph(str(path))


def test_cache_rejects_truncation(tmp_path, two_communities):
    path = tmp_path / "g.bin"
    save_graph(two_communities, str(path))
    data = path.read_bytes()
    path.write_bytes(data[: len(data) // 2])
    with pytest.raises(ValueError):
        load_graph(str(path))


def test_original_ids_flow_to_graph():
    el = parse_edge_list("10 20\n20 30\n")
    g = build_graph(el)
    assert list(g.orig_ids) == [10, 20, 30]
