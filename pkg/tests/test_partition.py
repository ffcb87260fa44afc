import os

import pytest

from graphscan import (
    EdgeList,
    InfeasibleBudgetError,
    build_graph,
    check_sim,
    estimate_memory,
    load_partition,
    partition_graph,
)
from graphscan.partition import VERTEX_STATE_BYTES, store_sim
from graphscan.scan import SIM_SIMILAR, _eval_edge
from conftest import TWO_COMMUNITIES, gnm


def plan_for(g, budget, tmp_path, name="spill"):
    return partition_graph(g, budget, spill_dir=str(tmp_path / name))


def test_estimate_memory_formula():
    empty = build_graph(EdgeList(n_hint=0, edges=[]))
    single = build_graph(EdgeList(n_hint=2, edges=[(0, 1)]))
    tri = build_graph(EdgeList(n_hint=3, edges=[(0, 1), (0, 2), (1, 2)]))
    assert estimate_memory(empty) == 0
    assert estimate_memory(single) == 33
    assert estimate_memory(tri) == 87


def test_single_partition_when_budget_ample(two_communities, tmp_path):
    g = two_communities
    budget = estimate_memory(g) + VERTEX_STATE_BYTES * g.n
    plan = plan_for(g, budget, tmp_path)
    assert len(plan.partitions) == 1
    info = plan.partitions[0]
    assert (info.owned_lo, info.owned_hi) == (0, g.m)
    sub = load_partition(info)
    assert sub.local_graph.n == g.n and sub.local_graph.m == g.m


def test_owned_ranges_partition_edges(two_communities, tmp_path):
    g = two_communities
    plan = plan_for(g, VERTEX_STATE_BYTES * g.n + 400, tmp_path)
    assert len(plan.partitions) >= 2
    covered = []
    for info in plan.partitions:
        assert info.owned_lo < info.owned_hi
        covered.append((info.owned_lo, info.owned_hi))
    assert covered[0][0] == 0 and covered[-1][1] == g.m
    for (alo, ahi), (blo, bhi) in zip(covered, covered[1:]):
        assert ahi == blo


def test_budget_respected_by_every_partition(tmp_path):
    g = gnm(60, 180, seed=11)
    state = VERTEX_STATE_BYTES * g.n
    for budget in (state + 700, state + 1500, state + 4000):
        plan = plan_for(g, budget, tmp_path, name=f"b{budget}")
        assert len(plan.partitions) >= 1
        for info in plan.partitions:
            assert info.estimate_bytes + state <= budget
            assert estimate_memory(info) == info.estimate_bytes
            assert estimate_memory(load_partition(info)) == info.estimate_bytes


def test_path_graph_splits(tmp_path):
    # 64-vertex path with a budget that forces several partitions
    n = 64
    g = build_graph(EdgeList(n_hint=n, edges=[(i, i + 1) for i in range(n - 1)]))
    budget = VERTEX_STATE_BYTES * n + 200
    plan = plan_for(g, budget, tmp_path)
    assert len(plan.partitions) >= 2
    owned = set()
    for info in plan.partitions:
        rng = set(range(info.owned_lo, info.owned_hi))
        assert not (owned & rng)
        owned |= rng
    assert owned == set(range(g.m))


def test_closure_gives_full_adjacency_for_owned_endpoints(two_communities, tmp_path):
    g = two_communities
    plan = plan_for(g, VERTEX_STATE_BYTES * g.n + 420, tmp_path)
    assert len(plan.partitions) >= 2
    for info in plan.partitions:
        sub = load_partition(info)
        lg = sub.local_graph
        for k in sub.owned_local:
            for lv in (lg.edge_list[2 * k], lg.edge_list[2 * k + 1]):
                gv = sub.vmap[lv]
                local_nbrs = {sub.vmap[w] for w in lg.neighbors(lv)}
                assert local_nbrs == set(g.neighbors(gv))


def test_local_similarity_matches_global(two_communities, tmp_path):
    """Owned-edge similarity decided locally equals the full-graph decision."""
    g = two_communities
    plan = plan_for(g, VERTEX_STATE_BYTES * g.n + 420, tmp_path)
    eps = "0.6"
    from graphscan.scan import _epsilon_squared

    p, q = _epsilon_squared(eps)
    for info in plan.partitions:
        sub = load_partition(info)
        lg = sub.local_graph
        offs = lg.vertex_offsets
        for k in sub.owned_local:
            la, lb = lg.edge_list[2 * k], lg.edge_list[2 * k + 1]
            local, _ = _eval_edge(
                lg.adjacency, offs[la], offs[la + 1], offs[lb], offs[lb + 1], p, q
            )
            ga, gb = sub.vmap[la], sub.vmap[lb]
            assert local == check_sim(g, ga, gb, eps)


def test_infeasible_budget_raises_with_context(two_communities):
    g = two_communities
    with pytest.raises(InfeasibleBudgetError) as ei:
        partition_graph(g, VERTEX_STATE_BYTES * g.n + 40)
    err = ei.value
    assert err.required_bytes > err.budget_bytes
    assert "bytes" in str(err)


def test_budget_below_state_is_infeasible(two_communities):
    with pytest.raises(InfeasibleBudgetError):
        partition_graph(two_communities, VERTEX_STATE_BYTES * two_communities.n - 1)


def test_spill_roundtrip(two_communities, tmp_path):
    g = two_communities
    plan = plan_for(g, VERTEX_STATE_BYTES * g.n + 500, tmp_path)
    info = plan.partitions[0]
    sub = load_partition(info)
    assert sub.index == info.index
    assert len(sub.vmap) == info.n_local
    assert len(sub.emap) == info.m_local
    assert len(sub.sim_local) == info.m_local
    assert all(s == 0 for s in sub.sim_local)
    # vmap ascending, so local id order mirrors global order
    assert list(sub.vmap) == sorted(sub.vmap)
    # emap maps owned locals onto exactly the owned global range
    owned_globals = sorted(sub.emap[k] for k in sub.owned_local)
    assert owned_globals == list(range(info.owned_lo, info.owned_hi))


def test_store_sim_persists(two_communities, tmp_path):
    g = two_communities
    plan = plan_for(g, VERTEX_STATE_BYTES * g.n + 500, tmp_path)
    info = plan.partitions[0]
    sub = load_partition(info)
    for k in sub.owned_local:
        sub.sim_local[k] = SIM_SIMILAR
    store_sim(info, sub)
    again = load_partition(info)
    assert bytes(again.sim_local) == bytes(sub.sim_local)


def test_manifest_written(two_communities, tmp_path):
    g = two_communities
    plan = plan_for(g, VERTEX_STATE_BYTES * g.n + 420, tmp_path)
    assert os.path.exists(plan.manifest_path)
    text = open(plan.manifest_path).read()
    assert f"budget_bytes={plan.budget_bytes}" in text
    assert f"partitions={len(plan.partitions)}" in text
    for info in plan.partitions:
        assert os.path.basename(info.path) in text


def test_load_rejects_mismatched_plan(two_communities, tmp_path):
    g = two_communities
    plan = plan_for(g, VERTEX_STATE_BYTES * g.n + 420, tmp_path)
    a, b = plan.partitions[0], plan.partitions[1]
    swapped = type(a)(
        index=b.index, path=a.path, n_local=b.n_local, m_local=b.m_local,
        owned_lo=b.owned_lo, owned_hi=b.owned_hi, estimate_bytes=b.estimate_bytes,
    )
    with pytest.raises(ValueError):
        load_partition(swapped)
