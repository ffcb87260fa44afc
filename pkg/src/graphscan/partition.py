"""Memory-budgeted out-of-core clustering over edge-extended subgraphs.

The planner streams edges in the engine's degree-oriented order and greedily
grows a partition: adding edge ``(u, v)`` pulls in every edge incident to
``u`` or ``v`` (the closure that makes local similarity exact for the owned
edge), and the partition is sealed just before the estimate
``25*|E_s| + 4*|V_s|`` plus the globally resident ``15*n`` of per-vertex
state would exceed the budget.  Owned edge ids are therefore contiguous
ranges that partition the edge set.

Sealed partitions are spilled to disk and reloaded pass by pass even when
host memory would suffice — the budget is honored observably, not
notionally.  Per-vertex state (bounds, role, parent, height) stays resident
across all passes; per-edge similarity lives in each owner partition's spill
file and is rewritten in place after passes that evaluate edges.

Pass structure: (1) core identification over each partition's owned edges,
then one global cleanup; (2a) core-core unions per partition, then one
global flatten so roots are final; (2b) member attachment per partition;
(3) hub/outlier classification of owned-edge endpoints per partition (their
local adjacency is complete by construction), then a final sweep that can
only see isolated vertices.  A single-partition plan reproduces the
in-memory engine exactly.
"""

from __future__ import annotations

import os
import struct
import sys
import tempfile
import threading
import time
from array import array
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Union

from .graph import Graph, EdgeList, build_graph, edge_index
from .scan import (
    ClusteringResult,
    ClusterState,
    EpsilonLike,
    PARENT_HUB,
    PARENT_NONE,
    ROLE_CORE,
    ROLE_HUB,
    ROLE_OUTLIER,
    SIM_DISSIMILAR,
    SIM_SIMILAR,
    SIM_UNKNOWN,
    StatsReport,
    _attach_member,
    _Counters,
    _StripedLocks,
    _chase,
    _chunks,
    _epsilon_squared,
    _eval_edge,
    _probe_cap,
    _record_similarity,
    build_result,
    classify_vertex_from_neighbors,
    epsilon_fraction,
    init_vertex_state,
    resolve_roles_from_bounds,
    union_roots,
)

VERTEX_STATE_BYTES = 15  # lower(2) + upper(4) + role(1) + parent(4) + height(4)
EDGE_BYTES = 25  # 2x4 adjacency + 2x4 edge id + 8 edge pair + 1 similarity
VERTEX_BYTES = 4  # offset entry

_SPILL_MAGIC = b"GSCP"
_SPILL_VERSION = 1
_SPILL_HEADER = struct.Struct("<4sII5Q")  # magic, version, index, nL, mL, budget, owned_lo, owned_hi


class InfeasibleBudgetError(ValueError):
    """A single edge's closure plus resident state exceeds the budget."""

    def __init__(self, edge: tuple[int, int], required_bytes: int, budget_bytes: int):
        self.edge = edge
        self.required_bytes = required_bytes
        self.budget_bytes = budget_bytes
        super().__init__(
            f"edge {edge} needs {required_bytes} bytes against a budget of "
            f"{budget_bytes}; no partitioning can satisfy this"
        )


@dataclass
class EdgeExtendedSubgraph:
    """One loaded partition: owned edges plus their full closure.

    ``local_graph`` covers every edge incident to an owned edge's endpoint,
    so owned endpoints have their complete adjacency locally and similarity
    over owned edges is exact.  ``vmap[l]`` is the global vertex id of local
    ``l`` (ascending, so local order mirrors global order); ``emap[k]`` the
    global edge id of local edge ``k``.  ``owned_local`` lists owned local
    edge ids sorted by global id — the deterministic sweep order.
    ``sim_local`` is this partition's authoritative similarity byte per
    local edge; only owned entries are ever decided here.
    """

    index: int
    owned_lo: int
    owned_hi: int
    local_graph: Graph
    vmap: array
    emap: array
    sim_local: bytearray
    owned_local: list[int]


@dataclass
class PartitionInfo:
    """Spill-side metadata for one sealed partition."""

    index: int
    path: str
    n_local: int
    m_local: int
    owned_lo: int
    owned_hi: int
    estimate_bytes: int


@dataclass
class PartitionPlan:
    n: int
    m: int
    budget_bytes: int
    partitions: list[PartitionInfo]
    spill_dir: str
    manifest_path: str

    @property
    def global_state_bytes(self) -> int:
        return VERTEX_STATE_BYTES * self.n


@dataclass
class GraphMeta:
    """The globally resident slice of a graph: sizes, degrees, names."""

    n: int
    m: int
    degrees: array
    orig_ids: array

    @classmethod
    def from_graph(cls, g: Graph) -> "GraphMeta":
        offs = g.vertex_offsets
        return cls(
            n=g.n,
            m=g.m,
            degrees=array("i", (offs[v + 1] - offs[v] for v in range(g.n))),
            orig_ids=array("I", g.orig_ids),
        )


def estimate_memory(s: Union[EdgeExtendedSubgraph, PartitionInfo, Graph]) -> int:
    """``25*|E_s| + 4*|V_s|`` for a subgraph, partition record, or graph."""
    if isinstance(s, EdgeExtendedSubgraph):
        nv, ne = s.local_graph.n, s.local_graph.m
    elif isinstance(s, PartitionInfo):
        nv, ne = s.n_local, s.m_local
    else:
        nv, ne = s.n, s.m
    return EDGE_BYTES * ne + VERTEX_BYTES * nv


# --- planning ----------------------------------------------------------------


def _seal_partition(
    g: Graph,
    index: int,
    vertices: list[int],
    edges: list[int],
    owned_lo: int,
    owned_hi: int,
    budget_bytes: int,
    spill_dir: str,
) -> PartitionInfo:
    vmap = sorted(vertices)
    local_of = {gv: lv for lv, gv in enumerate(vmap)}
    pairs = []
    for e in edges:
        gu, gv = g.endpoints(e)
        lu, lv = local_of[gu], local_of[gv]
        pairs.append((lu, lv) if lu < lv else (lv, lu))
    pairs.sort()
    lg = build_graph(EdgeList(n_hint=len(vmap), edges=pairs, orig_ids=vmap))
    emap = array("i", bytes(4 * lg.m))
    for k in range(lg.m):
        la, lb = lg.edge_list[2 * k], lg.edge_list[2 * k + 1]
        ge = edge_index(g, vmap[la], vmap[lb])
        assert ge is not None
        emap[k] = ge
    sub = EdgeExtendedSubgraph(
        index=index,
        owned_lo=owned_lo,
        owned_hi=owned_hi,
        local_graph=lg,
        vmap=array("I", vmap),
        emap=emap,
        sim_local=bytearray(lg.m),
        owned_local=_owned_local(emap, owned_lo, owned_hi),
    )
    path = os.path.join(spill_dir, f"part-{index:05d}.bin")
    _write_spill(path, sub, budget_bytes)
    return PartitionInfo(
        index=index,
        path=path,
        n_local=lg.n,
        m_local=lg.m,
        owned_lo=owned_lo,
        owned_hi=owned_hi,
        estimate_bytes=estimate_memory(sub),
    )


def _owned_local(emap: array, owned_lo: int, owned_hi: int) -> list[int]:
    owned = [(emap[k], k) for k in range(len(emap)) if owned_lo <= emap[k] < owned_hi]
    owned.sort()
    return [k for _, k in owned]


def partition_graph(
    g: Graph, budget_bytes: int, spill_dir: Optional[str] = None
) -> PartitionPlan:
    """Greedy streaming plan: seal when the next closure would overflow.

    Raises :class:`InfeasibleBudgetError` if any single edge's closure plus
    the ``15*n`` resident state cannot fit the budget.
    """
    if budget_bytes <= 0:
        raise ValueError(f"budget_bytes must be positive, got {budget_bytes}")
    state_bytes = VERTEX_STATE_BYTES * g.n
    if state_bytes > budget_bytes:
        raise InfeasibleBudgetError((-1, -1), state_bytes, budget_bytes)
    if spill_dir is None:
        spill_dir = tempfile.mkdtemp(prefix="graphscan-spill-")
    else:
        os.makedirs(spill_dir, exist_ok=True)

    offs = g.vertex_offsets
    adj = g.adjacency
    eids = g.edge_ids
    pairs = g.edge_list
    in_vertex = array("i", [-1]) * g.n if g.n else array("i")
    in_edge = array("i", [-1]) * g.m if g.m else array("i")

    partitions: list[PartitionInfo] = []
    index = 0
    owned_lo = 0
    cur_vertices: list[int] = []
    cur_edges: list[int] = []
    cur_cost = 0

    def closure(u: int, v: int) -> tuple[list[int], list[int]]:
        """Vertices and edges the closure of (u, v) adds to partition ``index``."""
        new_v: list[int] = []
        new_e: list[int] = []
        seen_v: set[int] = set()
        seen_e: set[int] = set()
        for x in (u, v):
            if in_vertex[x] != index and x not in seen_v:
                seen_v.add(x)
                new_v.append(x)
            for i in range(offs[x], offs[x + 1]):
                w = adj[i]
                e = eids[i]
                if in_vertex[w] != index and w not in seen_v:
                    seen_v.add(w)
                    new_v.append(w)
                if in_edge[e] != index and e not in seen_e:
                    seen_e.add(e)
                    new_e.append(e)
        return new_v, new_e

    for k in range(g.m):
        u, v = pairs[2 * k], pairs[2 * k + 1]
        new_v, new_e = closure(u, v)
        add = EDGE_BYTES * len(new_e) + VERTEX_BYTES * len(new_v)
        if cur_edges and cur_cost + add + state_bytes > budget_bytes:
            partitions.append(
                _seal_partition(
                    g, index, cur_vertices, cur_edges, owned_lo, k,
                    budget_bytes, spill_dir,
                )
            )
            index += 1
            owned_lo = k
            cur_vertices = []
            cur_edges = []
            cur_cost = 0
            new_v, new_e = closure(u, v)
            add = EDGE_BYTES * len(new_e) + VERTEX_BYTES * len(new_v)
        if cur_cost + add + state_bytes > budget_bytes:
            raise InfeasibleBudgetError((u, v), cur_cost + add + state_bytes, budget_bytes)
        for x in new_v:
            in_vertex[x] = index
        for e in new_e:
            in_edge[e] = index
        cur_vertices.extend(new_v)
        cur_edges.extend(new_e)
        cur_cost += add

    if cur_edges:
        partitions.append(
            _seal_partition(
                g, index, cur_vertices, cur_edges, owned_lo, g.m,
                budget_bytes, spill_dir,
            )
        )

    for info in partitions:
        assert info.estimate_bytes + state_bytes <= budget_bytes

    manifest_path = os.path.join(spill_dir, "plan.manifest")
    plan = PartitionPlan(
        n=g.n,
        m=g.m,
        budget_bytes=budget_bytes,
        partitions=partitions,
        spill_dir=spill_dir,
        manifest_path=manifest_path,
    )
    _write_manifest(plan)
    return plan


def _write_manifest(plan: PartitionPlan) -> None:
    lines = [
        f"n={plan.n}",
        f"m={plan.m}",
        f"budget_bytes={plan.budget_bytes}",
        f"global_state_bytes={plan.global_state_bytes}",
        f"partitions={len(plan.partitions)}",
    ]
    for p in plan.partitions:
        lines.append(
            f"{p.index}\t{os.path.basename(p.path)}\t{p.n_local}\t{p.m_local}"
            f"\t{p.owned_lo}\t{p.owned_hi}\t{p.estimate_bytes}"
        )
    with open(plan.manifest_path, "w", encoding="utf-8") as f:
        f.write("\n".join(lines) + "\n")


# --- spill I/O ---------------------------------------------------------------


def _write_arr(f, a: array) -> None:
    if sys.byteorder == "big":
        a = array(a.typecode, a)
        a.byteswap()
    f.write(a.tobytes())


def _read_arr(f, typecode: str, count: int) -> array:
    a = array(typecode)
    data = f.read(count * a.itemsize)
    if len(data) != count * a.itemsize:
        raise ValueError("truncated partition file")
    a.frombytes(data)
    if sys.byteorder == "big":
        a.byteswap()
    return a


def _write_spill(path: str, sub: EdgeExtendedSubgraph, budget_bytes: int) -> None:
    lg = sub.local_graph
    with open(path, "wb") as f:
        f.write(
            _SPILL_HEADER.pack(
                _SPILL_MAGIC, _SPILL_VERSION, sub.index,
                lg.n, lg.m, budget_bytes, sub.owned_lo, sub.owned_hi,
            )
        )
        _write_arr(f, sub.vmap)
        _write_arr(f, sub.emap)
        _write_arr(f, lg.vertex_offsets)
        _write_arr(f, lg.adjacency)
        _write_arr(f, lg.edge_ids)
        _write_arr(f, lg.edge_list)
        _write_arr(f, lg.orig_ids)
        f.write(bytes(sub.sim_local))


def load_partition(info: PartitionInfo) -> EdgeExtendedSubgraph:
    """Materialize a spilled partition for one pass."""
    try:
        with open(info.path, "rb") as f:
            header = f.read(_SPILL_HEADER.size)
            if len(header) != _SPILL_HEADER.size:
                raise ValueError("truncated partition header")
            magic, version, index, n, m, _budget, owned_lo, owned_hi = (
                _SPILL_HEADER.unpack(header)
            )
            if magic != _SPILL_MAGIC:
                raise ValueError("not a partition spill file")
            if version != _SPILL_VERSION:
                raise ValueError(f"unsupported partition format version {version}")
            if index != info.index or n != info.n_local or m != info.m_local:
                raise ValueError(
                    f"partition file {info.path} does not match plan entry {info.index}"
                )
            vmap = _read_arr(f, "I", n)
            emap = _read_arr(f, "i", m)
            offsets = _read_arr(f, "q", n + 1)
            adjacency = _read_arr(f, "i", 2 * m)
            edge_ids = _read_arr(f, "i", 2 * m)
            edge_list = _read_arr(f, "i", 2 * m)
            orig_ids = _read_arr(f, "I", n)
            sim_local = bytearray(f.read(m))
            if len(sim_local) != m:
                raise ValueError("truncated similarity section")
    except OSError as exc:
        raise OSError(f"partition {info.index}: cannot load {info.path}: {exc}") from exc
    lg = Graph(
        n=n, m=m, vertex_offsets=offsets, adjacency=adjacency,
        edge_ids=edge_ids, edge_list=edge_list, orig_ids=orig_ids,
    )
    return EdgeExtendedSubgraph(
        index=index,
        owned_lo=owned_lo,
        owned_hi=owned_hi,
        local_graph=lg,
        vmap=vmap,
        emap=emap,
        sim_local=sim_local,
        owned_local=_owned_local(emap, owned_lo, owned_hi),
    )


def store_sim(info: PartitionInfo, sub: EdgeExtendedSubgraph) -> None:
    """Persist the partition's similarity bytes in place."""
    try:
        with open(info.path, "r+b") as f:
            f.seek(-sub.local_graph.m, os.SEEK_END)
            f.write(bytes(sub.sim_local))
    except OSError as exc:
        raise OSError(f"partition {info.index}: cannot store {info.path}: {exc}") from exc


# --- out-of-core passes --------------------------------------------------------


def _run_owned(
    fn, sub: EdgeExtendedSubgraph, workers: int, *args
) -> _Counters:
    """Apply ``fn`` over chunks of the owned edge list, merging counters."""
    c = _Counters()
    total = len(sub.owned_local)
    if workers <= 1 or total < 2:
        c.merge(fn(sub, 0, total, None, *args))
        return c
    locks = _StripedLocks()
    with ThreadPoolExecutor(max_workers=workers) as ex:
        futures = [
            ex.submit(fn, sub, lo, hi, locks, *args)
            for lo, hi in _chunks(total, workers)
        ]
        for fut in futures:
            c.merge(fut.result())
    return c


def _eval_owned_edge(
    sub: EdgeExtendedSubgraph, k: int, p: int, q: int, c: _Counters
) -> bool:
    lg = sub.local_graph
    offs = lg.vertex_offsets
    la, lb = lg.edge_list[2 * k], lg.edge_list[2 * k + 1]
    alo, ahi = offs[la], offs[la + 1]
    blo, bhi = offs[lb], offs[lb + 1]
    similar, probes = _eval_edge(lg.adjacency, alo, ahi, blo, bhi, p, q)
    c.sim_evals += 1
    c.adj_probes += probes
    if probes > _probe_cap(ahi - alo, bhi - blo):
        c.probe_bound_violations += 1
    sub.sim_local[k] = SIM_SIMILAR if similar else SIM_DISSIMILAR
    return similar


def _identify_owned(
    sub: EdgeExtendedSubgraph,
    lo: int,
    hi: int,
    locks: Optional[_StripedLocks],
    st: ClusterState,
    mu: int,
    p: int,
    q: int,
) -> _Counters:
    lg = sub.local_graph
    vmap = sub.vmap
    role = st.role
    c = _Counters()
    for idx in range(lo, hi):
        k = sub.owned_local[idx]
        ga = vmap[lg.edge_list[2 * k]]
        gb = vmap[lg.edge_list[2 * k + 1]]
        if role[ga] and role[gb]:
            continue
        similar = _eval_owned_edge(sub, k, p, q, c)
        _record_similarity(st, ga, gb, similar, mu, locks)
    return c


def _cleanup_owned(
    sub: EdgeExtendedSubgraph,
    lo: int,
    hi: int,
    locks: Optional[_StripedLocks],
    st: ClusterState,
    mu: int,
    p: int,
    q: int,
) -> _Counters:
    lg = sub.local_graph
    vmap = sub.vmap
    role = st.role
    c = _Counters()
    for idx in range(lo, hi):
        k = sub.owned_local[idx]
        if sub.sim_local[k] != SIM_UNKNOWN:
            continue
        ga = vmap[lg.edge_list[2 * k]]
        gb = vmap[lg.edge_list[2 * k + 1]]
        if role[ga] and role[gb]:
            continue
        similar = _eval_owned_edge(sub, k, p, q, c)
        _record_similarity(st, ga, gb, similar, mu, locks)
    return c


def _union_owned(
    sub: EdgeExtendedSubgraph,
    lo: int,
    hi: int,
    locks: Optional[_StripedLocks],
    st: ClusterState,
    p: int,
    q: int,
    union_lock,
) -> _Counters:
    """Known-similar unions; the unknown-edge pass runs separately."""
    lg = sub.local_graph
    vmap = sub.vmap
    role = st.role
    c = _Counters()
    for idx in range(lo, hi):
        k = sub.owned_local[idx]
        if sub.sim_local[k] != SIM_SIMILAR:
            continue
        ga = vmap[lg.edge_list[2 * k]]
        gb = vmap[lg.edge_list[2 * k + 1]]
        if role[ga] == ROLE_CORE and role[gb] == ROLE_CORE:
            union_roots(st, ga, gb, lock=union_lock, counters=c)
    return c


def _union_unknown_owned(
    sub: EdgeExtendedSubgraph,
    lo: int,
    hi: int,
    locks: Optional[_StripedLocks],
    st: ClusterState,
    p: int,
    q: int,
    union_lock,
) -> _Counters:
    lg = sub.local_graph
    vmap = sub.vmap
    role = st.role
    parent = st.parent
    c = _Counters()
    for idx in range(lo, hi):
        k = sub.owned_local[idx]
        if sub.sim_local[k] != SIM_UNKNOWN:
            continue
        ga = vmap[lg.edge_list[2 * k]]
        gb = vmap[lg.edge_list[2 * k + 1]]
        if role[ga] != ROLE_CORE or role[gb] != ROLE_CORE:
            continue
        if _chase(parent, ga) == _chase(parent, gb):
            continue
        if _eval_owned_edge(sub, k, p, q, c):
            union_roots(st, ga, gb, lock=union_lock, counters=c)
    return c


def _attach_owned(
    sub: EdgeExtendedSubgraph,
    lo: int,
    hi: int,
    locks: Optional[_StripedLocks],
    st: ClusterState,
    p: int,
    q: int,
) -> _Counters:
    lg = sub.local_graph
    vmap = sub.vmap
    role = st.role
    parent = st.parent
    c = _Counters()
    for idx in range(lo, hi):
        k = sub.owned_local[idx]
        ga = vmap[lg.edge_list[2 * k]]
        gb = vmap[lg.edge_list[2 * k + 1]]
        ca = role[ga] == ROLE_CORE
        if ca == (role[gb] == ROLE_CORE):
            continue
        core, w = (ga, gb) if ca else (gb, ga)
        s = sub.sim_local[k]
        if s == SIM_UNKNOWN:
            s = SIM_SIMILAR if _eval_owned_edge(sub, k, p, q, c) else SIM_DISSIMILAR
        if s == SIM_SIMILAR:
            _attach_member(st, w, _chase(parent, core), locks)
    return c


def _classify_owned(
    sub: EdgeExtendedSubgraph, st: ClusterState, workers: int
) -> None:
    """Classify every owned-edge endpoint (full adjacency is local)."""
    lg = sub.local_graph
    vmap = sub.vmap
    offs = lg.vertex_offsets
    adj = lg.adjacency
    parent = st.parent
    role = st.role
    targets = sorted(
        {lg.edge_list[2 * k] for k in sub.owned_local}
        | {lg.edge_list[2 * k + 1] for k in sub.owned_local}
    )

    def run(lo: int, hi: int) -> None:
        for i in range(lo, hi):
            lv = targets[i]
            gv = vmap[lv]
            if parent[gv] >= 0:
                continue
            vlo, vhi = offs[lv], offs[lv + 1]
            if classify_vertex_from_neighbors(
                gv, (vmap[adj[j]] for j in range(vlo, vhi)), parent, role, vhi - vlo
            ):
                parent[gv] = PARENT_HUB
                role[gv] = ROLE_HUB
            else:
                parent[gv] = PARENT_NONE
                role[gv] = ROLE_OUTLIER

    if workers <= 1 or len(targets) < 2:
        run(0, len(targets))
        return
    with ThreadPoolExecutor(max_workers=workers) as ex:
        for fut in [ex.submit(run, lo, hi) for lo, hi in _chunks(len(targets), workers)]:
            fut.result()


def scan_out_of_core(
    meta: GraphMeta,
    plan: PartitionPlan,
    mu: int,
    epsilon: EpsilonLike,
    *,
    workers: int = 1,
) -> tuple[ClusteringResult, StatsReport]:
    """Cluster a partitioned graph against globally resident vertex state."""
    if mu < 2:
        raise ValueError(f"mu must be >= 2, got {mu}")
    if workers < 1:
        raise ValueError(f"workers must be >= 1, got {workers}")
    epsilon_fraction(epsilon)
    if plan.n != meta.n or plan.m != meta.m:
        raise ValueError(
            f"plan is for a different graph: plan n={plan.n} m={plan.m}, "
            f"graph n={meta.n} m={meta.m}"
        )
    p, q = _epsilon_squared(epsilon)
    stats = StatsReport(n=meta.n, m=meta.m, workers=workers)
    stats.extra["partitions"] = len(plan.partitions)
    c = _Counters()
    t_start = time.perf_counter_ns()

    st = init_vertex_state(meta.n, meta.degrees, m=meta.m, with_sim=False)
    parent = st.parent
    role = st.role

    # Pass 1: core identification over owned edges, partition by partition.
    t0 = time.perf_counter_ns()
    for info in plan.partitions:
        sub = load_partition(info)
        c.merge(_run_owned(_identify_owned, sub, workers, st, mu, p, q))
        store_sim(info, sub)
    t1 = time.perf_counter_ns()
    stats.phases["identify"] = (t1 - t0) // 1000

    # Global cleanup: bounds alone resolve anything a full sequential sweep
    # would have; the per-partition edge sweep handles racing leftovers.
    if resolve_roles_from_bounds(st, mu):
        for info in plan.partitions:
            sub = load_partition(info)
            c.merge(_run_owned(_cleanup_owned, sub, 1, st, mu, p, q))
            store_sim(info, sub)
        resolve_roles_from_bounds(st, mu, strict=True)
    t2 = time.perf_counter_ns()
    stats.phases["cleanup"] = (t2 - t1) // 1000

    # Pass 2a: cluster cores.  Singletons first, then per-partition unions.
    for v in range(meta.n):
        if role[v] == ROLE_CORE and parent[v] == PARENT_NONE:
            parent[v] = v
    union_lock = threading.Lock() if workers > 1 else None
    for info in plan.partitions:
        sub = load_partition(info)
        c.merge(_run_owned(_union_owned, sub, workers, st, p, q, union_lock))
        c.merge(_run_owned(_union_unknown_owned, sub, workers, st, p, q, union_lock))
        store_sim(info, sub)

    # Global flatten: cross-partition unions are done, roots become final.
    for v in range(meta.n):
        if role[v] == ROLE_CORE:
            parent[v] = _chase(parent, v)

    # Pass 2b: attach border members against final roots.
    for info in plan.partitions:
        sub = load_partition(info)
        c.merge(_run_owned(_attach_owned, sub, workers, st, p, q))
        store_sim(info, sub)
    t3 = time.perf_counter_ns()
    stats.phases["cluster"] = (t3 - t2) // 1000

    # Pass 3: classify owned endpoints; complete adjacency, idempotent.
    for info in plan.partitions:
        sub = load_partition(info)
        _classify_owned(sub, st, workers)
    for v in range(meta.n):
        if parent[v] < 0 and role[v] not in (ROLE_HUB, ROLE_OUTLIER):
            if meta.degrees[v] != 0:
                raise RuntimeError(
                    f"vertex {v} with degree {meta.degrees[v]} "
                    f"escaped classification"
                )
            role[v] = ROLE_OUTLIER
    t4 = time.perf_counter_ns()
    stats.phases["classify"] = (t4 - t3) // 1000

    stats.add_counters(c)
    result = build_result(st, meta.orig_ids)
    stats.phases["total"] = (time.perf_counter_ns() - t_start) // 1000
    return result, stats
