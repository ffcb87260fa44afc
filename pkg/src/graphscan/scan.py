"""Three-phase progressive structural clustering.

Pipeline: core identification with bound pruning, union-find cluster
detection, hub/outlier classification.  The engine keeps a lower and an
upper bound on every vertex's similar-neighborhood size and decides roles
as soon as a bound crosses ``mu``; an edge whose endpoints are both decided
is never evaluated, which is where the work savings come from.

Similarity decisions are exact: the threshold test compares
``(shared + 2)^2 * q >= p * (deg(u)+1) * (deg(v)+1)`` in integer arithmetic,
where ``p / q`` is the exact square of epsilon.  Passing epsilon as a
decimal string (or :class:`fractions.Fraction`) therefore gives exact
threshold behaviour; a float is honoured at its exact binary value.

All phases are edge- or vertex-parallel over shared state.  Worker count 1
runs a fixed schedule (the degree-oriented edge order) and is the
deterministic mode; higher worker counts preserve the core set, the
same-cluster relation over cores, and the hub/outlier sets, while the
specific cluster a border vertex attaches to may vary.
"""

from __future__ import annotations

import threading
import time
from array import array
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum, IntEnum
from fractions import Fraction
from typing import Callable, Iterable, Optional, Sequence, Union

from .graph import Graph, edge_index

EpsilonLike = Union[str, float, int, Fraction]

# --- per-edge similarity status (byte codes) ------------------------------
SIM_UNKNOWN = 0
SIM_SIMILAR = 1
SIM_DISSIMILAR = 2

# --- per-vertex role (byte codes) -----------------------------------------
ROLE_UNKNOWN = 0
ROLE_CORE = 1
ROLE_NONCORE = 2
ROLE_MEMBER = 3
# A member similar to cores of two or more distinct clusters.  Membership is
# recorded for one cluster only (the parent), but the flag is needed to keep
# hub classification exact and schedule-invariant.
ROLE_MEMBER_SHARED = 4
ROLE_HUB = 5
ROLE_OUTLIER = 6

# --- parent sentinels ------------------------------------------------------
PARENT_NONE = -2  # not in any cluster
PARENT_HUB = -1


class SimilarityStatus(IntEnum):
    UNKNOWN = SIM_UNKNOWN
    SIMILAR = SIM_SIMILAR
    DISSIMILAR = SIM_DISSIMILAR


class Role(Enum):
    UNKNOWN = "unknown"
    CORE = "core"
    NONCORE = "noncore"
    MEMBER = "member"
    HUB = "hub"
    OUTLIER = "outlier"


_PUBLIC_ROLE = {
    ROLE_UNKNOWN: Role.UNKNOWN,
    ROLE_CORE: Role.CORE,
    ROLE_NONCORE: Role.NONCORE,
    ROLE_MEMBER: Role.MEMBER,
    ROLE_MEMBER_SHARED: Role.MEMBER,
    ROLE_HUB: Role.HUB,
    ROLE_OUTLIER: Role.OUTLIER,
}

ROLE_LETTERS = {Role.CORE: "C", Role.MEMBER: "M", Role.HUB: "H", Role.OUTLIER: "O"}


@dataclass
class ClusterState:
    """Mutable working state shared by all clustering phases.

    ``lower[v]``/``upper[v]`` bound the similar-neighborhood size of ``v``
    (both include ``v`` itself); ``lower`` only grows and ``upper`` only
    shrinks.  ``parent`` is the cluster forest: a vertex id for cores and
    members, ``-1`` for hubs, ``-2`` for vertices in no cluster.  ``height``
    is the union-by-height rank.  ``sim`` holds one status byte per
    undirected edge (it is empty in the out-of-core driver, which keeps
    per-partition similarity arrays instead).
    """

    n: int
    m: int
    lower: array
    upper: array
    role: bytearray
    parent: array
    height: array
    sim: bytearray


def init_state(g: Graph) -> ClusterState:
    """Fresh state: ``lower=1``, ``upper=deg+1``, everything undecided."""
    offs = g.vertex_offsets
    degrees = [offs[v + 1] - offs[v] for v in range(g.n)]
    return init_vertex_state(g.n, degrees, m=g.m, with_sim=True)


def init_vertex_state(
    n: int, degrees: Sequence[int], m: int, with_sim: bool
) -> ClusterState:
    """State initialisation from a degree sequence alone.

    The out-of-core driver uses this: per-vertex state is globally resident
    while adjacency (and per-edge similarity) is loaded per partition.
    """
    return ClusterState(
        n=n,
        m=m,
        lower=array("i", [1]) * n if n else array("i"),
        upper=array("i", (d + 1 for d in degrees)),
        role=bytearray(n),
        parent=array("i", [PARENT_NONE]) * n if n else array("i"),
        height=array("i", [1]) * n if n else array("i"),
        sim=bytearray(m if with_sim else 0),
    )


def epsilon_fraction(epsilon: EpsilonLike) -> Fraction:
    """Validate epsilon and return it as an exact fraction in (0, 1]."""
    if isinstance(epsilon, Fraction):
        f = epsilon
    elif isinstance(epsilon, (str, int)):
        try:
            f = Fraction(epsilon)
        except (ValueError, ZeroDivisionError):
            raise ValueError(f"epsilon is not a number: {epsilon!r}") from None
    elif isinstance(epsilon, float):
        f = Fraction(epsilon)  # exact binary value
    else:
        raise TypeError(f"unsupported epsilon type: {type(epsilon).__name__}")
    if not 0 < f <= 1:
        raise ValueError(f"epsilon must be in (0, 1], got {epsilon!r}")
    return f


def _epsilon_squared(epsilon: EpsilonLike) -> tuple[int, int]:
    f = epsilon_fraction(epsilon)
    f2 = f * f
    return f2.numerator, f2.denominator


# --- similarity ------------------------------------------------------------


def structural_similarity(g: Graph, u: int, v: int) -> float:
    """``|N[u] ∩ N[v]| / sqrt(|N[u]| * |N[v]|)`` over closed neighborhoods.

    Defined for any vertex pair, adjacent or not; symmetric; 1.0 on the
    diagonal.  This is the reference value — the engine's threshold test is
    the exact integer comparison in :func:`check_sim`.
    """
    if not (0 <= u < g.n and 0 <= v < g.n):
        raise IndexError(f"vertex id out of range: ({u}, {v})")
    if u == v:
        return 1.0
    adj = g.adjacency
    offs = g.vertex_offsets
    i, ihi = offs[u], offs[u + 1]
    j, jhi = offs[v], offs[v + 1]
    common = 0
    adjacent = False
    while i < ihi and j < jhi:
        x, y = adj[i], adj[j]
        if x == y:
            common += 1
            i += 1
            j += 1
        elif x < y:
            if x == v:
                adjacent = True
            i += 1
        else:
            j += 1
    while i < ihi:
        if adj[i] == v:
            adjacent = True
        i += 1
    inter = common + (2 if adjacent else 0)
    du = offs[u + 1] - offs[u]
    dv = offs[v + 1] - offs[v]
    return inter / ((du + 1) * (dv + 1)) ** 0.5


def _eval_edge(
    adj: Sequence[int], alo: int, ahi: int, blo: int, bhi: int, p: int, q: int
) -> tuple[bool, int]:
    """Similarity threshold test for one edge, via adjacency probing.

    Probes every neighbor of the ``[alo, ahi)`` run into the ``[blo, bhi)``
    run by binary search and counts shared entries.  Returns the decision of
    ``(shared + 2)^2 * q >= p * (da+1) * (db+1)`` and the number of adjacency
    probes performed (one probe = one comparison against an adjacency
    element), which is at most ``da * (ceil(log2 db) + 1)``.
    """
    count = 0
    probes = 0
    for i in range(alo, ahi):
        w = adj[i]
        lo, hi = blo, bhi
        while lo < hi:
            probes += 1
            mid = (lo + hi) >> 1
            x = adj[mid]
            if x < w:
                lo = mid + 1
            elif x > w:
                hi = mid
            else:
                count += 1
                break
    da = ahi - alo
    db = bhi - blo
    s = count + 2
    return s * s * q >= p * (da + 1) * (db + 1), probes


def _probe_cap(da: int, db: int) -> int:
    # ceil(log2(db)) == (db - 1).bit_length() for db >= 1
    return da * ((db - 1).bit_length() + 1)


def check_sim(g: Graph, u: int, v: int, epsilon: EpsilonLike) -> bool:
    """Exact test of ``similarity(u, v) >= epsilon`` for an existing edge.

    The endpoints are reordered so the smaller-degree side drives the
    probing.  Raises ``ValueError`` if ``{u, v}`` is not an edge.
    """
    if edge_index(g, u, v) is None:
        raise ValueError(f"({u}, {v}) is not an edge")
    p, q = _epsilon_squared(epsilon)
    offs = g.vertex_offsets
    du = offs[u + 1] - offs[u]
    dv = offs[v + 1] - offs[v]
    if (dv, v) < (du, u):
        u, v = v, u
    similar, _ = _eval_edge(
        g.adjacency, offs[u], offs[u + 1], offs[v], offs[v + 1], p, q
    )
    return similar


# --- shared concurrency helpers ---------------------------------------------


class _StripedLocks:
    """A small pool of locks indexed by vertex id."""

    __slots__ = ("_locks", "_mask")

    def __init__(self, stripes: int = 128):
        self._locks = [threading.Lock() for _ in range(stripes)]
        self._mask = stripes - 1

    def vertex(self, v: int) -> threading.Lock:
        return self._locks[v & self._mask]


class _Counters:
    """Per-worker operation counters, merged at phase barriers."""

    __slots__ = ("sim_evals", "adj_probes", "union_retries", "probe_bound_violations")

    def __init__(self):
        self.sim_evals = 0
        self.adj_probes = 0
        self.union_retries = 0
        self.probe_bound_violations = 0

    def merge(self, other: "_Counters") -> None:
        self.sim_evals += other.sim_evals
        self.adj_probes += other.adj_probes
        self.union_retries += other.union_retries
        self.probe_bound_violations += other.probe_bound_violations


def _chunks(total: int, workers: int) -> list[tuple[int, int]]:
    if total <= 0:
        return []
    step = (total + workers - 1) // workers
    return [(lo, min(lo + step, total)) for lo in range(0, total, step)]


def _record_similarity(
    st: ClusterState,
    u: int,
    v: int,
    similar: bool,
    mu: int,
    locks: Optional[_StripedLocks],
) -> None:
    """Apply one similarity outcome to both endpoint bounds and roles.

    A similar edge raises each endpoint's lower bound; a dissimilar edge
    lowers its upper bound.  A vertex becomes a core the moment
    ``lower >= mu`` and a non-core the moment ``upper < mu``; roles are
    write-once.
    """
    lower = st.lower
    upper = st.upper
    role = st.role
    if similar:
        for x in (u, v):
            if locks is None:
                lv = lower[x] + 1
                lower[x] = lv
                if lv >= mu and role[x] == ROLE_UNKNOWN:
                    role[x] = ROLE_CORE
            else:
                with locks.vertex(x):
                    lv = lower[x] + 1
                    lower[x] = lv
                    if lv >= mu and role[x] == ROLE_UNKNOWN:
                        role[x] = ROLE_CORE
    else:
        for x in (u, v):
            if locks is None:
                uv = upper[x] - 1
                upper[x] = uv
                if uv < mu and role[x] == ROLE_UNKNOWN:
                    role[x] = ROLE_NONCORE
            else:
                with locks.vertex(x):
                    uv = upper[x] - 1
                    upper[x] = uv
                    if uv < mu and role[x] == ROLE_UNKNOWN:
                        role[x] = ROLE_NONCORE


# --- phase 1: core identification -------------------------------------------


def _identify_range(
    g: Graph,
    st: ClusterState,
    mu: int,
    p: int,
    q: int,
    klo: int,
    khi: int,
    locks: Optional[_StripedLocks],
    on_edge: Optional[Callable[[int], None]],
) -> _Counters:
    adj = g.adjacency
    offs = g.vertex_offsets
    pairs = g.edge_list
    role = st.role
    sim = st.sim
    c = _Counters()
    for k in range(klo, khi):
        a = pairs[2 * k]
        b = pairs[2 * k + 1]
        if role[a] and role[b]:
            # Both endpoints decided: defer this edge, maybe forever.
            if on_edge is not None:
                on_edge(k)
            continue
        alo, ahi = offs[a], offs[a + 1]
        blo, bhi = offs[b], offs[b + 1]
        similar, probes = _eval_edge(adj, alo, ahi, blo, bhi, p, q)
        c.sim_evals += 1
        c.adj_probes += probes
        if probes > _probe_cap(ahi - alo, bhi - blo):
            c.probe_bound_violations += 1
        sim[k] = SIM_SIMILAR if similar else SIM_DISSIMILAR
        _record_similarity(st, a, b, similar, mu, locks)
        if on_edge is not None:
            on_edge(k)
    return c


def resolve_roles_from_bounds(st: ClusterState, mu: int, strict: bool = False) -> bool:
    """Decide every still-unknown role its bounds already determine.

    Returns True if some role remains undecided (only possible while that
    vertex still has unevaluated edges).  With ``strict`` an undecided
    leftover raises instead — used after full resolution sweeps, where the
    bounds of a fully evaluated vertex have necessarily met.
    """
    lower = st.lower
    upper = st.upper
    role = st.role
    unresolved = False
    for v in range(st.n):
        if role[v] == ROLE_UNKNOWN:
            if lower[v] >= mu:
                role[v] = ROLE_CORE
            elif upper[v] < mu:
                role[v] = ROLE_NONCORE
            else:
                unresolved = True
    if unresolved and strict:
        raise RuntimeError("role resolution incomplete after full edge sweep")
    return unresolved


def _cleanup_unknown_roles(
    g: Graph, st: ClusterState, mu: int, p: int, q: int
) -> _Counters:
    """Sequential cleanup: force every role to Core or NonCore.

    First resolve from bounds alone.  If skip-deferred edges left a vertex
    genuinely open, evaluate its remaining unknown edges in the fixed edge
    order until the bounds meet.
    """
    c = _Counters()
    if not resolve_roles_from_bounds(st, mu):
        return c
    adj = g.adjacency
    offs = g.vertex_offsets
    pairs = g.edge_list
    role = st.role
    sim = st.sim
    for k in range(g.m):
        if sim[k] != SIM_UNKNOWN:
            continue
        a = pairs[2 * k]
        b = pairs[2 * k + 1]
        if role[a] and role[b]:
            continue
        alo, ahi = offs[a], offs[a + 1]
        blo, bhi = offs[b], offs[b + 1]
        similar, probes = _eval_edge(adj, alo, ahi, blo, bhi, p, q)
        c.sim_evals += 1
        c.adj_probes += probes
        if probes > _probe_cap(ahi - alo, bhi - blo):
            c.probe_bound_violations += 1
        sim[k] = SIM_SIMILAR if similar else SIM_DISSIMILAR
        _record_similarity(st, a, b, similar, mu, None)
    resolve_roles_from_bounds(st, mu, strict=True)
    return c


def identify_core(
    g: Graph,
    mu: int,
    epsilon: EpsilonLike,
    st: ClusterState,
    *,
    workers: int = 1,
    stats: Optional["StatsReport"] = None,
    on_edge: Optional[Callable[[int], None]] = None,
) -> None:
    """Decide Core/NonCore for every vertex (bound-pruned edge sweep).

    One task per undirected edge, in degree-oriented order; edges whose
    endpoints are both decided are skipped without a similarity evaluation.
    A sequential cleanup sweep then resolves any role the racing sweep left
    open.  ``on_edge`` (sequential mode only) is called after each edge task
    — an observability hook for bound auditing.
    """
    if mu < 2:
        raise ValueError(f"mu must be >= 2, got {mu}")
    p, q = _epsilon_squared(epsilon)
    c = _Counters()
    t0 = time.perf_counter_ns()
    if workers <= 1:
        c.merge(_identify_range(g, st, mu, p, q, 0, g.m, None, on_edge))
    else:
        locks = _StripedLocks()
        with ThreadPoolExecutor(max_workers=workers) as ex:
            futures = [
                ex.submit(_identify_range, g, st, mu, p, q, lo, hi, locks, None)
                for lo, hi in _chunks(g.m, workers)
            ]
            for fut in futures:
                c.merge(fut.result())
    t1 = time.perf_counter_ns()
    c.merge(_cleanup_unknown_roles(g, st, mu, p, q))
    t2 = time.perf_counter_ns()
    if stats is not None:
        stats.add_counters(c)
        stats.phases["identify"] = stats.phases.get("identify", 0) + (t1 - t0) // 1000
        stats.phases["cleanup"] = stats.phases.get("cleanup", 0) + (t2 - t1) // 1000


# --- union-find --------------------------------------------------------------


def _chase(parent: Sequence[int], u: int) -> int:
    r = u
    nxt = parent[r]
    while nxt != r:
        r = nxt
        nxt = parent[r]
    return r


def find_root(st: ClusterState, u: int) -> int:
    """Root of ``u``'s cluster tree; read-only (no path compression)."""
    if st.parent[u] < 0:
        raise ValueError(f"vertex {u} is not in any cluster tree")
    return _chase(st.parent, u)


def union_roots(
    st: ClusterState,
    u: int,
    v: int,
    *,
    lock: Optional[threading.Lock] = None,
    counters: Optional[_Counters] = None,
) -> None:
    """Merge the trees of ``u`` and ``v`` (either may be a stale root).

    Union by height: the shorter root is linked under the taller; a tie
    links ``v``'s root under ``u``'s and bumps the survivor's height.  Under
    contention the link is validated against both roots still being roots;
    a failed validation re-chases and retries, which is counted.  Links are
    serialised by ``lock``, so the parent graph stays a forest under any
    interleaving.
    """
    parent = st.parent
    height = st.height
    while True:
        ru = _chase(parent, u)
        rv = _chase(parent, v)
        if ru == rv:
            return
        if lock is None:
            hu = height[ru]
            hv = height[rv]
            if hu < hv:
                parent[ru] = rv
            elif hv < hu:
                parent[rv] = ru
            else:
                parent[rv] = ru
                height[ru] = hu + 1
            return
        with lock:
            if parent[ru] == ru and parent[rv] == rv:
                hu = height[ru]
                hv = height[rv]
                if hu < hv:
                    parent[ru] = rv
                elif hv < hu:
                    parent[rv] = ru
                else:
                    parent[rv] = ru
                    height[ru] = hu + 1
                return
        # Someone linked one of the roots first; chase the new roots.
        if counters is not None:
            counters.union_retries += 1
        u, v = ru, rv


# --- phase 2: cluster detection ----------------------------------------------


def _attach_member(
    st: ClusterState, w: int, root: int, locks: Optional[_StripedLocks]
) -> None:
    """Attach non-core ``w`` to cluster ``root``.

    Sequential mode attaches to the smallest eligible root (reproducible);
    parallel mode is first-writer-wins.  Either way a second distinct
    eligible cluster upgrades the role to the shared-member flag, which is a
    schedule-invariant fact about ``w``.
    """
    parent = st.parent
    role = st.role
    if locks is None:
        cur = parent[w]
        if cur < 0:
            parent[w] = root
            role[w] = ROLE_MEMBER
        elif cur != root:
            role[w] = ROLE_MEMBER_SHARED
            if root < cur:
                parent[w] = root
    else:
        with locks.vertex(w):
            cur = parent[w]
            if cur < 0:
                parent[w] = root
                role[w] = ROLE_MEMBER
            elif cur != root:
                role[w] = ROLE_MEMBER_SHARED


def _union_known_range(
    st: ClusterState,
    pairs: Sequence[int],
    klo: int,
    khi: int,
    union_lock: Optional[threading.Lock],
) -> _Counters:
    role = st.role
    sim = st.sim
    c = _Counters()
    for k in range(klo, khi):
        if sim[k] != SIM_SIMILAR:
            continue
        a = pairs[2 * k]
        b = pairs[2 * k + 1]
        if role[a] == ROLE_CORE and role[b] == ROLE_CORE:
            union_roots(st, a, b, lock=union_lock, counters=c)
    return c


def _union_unknown_range(
    g: Graph,
    st: ClusterState,
    p: int,
    q: int,
    klo: int,
    khi: int,
    union_lock: Optional[threading.Lock],
) -> _Counters:
    adj = g.adjacency
    offs = g.vertex_offsets
    pairs = g.edge_list
    parent = st.parent
    role = st.role
    sim = st.sim
    c = _Counters()
    for k in range(klo, khi):
        if sim[k] != SIM_UNKNOWN:
            continue
        a = pairs[2 * k]
        b = pairs[2 * k + 1]
        if role[a] != ROLE_CORE or role[b] != ROLE_CORE:
            continue
        ra = _chase(parent, a)
        rb = _chase(parent, b)
        if ra == rb:
            # Already in one cluster; similarity cannot change anything.
            continue
        alo, ahi = offs[a], offs[a + 1]
        blo, bhi = offs[b], offs[b + 1]
        similar, probes = _eval_edge(adj, alo, ahi, blo, bhi, p, q)
        c.sim_evals += 1
        c.adj_probes += probes
        if probes > _probe_cap(ahi - alo, bhi - blo):
            c.probe_bound_violations += 1
        sim[k] = SIM_SIMILAR if similar else SIM_DISSIMILAR
        if similar:
            union_roots(st, ra, rb, lock=union_lock, counters=c)
    return c


def _attach_range(
    g: Graph,
    st: ClusterState,
    p: int,
    q: int,
    klo: int,
    khi: int,
    locks: Optional[_StripedLocks],
) -> _Counters:
    adj = g.adjacency
    offs = g.vertex_offsets
    pairs = g.edge_list
    parent = st.parent
    role = st.role
    sim = st.sim
    c = _Counters()
    for k in range(klo, khi):
        a = pairs[2 * k]
        b = pairs[2 * k + 1]
        ca = role[a] == ROLE_CORE
        if ca == (role[b] == ROLE_CORE):
            continue
        core, w = (a, b) if ca else (b, a)
        s = sim[k]
        if s == SIM_UNKNOWN:
            alo, ahi = offs[a], offs[a + 1]
            blo, bhi = offs[b], offs[b + 1]
            similar, probes = _eval_edge(adj, alo, ahi, blo, bhi, p, q)
            c.sim_evals += 1
            c.adj_probes += probes
            if probes > _probe_cap(ahi - alo, bhi - blo):
                c.probe_bound_violations += 1
            s = SIM_SIMILAR if similar else SIM_DISSIMILAR
            sim[k] = s
        if s == SIM_SIMILAR:
            _attach_member(st, w, _chase(parent, core), locks)
    return c


def detect_clusters(
    g: Graph,
    epsilon: EpsilonLike,
    st: ClusterState,
    *,
    workers: int = 1,
    stats: Optional["StatsReport"] = None,
) -> None:
    """Build the cluster forest over cores, then attach border members.

    Runs after every role is Core or NonCore.  Phases, each a full barrier:
    core singletons; unions over already-known similar core-core edges;
    unions over unknown core-core edges whose roots still differ (the root
    check prunes the similarity evaluation); flattening every core to its
    root; member attachment over core/non-core edges.  After the flatten,
    roots are stable, so attachment sees final cluster identities.
    """
    p, q = _epsilon_squared(epsilon)
    c = _Counters()
    t0 = time.perf_counter_ns()
    parent = st.parent
    role = st.role

    if workers <= 1:
        for v in range(st.n):
            if role[v] == ROLE_CORE and parent[v] == PARENT_NONE:
                parent[v] = v
        c.merge(_union_known_range(st, g.edge_list, 0, g.m, None))
        c.merge(_union_unknown_range(g, st, p, q, 0, g.m, None))
        for v in range(st.n):
            if role[v] == ROLE_CORE:
                parent[v] = _chase(parent, v)
        c.merge(_attach_range(g, st, p, q, 0, g.m, None))
    else:
        locks = _StripedLocks()
        union_lock = threading.Lock()

        def _singletons(vlo: int, vhi: int) -> None:
            for v in range(vlo, vhi):
                if role[v] == ROLE_CORE and parent[v] == PARENT_NONE:
                    parent[v] = v

        def _flatten(vlo: int, vhi: int) -> None:
            for v in range(vlo, vhi):
                if role[v] == ROLE_CORE:
                    parent[v] = _chase(parent, v)

        with ThreadPoolExecutor(max_workers=workers) as ex:
            vchunks = _chunks(st.n, workers)
            echunks = _chunks(g.m, workers)
            for fut in [ex.submit(_singletons, lo, hi) for lo, hi in vchunks]:
                fut.result()
            for fut in [
                ex.submit(_union_known_range, st, g.edge_list, lo, hi, union_lock)
                for lo, hi in echunks
            ]:
                c.merge(fut.result())
            for fut in [
                ex.submit(_union_unknown_range, g, st, p, q, lo, hi, union_lock)
                for lo, hi in echunks
            ]:
                c.merge(fut.result())
            for fut in [ex.submit(_flatten, lo, hi) for lo, hi in vchunks]:
                fut.result()
            for fut in [
                ex.submit(_attach_range, g, st, p, q, lo, hi, locks)
                for lo, hi in echunks
            ]:
                c.merge(fut.result())
    t1 = time.perf_counter_ns()
    if stats is not None:
        stats.add_counters(c)
        stats.phases["cluster"] = stats.phases.get("cluster", 0) + (t1 - t0) // 1000


# --- phase 3: hub / outlier classification -----------------------------------


def classify_vertex_from_neighbors(
    v: int,
    neighbor_iter: Iterable[int],
    parent: Sequence[int],
    role: Sequence[int],
    degree: int,
) -> bool:
    """True if unclustered ``v`` is a hub.

    A hub needs two distinct clustered neighbors that can be placed in
    different clusters: either their recorded parents differ, or one of them
    is a shared member (similar to cores of at least two clusters), in which
    case it can always supply a cluster different from the other neighbor's.
    A single clustered neighbor — even a shared member — is not enough.
    """
    if degree <= 1:
        return False
    first = -1
    first_shared = False
    for x in neighbor_iter:
        px = parent[x]
        if px < 0:
            continue
        shared = role[x] == ROLE_MEMBER_SHARED
        if first < 0:
            first = px
            first_shared = shared
        elif first_shared or shared or px != first:
            return True
    return False


def _classify_range(
    g: Graph, st: ClusterState, vlo: int, vhi: int
) -> None:
    adj = g.adjacency
    offs = g.vertex_offsets
    parent = st.parent
    role = st.role
    for v in range(vlo, vhi):
        if parent[v] >= 0:
            continue
        lo, hi = offs[v], offs[v + 1]
        if classify_vertex_from_neighbors(
            v, adj[lo:hi], parent, role, hi - lo
        ):
            parent[v] = PARENT_HUB
            role[v] = ROLE_HUB
        else:
            parent[v] = PARENT_NONE
            role[v] = ROLE_OUTLIER


def classify_hub_outlier(
    g: Graph,
    st: ClusterState,
    *,
    workers: int = 1,
    stats: Optional["StatsReport"] = None,
) -> None:
    """Label every unclustered vertex Hub or Outlier.  Idempotent."""
    t0 = time.perf_counter_ns()
    if workers <= 1:
        _classify_range(g, st, 0, st.n)
    else:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            for fut in [
                ex.submit(_classify_range, g, st, lo, hi)
                for lo, hi in _chunks(st.n, workers)
            ]:
                fut.result()
    t1 = time.perf_counter_ns()
    if stats is not None:
        stats.phases["classify"] = stats.phases.get("classify", 0) + (t1 - t0) // 1000


# --- results & stats ----------------------------------------------------------


@dataclass
class ClusteringResult:
    """Final per-vertex labelling in a comparison-friendly form.

    ``cluster_id[v]`` is the root vertex id of ``v``'s cluster tree (a
    canonical, flattened root) for cores and members, and ``-1`` for hubs
    and outliers.  ``orig_ids`` restores external vertex names in output.
    """

    n: int
    roles: list[Role]
    cluster_id: list[int]
    orig_ids: list[int]

    def core_set(self) -> set[int]:
        return {v for v in range(self.n) if self.roles[v] is Role.CORE}

    def member_set(self) -> set[int]:
        return {v for v in range(self.n) if self.roles[v] is Role.MEMBER}

    def hub_set(self) -> set[int]:
        return {v for v in range(self.n) if self.roles[v] is Role.HUB}

    def outlier_set(self) -> set[int]:
        return {v for v in range(self.n) if self.roles[v] is Role.OUTLIER}

    def core_equivalence(self) -> set[frozenset[int]]:
        """Same-cluster classes over core vertices."""
        classes: dict[int, set[int]] = {}
        for v in range(self.n):
            if self.roles[v] is Role.CORE:
                classes.setdefault(self.cluster_id[v], set()).add(v)
        return {frozenset(s) for s in classes.values()}

    def to_text(self) -> str:
        """One line per vertex: ``original_id<TAB>role<TAB>cluster_id``.

        The cluster id is the original id of the cluster's root vertex, or
        ``-1`` for hubs and outliers.
        """
        lines = []
        for v in range(self.n):
            role = self.roles[v]
            cid = self.cluster_id[v]
            shown = self.orig_ids[cid] if cid >= 0 else -1
            lines.append(f"{self.orig_ids[v]}\t{ROLE_LETTERS[role]}\t{shown}")
        return "\n".join(lines) + ("\n" if lines else "")

    def write(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as f:
            f.write(self.to_text())


@dataclass
class StatsReport:
    """Operation counts and phase timings, emitted as ``key=value`` lines."""

    n: int = 0
    m: int = 0
    workers: int = 1
    sim_evals: int = 0
    adj_probes: int = 0
    union_retries: int = 0
    probe_bound_violations: int = 0
    phases: dict[str, int] = field(default_factory=dict)  # name -> microseconds
    extra: dict[str, int] = field(default_factory=dict)

    def add_counters(self, c: _Counters) -> None:
        self.sim_evals += c.sim_evals
        self.adj_probes += c.adj_probes
        self.union_retries += c.union_retries
        self.probe_bound_violations += c.probe_bound_violations

    def to_text(self) -> str:
        lines = [
            f"n={self.n}",
            f"m={self.m}",
            f"workers={self.workers}",
            f"sim_evals={self.sim_evals}",
            f"adj_probes={self.adj_probes}",
            f"union_retries={self.union_retries}",
            f"probe_bound_violations={self.probe_bound_violations}",
        ]
        lines.extend(f"phase_{name}_us={us}" for name, us in self.phases.items())
        lines.extend(f"{key}={val}" for key, val in sorted(self.extra.items()))
        return "\n".join(lines) + "\n"

    def write(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as f:
            f.write(self.to_text())


def build_result(st: ClusterState, orig_ids: Sequence[int]) -> ClusteringResult:
    """Freeze the working state into a :class:`ClusteringResult`."""
    roles: list[Role] = []
    cluster_id: list[int] = []
    for v in range(st.n):
        r = _PUBLIC_ROLE[st.role[v]]
        if r not in (Role.CORE, Role.MEMBER, Role.HUB, Role.OUTLIER):
            raise RuntimeError(f"vertex {v} finished with unresolved role {r}")
        roles.append(r)
        cluster_id.append(st.parent[v] if st.parent[v] >= 0 else -1)
    return ClusteringResult(
        n=st.n, roles=roles, cluster_id=cluster_id, orig_ids=list(orig_ids)
    )


def scan_in_memory(
    g: Graph, mu: int, epsilon: EpsilonLike, *, workers: int = 1
) -> tuple[ClusteringResult, StatsReport]:
    """Run the full three-phase pipeline on an in-memory graph."""
    if mu < 2:
        raise ValueError(f"mu must be >= 2, got {mu}")
    if workers < 1:
        raise ValueError(f"workers must be >= 1, got {workers}")
    epsilon_fraction(epsilon)  # validate early
    stats = StatsReport(n=g.n, m=g.m, workers=workers)
    t0 = time.perf_counter_ns()
    st = init_state(g)
    identify_core(g, mu, epsilon, st, workers=workers, stats=stats)
    detect_clusters(g, epsilon, st, workers=workers, stats=stats)
    classify_hub_outlier(g, st, workers=workers, stats=stats)
    result = build_result(st, g.orig_ids)
    stats.phases["total"] = (time.perf_counter_ns() - t0) // 1000
    return result, stats
