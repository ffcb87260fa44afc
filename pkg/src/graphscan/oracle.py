"""Brute-force serial reference clustering and result equivalence.

This module recomputes everything from first principles — exact rational
similarity for every edge, core test by direct counting, clusters by BFS
over similar core-core edges, multi-membership recorded in full — and
deliberately shares no engine code beyond the graph container and the
epsilon parsing (both sides must agree on what the threshold *is* before
comparing how they apply it).

Because border vertices may legitimately attach to any cluster with an
eligible core neighbor, engine results are compared against the oracle up
to that freedom: equal core sets, equal same-cluster classes over cores,
every member attached to one of its eligible clusters, and equal hub and
outlier sets.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from .graph import Graph
from .scan import ClusteringResult, EpsilonLike, Role, epsilon_fraction


def common_neighbors(g: Graph, u: int, v: int) -> int:
    """Size of the open common neighborhood, by sorted-run merge."""
    adj = g.adjacency
    offs = g.vertex_offsets
    i, ihi = offs[u], offs[u + 1]
    j, jhi = offs[v], offs[v + 1]
    count = 0
    while i < ihi and j < jhi:
        x, y = adj[i], adj[j]
        if x == y:
            count += 1
            i += 1
            j += 1
        elif x < y:
            i += 1
        else:
            j += 1
    return count


def edge_similarities(g: Graph) -> list[int]:
    """Open common-neighbor count for every edge, indexed by edge id.

    The similarity of edge ``k = {u, v}`` is ``(commons[k] + 2)`` over
    ``sqrt((deg u + 1) * (deg v + 1))``; only the count depends on the
    adjacency, so precomputing it lets one pass serve many thresholds.
    """
    pairs = g.edge_list
    return [common_neighbors(g, pairs[2 * k], pairs[2 * k + 1]) for k in range(g.m)]


def _is_similar(common: int, du: int, dv: int, eps2: Fraction) -> bool:
    lhs = Fraction((common + 2) ** 2, (du + 1) * (dv + 1))
    return lhs >= eps2


@dataclass
class OracleResult:
    """Ground-truth clustering with full multi-membership information.

    ``clusters`` maps a cluster label to its vertex set; border vertices
    appear in every cluster they are eligible for.  ``memberships[v]`` is
    the set of cluster labels containing ``v``.  Labels are the smallest
    core id in the cluster.
    """

    n: int
    cores: set[int]
    clusters: dict[int, set[int]] = field(default_factory=dict)
    memberships: dict[int, set[int]] = field(default_factory=dict)
    hubs: set[int] = field(default_factory=set)
    outliers: set[int] = field(default_factory=set)

    def members(self) -> set[int]:
        return {
            v
            for v, labels in self.memberships.items()
            if labels and v not in self.cores
        }

    def unclustered(self) -> set[int]:
        return {v for v in range(self.n) if not self.memberships.get(v)}

    def core_equivalence(self) -> set[frozenset[int]]:
        return {
            frozenset(vs & self.cores)
            for vs in self.clusters.values()
        }


def serial_scan(
    g: Graph,
    mu: int,
    epsilon: EpsilonLike,
    commons: Optional[Sequence[int]] = None,
) -> OracleResult:
    """Direct-definition clustering: no pruning, no shared engine state.

    ``commons`` may carry precomputed per-edge common-neighbor counts (from
    :func:`edge_similarities`) so parameter sweeps over one graph skip the
    neighborhood merges.
    """
    if mu < 2:
        raise ValueError(f"mu must be >= 2, got {mu}")
    eps2 = epsilon_fraction(epsilon) ** 2
    offs = g.vertex_offsets
    adj = g.adjacency
    pairs = g.edge_list
    if commons is None:
        commons = edge_similarities(g)

    similar = [False] * g.m
    sim_count = [0] * g.n  # similar neighbors, self excluded
    for k in range(g.m):
        u, v = pairs[2 * k], pairs[2 * k + 1]
        du = offs[u + 1] - offs[u]
        dv = offs[v + 1] - offs[v]
        if _is_similar(commons[k], du, dv, eps2):
            similar[k] = True
            sim_count[u] += 1
            sim_count[v] += 1

    cores = {v for v in range(g.n) if sim_count[v] + 1 >= mu}

    # Similar core-core adjacency, then clusters as its components.
    core_adj: dict[int, list[int]] = {v: [] for v in cores}
    for k in range(g.m):
        if not similar[k]:
            continue
        u, v = pairs[2 * k], pairs[2 * k + 1]
        if u in cores and v in cores:
            core_adj[u].append(v)
            core_adj[v].append(u)

    label_of: dict[int, int] = {}
    clusters: dict[int, set[int]] = {}
    seen: set[int] = set()
    for start in sorted(cores):
        if start in seen:
            continue
        component = []
        queue = [start]
        seen.add(start)
        while queue:
            x = queue.pop()
            component.append(x)
            for y in core_adj[x]:
                if y not in seen:
                    seen.add(y)
                    queue.append(y)
        label = min(component)
        clusters[label] = set(component)
        for x in component:
            label_of[x] = label

    memberships: dict[int, set[int]] = {v: {label_of[v]} for v in label_of}
    for k in range(g.m):
        if not similar[k]:
            continue
        u, v = pairs[2 * k], pairs[2 * k + 1]
        for core, w in ((u, v), (v, u)):
            if core in cores and w not in cores:
                label = label_of[core]
                memberships.setdefault(w, set()).add(label)
                clusters[label].add(w)

    hubs: set[int] = set()
    outliers: set[int] = set()
    for v in range(g.n):
        if memberships.get(v):
            continue
        if _oracle_is_hub(g, v, memberships):
            hubs.add(v)
        else:
            outliers.add(v)

    return OracleResult(
        n=g.n,
        cores=cores,
        clusters=clusters,
        memberships=memberships,
        hubs=hubs,
        outliers=outliers,
    )


def _oracle_is_hub(g: Graph, v: int, memberships: dict[int, set[int]]) -> bool:
    """Two neighbors of ``v`` can be placed in different clusters."""
    offs = g.vertex_offsets
    adj = g.adjacency
    clustered = 0
    union_labels: set[int] = set()
    for i in range(offs[v], offs[v + 1]):
        labels = memberships.get(adj[i])
        if labels:
            clustered += 1
            union_labels.update(labels)
            if clustered >= 2 and len(union_labels) >= 2:
                return True
    return False


@dataclass
class EquivalenceReport:
    """Outcome of an engine-vs-oracle comparison; falsy when they differ."""

    equivalent: bool
    detail: str = ""

    def __bool__(self) -> bool:
        return self.equivalent


def results_equivalent(
    engine: ClusteringResult, oracle: OracleResult
) -> EquivalenceReport:
    """Check engine output against ground truth, up to member freedom.

    Verifies in order: (a) identical core sets; (b) identical same-cluster
    partitions of the cores; (c) every engine member lies in an oracle
    cluster it is eligible for, and the member sets coincide; (d) identical
    hub and outlier sets.  The first violated clause is reported with a
    witness vertex or class.
    """
    if engine.n != oracle.n:
        return EquivalenceReport(False, f"vertex counts differ: {engine.n} != {oracle.n}")

    engine_cores = engine.core_set()
    if engine_cores != oracle.cores:
        extra = sorted(engine_cores - oracle.cores)
        missing = sorted(oracle.cores - engine_cores)
        return EquivalenceReport(
            False, f"core sets differ: engine-only {extra[:5]}, oracle-only {missing[:5]}"
        )

    engine_classes = engine.core_equivalence()
    oracle_classes = oracle.core_equivalence()
    if engine_classes != oracle_classes:
        diff = engine_classes ^ oracle_classes
        witness = sorted(next(iter(diff)))
        return EquivalenceReport(
            False,
            f"core equivalence classes differ "
            f"({len(engine_classes)} vs {len(oracle_classes)}); "
            f"witness class {witness[:8]}",
        )

    # Engine cluster label -> oracle label, via any core in the class (the
    # classes were just shown equal, so this is well-defined).
    oracle_label_of_core = {}
    for label, vs in oracle.clusters.items():
        for v in vs & oracle.cores:
            oracle_label_of_core[v] = label
    engine_to_oracle: dict[int, int] = {}
    for v in engine_cores:
        engine_to_oracle[engine.cluster_id[v]] = oracle_label_of_core[v]

    engine_members = engine.member_set()
    oracle_members = oracle.members()
    if engine_members != oracle_members:
        extra = sorted(engine_members - oracle_members)
        missing = sorted(oracle_members - engine_members)
        return EquivalenceReport(
            False,
            f"member sets differ: engine-only {extra[:5]}, oracle-only {missing[:5]}",
        )
    for v in engine_members:
        attached = engine_to_oracle.get(engine.cluster_id[v])
        eligible = oracle.memberships.get(v, set())
        if attached not in eligible:
            return EquivalenceReport(
                False,
                f"member {v} attached to cluster {attached}, "
                f"eligible clusters {sorted(eligible)}",
            )

    if engine.hub_set() != oracle.hubs:
        extra = sorted(engine.hub_set() - oracle.hubs)
        missing = sorted(oracle.hubs - engine.hub_set())
        return EquivalenceReport(
            False, f"hub sets differ: engine-only {extra[:5]}, oracle-only {missing[:5]}"
        )
    if engine.outlier_set() != oracle.outliers:
        extra = sorted(engine.outlier_set() - oracle.outliers)
        missing = sorted(oracle.outliers - engine.outlier_set())
        return EquivalenceReport(
            False,
            f"outlier sets differ: engine-only {extra[:5]}, oracle-only {missing[:5]}",
        )

    return EquivalenceReport(True)
