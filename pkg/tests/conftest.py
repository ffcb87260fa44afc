import random

import pytest

from graphscan import EdgeList, build_graph

# 14 vertices, two dense communities bridged by vertex 8; at epsilon=0.6,
# mu=3 this splits into cores {0,1,4,7} + member 2 and cores {9..13},
# with 8 a hub and 3, 5, 6 outliers.  Worked out by hand; several tests
# freeze expectations against it.
TWO_COMMUNITIES = [
    (0, 1), (0, 2), (0, 3), (0, 4), (0, 5), (0, 6), (0, 7),
    (1, 2), (1, 4), (1, 7), (2, 8), (4, 7),
    (8, 9),
    (9, 10), (9, 11), (9, 12), (9, 13),
    (10, 11), (10, 12), (10, 13), (11, 12), (11, 13), (12, 13),
]


def gnm(n: int, m: int, seed: int):
    """Random simple graph with exactly min(m, C(n,2)) edges."""
    rng = random.Random(seed)
    all_pairs = [(u, v) for u in range(n) for v in range(u + 1, n)]
    edges = sorted(rng.sample(all_pairs, min(m, len(all_pairs))))
    return build_graph(EdgeList(n_hint=n, edges=edges))


@pytest.fixture
def two_communities():
    return build_graph(EdgeList(n_hint=14, edges=sorted(TWO_COMMUNITIES)))


@pytest.fixture
def triangle():
    return build_graph(EdgeList(n_hint=3, edges=[(0, 1), (0, 2), (1, 2)]))
