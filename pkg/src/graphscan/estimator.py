"""scikit-learn style wrapper around the clustering engine.

``StructuralClustering`` follows the clusterer conventions (constructor
stores parameters verbatim, ``fit`` computes ``labels_``, ``fit_predict``
via ``ClusterMixin``), so it composes with ``clone``, ``get_params`` and
friends.  Input is a graph, not a feature matrix: an edge array of shape
``(m, 2)``, a square (sparse or dense) adjacency matrix, a
:class:`~graphscan.graph.Graph` / :class:`~graphscan.graph.EdgeList`, or a
path to an edge-list file or binary graph cache.
"""

from __future__ import annotations

import os
from numbers import Integral
from typing import Optional

import numpy as np
from scipy import sparse
from sklearn.base import BaseEstimator, ClusterMixin
from sklearn.utils.validation import check_array

from .graph import EdgeList, Graph, build_graph, is_graph_cache, load_graph, parse_edge_list
from .partition import GraphMeta, partition_graph, scan_out_of_core
from .scan import ROLE_LETTERS, Role, scan_in_memory


def _edges_from_adjacency(X) -> EdgeList:
    coo = sparse.coo_matrix(X)
    if coo.shape[0] != coo.shape[1]:
        raise ValueError(f"adjacency matrix must be square, got {coo.shape}")
    edges = {
        (int(i), int(j)) if i < j else (int(j), int(i))
        for i, j, v in zip(coo.row, coo.col, coo.data)
        if v and i != j
    }
    return EdgeList(n_hint=coo.shape[0], edges=sorted(edges))


def _edges_from_pairs(X) -> EdgeList:
    pairs = check_array(X, dtype=int, ensure_2d=True)
    if pairs.shape[1] != 2:
        raise ValueError(f"edge array must have shape (m, 2), got {pairs.shape}")
    if pairs.size and pairs.min() < 0:
        raise ValueError("edge array contains negative vertex ids")
    edges = set()
    for u, v in pairs:
        if u != v:
            edges.add((int(u), int(v)) if u < v else (int(v), int(u)))
    n_hint = int(pairs.max()) + 1 if pairs.size else 0
    return EdgeList(n_hint=n_hint, edges=sorted(edges))


class StructuralClustering(ClusterMixin, BaseEstimator):
    """Density-free structural clustering of a graph (DBSCAN-like API).

    Vertices dense enough in shared neighborhood structure become cores;
    clusters grow over similar core-core edges and absorb similar border
    vertices; everything else is labelled noise (hubs bridge clusters,
    outliers do not).

    Parameters
    ----------
    epsilon : float or str, default=0.6
        Similarity threshold in (0, 1].  A decimal string is applied
        exactly, floats at their binary value.
    mu : int, default=3
        Minimum size of a vertex's similar neighborhood (self included)
        for the vertex to be a core.
    mode : {"inmem", "outofcore"}, default="inmem"
        Engine choice; out-of-core needs ``budget_bytes``.
    budget_bytes : int, optional
        Memory budget for out-of-core partitioning.
    workers : int, default=1
        Worker threads; 1 is the deterministic fixed schedule.
    spill_dir : str, optional
        Directory for out-of-core partition files.
    input_type : {"auto", "edges", "adjacency"}, default="auto"
        How to interpret array input to :meth:`fit`.  "auto" reads
        two-column arrays as edge lists and anything sparse or square
        (other than 2x2) as an adjacency matrix.

    Attributes
    ----------
    labels_ : ndarray of shape (n_vertices,)
        Cluster index per vertex, ``-1`` for noise (hubs and outliers).
    roles_ : ndarray of shape (n_vertices,)
        One of ``"C"``, ``"M"``, ``"H"``, ``"O"`` per vertex.
    core_sample_indices_ : ndarray
        Indices of core vertices.
    stats_ : StatsReport
        Operation counts and phase timings of the run.

    Examples
    --------
    >>> edges = [(0, 1), (0, 2), (1, 2), (1, 3), (2, 3), (3, 4)]
    >>> StructuralClustering(epsilon="0.5", mu=2).fit_predict(edges)
    array([0, 0, 0, 0, 0])
    """

    def __init__(
        self,
        epsilon="0.6",
        mu=3,
        *,
        mode="inmem",
        budget_bytes=None,
        workers=1,
        spill_dir=None,
        input_type="auto",
    ):
        self.epsilon = epsilon
        self.mu = mu
        self.mode = mode
        self.budget_bytes = budget_bytes
        self.workers = workers
        self.spill_dir = spill_dir
        self.input_type = input_type

    def _as_graph(self, X) -> Graph:
        if isinstance(X, Graph):
            return X
        if isinstance(X, EdgeList):
            return build_graph(X)
        if isinstance(X, (str, os.PathLike)):
            path = os.fspath(X)
            if is_graph_cache(path):
                return load_graph(path)
            with open(path, "rb") as f:
                return build_graph(parse_edge_list(f))
        if self.input_type not in ("auto", "edges", "adjacency"):
            raise ValueError(f"unknown input_type: {self.input_type!r}")
        if self.input_type == "adjacency":
            return build_graph(_edges_from_adjacency(X))
        if self.input_type == "edges":
            return build_graph(_edges_from_pairs(X))
        if sparse.issparse(X):
            return build_graph(_edges_from_adjacency(X))
        arr = np.asarray(X)
        if arr.ndim == 2 and arr.shape[1] == 2:
            return build_graph(_edges_from_pairs(arr))
        if arr.ndim == 2 and arr.shape[0] == arr.shape[1]:
            return build_graph(_edges_from_adjacency(arr))
        raise ValueError(
            f"cannot interpret input of shape {getattr(arr, 'shape', None)} as a graph"
        )

    def fit(self, X, y=None):
        """Cluster the graph ``X`` and set the fitted attributes."""
        if not isinstance(self.mu, Integral) or self.mu < 2:
            raise ValueError(f"mu must be an integer >= 2, got {self.mu!r}")
        if not isinstance(self.workers, Integral) or self.workers < 1:
            raise ValueError(f"workers must be an integer >= 1, got {self.workers!r}")
        g = self._as_graph(X)
        if self.mode == "outofcore":
            if self.budget_bytes is None:
                raise ValueError("mode='outofcore' requires budget_bytes")
            plan = partition_graph(g, self.budget_bytes, spill_dir=self.spill_dir)
            meta = GraphMeta.from_graph(g)
            result, stats = scan_out_of_core(
                meta, plan, self.mu, self.epsilon, workers=self.workers
            )
        elif self.mode == "inmem":
            result, stats = scan_in_memory(
                g, self.mu, self.epsilon, workers=self.workers
            )
        else:
            raise ValueError(f"unknown mode: {self.mode!r}")

        roots = sorted({cid for cid in result.cluster_id if cid >= 0})
        root_index = {r: i for i, r in enumerate(roots)}
        labels = np.full(result.n, -1, dtype=np.int64)
        for v in range(result.n):
            cid = result.cluster_id[v]
            if cid >= 0:
                labels[v] = root_index[cid]
        self.labels_ = labels
        self.roles_ = np.array(
            [ROLE_LETTERS[r] for r in result.roles], dtype="U1"
        )
        self.core_sample_indices_ = np.flatnonzero(
            np.fromiter(
                (r is Role.CORE for r in result.roles), dtype=bool, count=result.n
            )
        )
        self.stats_ = stats
        return self
