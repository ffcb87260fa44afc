"""Edge-list ingestion and the immutable indexed graph layout.

The clustering engine works on a compact CSR-style layout with two extra
indexes on top of the usual offsets/adjacency pair:

* ``edge_ids`` maps every adjacency slot to the id of its undirected edge,
  so per-edge state (similarity marks) can be reached from either endpoint.
* ``edge_list`` stores every undirected edge exactly once as an ordered pair
  ``(a, b)`` where ``a`` is the endpoint with the smaller degree (ties broken
  by vertex id).  Edge sweeps iterate this array, which both halves the work
  of an adjacency-based sweep and hands every similarity check its cheaper
  probing side for free.

All arrays are fixed-width integers (``array`` typecodes ``q``/``i``/``I``)
so the layout can be written to and read from a binary cache verbatim.
"""

from __future__ import annotations

import struct
import sys
from array import array
from bisect import bisect_left
from dataclasses import dataclass, field
from typing import BinaryIO, Optional, Sequence, Union

# Vertex ids live in 4-byte signed slots; original (external) ids in 4-byte
# unsigned slots.  Larger inputs are rejected rather than silently widened.
MAX_VERTICES = 2**31 - 1
MAX_EDGES = 2**31 - 1
MAX_ORIGINAL_ID = 2**32 - 1

_GRAPH_MAGIC = b"GSCG"
_GRAPH_VERSION = 1


class ParseError(ValueError):
    """Malformed edge-list input, with the offending 1-based line number."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass
class EdgeList:
    """A normalized undirected edge list.

    ``edges`` holds each undirected edge once as ``(u, v)`` with ``u < v``
    and all ids dense in ``[0, n)``.  ``n_hint`` is the vertex count and may
    exceed the largest endpoint id to carry trailing isolated vertices.
    ``orig_ids`` maps dense ids back to the external ids seen in the input
    (``None`` means the identity mapping).
    """

    n_hint: int
    edges: list[tuple[int, int]]
    orig_ids: Optional[list[int]] = None


def parse_edge_list(source: Union[bytes, str, BinaryIO]) -> EdgeList:
    """Parse a plain-text edge list into a normalized :class:`EdgeList`.

    One ``u v`` pair per line, whitespace-delimited.  Lines whose first
    non-blank character is ``#`` are comments; blank lines are skipped.
    Self-loops are dropped (the vertex is still recorded), duplicate edges in
    either orientation are merged, and non-dense ids are remapped to
    ``[0, n)`` with the original ids retained for output.

    Raises :class:`ParseError` for malformed tokens, wrong token counts,
    negative ids, or ids above the 4-byte unsigned range.
    """
    if hasattr(source, "read"):
        data = source.read()  # type: ignore[union-attr]
    else:
        data = source
    if isinstance(data, bytes):
        try:
            text = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError(f"input is not valid UTF-8 text: {exc}") from None
    else:
        text = data

    vertices: set[int] = set()
    edges: set[tuple[int, int]] = set()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ParseError(
                f"expected two integer tokens, got {len(parts)}: {line!r}", lineno
            )
        try:
            u = int(parts[0])
            v = int(parts[1])
        except ValueError:
            raise ParseError(f"non-integer vertex id in {line!r}", lineno) from None
        if u < 0 or v < 0:
            raise ParseError(f"negative vertex id in {line!r}", lineno)
        if u > MAX_ORIGINAL_ID or v > MAX_ORIGINAL_ID:
            raise ParseError(
                f"vertex id exceeds 4-byte unsigned range in {line!r}", lineno
            )
        vertices.add(u)
        vertices.add(v)
        if u == v:
            continue  # self-loop: drop the edge, keep the vertex
        edges.add((u, v) if u < v else (v, u))

    ids = sorted(vertices)
    remap = {orig: dense for dense, orig in enumerate(ids)}
    dense_edges = sorted((remap[a], remap[b]) for a, b in edges)
    return EdgeList(n_hint=len(ids), edges=dense_edges, orig_ids=ids)


@dataclass
class Graph:
    """Immutable indexed graph layout (see module docstring).

    Invariants:
      * ``degree(u) == vertex_offsets[u+1] - vertex_offsets[u]``
      * every adjacency run is strictly increasing (binary-searchable)
      * ``edge_ids`` is a 2-to-1 surjection from adjacency slots onto
        ``[0, m)`` and inverts ``edge_list``
      * every ``edge_list`` pair ``(a, b)`` has ``deg(a) < deg(b)``, or equal
        degrees and ``a < b``; pairs are grouped by ``a`` in ascending order

    The arrays must not be mutated after construction; all clustering phases
    read them concurrently without synchronization.
    """

    n: int
    m: int
    vertex_offsets: array  # typecode 'q', length n+1
    adjacency: array  # typecode 'i', length 2m
    edge_ids: array  # typecode 'i', length 2m
    edge_list: array  # typecode 'i', length 2m (flattened (a, b) pairs)
    orig_ids: array  # typecode 'I', length n

    def degree(self, u: int) -> int:
        return self.vertex_offsets[u + 1] - self.vertex_offsets[u]

    def neighbors(self, u: int) -> list[int]:
        lo, hi = self.vertex_offsets[u], self.vertex_offsets[u + 1]
        return list(self.adjacency[lo:hi])

    def endpoints(self, k: int) -> tuple[int, int]:
        """The degree-oriented ``(a, b)`` pair of undirected edge ``k``."""
        return self.edge_list[2 * k], self.edge_list[2 * k + 1]

    @property
    def deg_max(self) -> int:
        offs = self.vertex_offsets
        return max((offs[u + 1] - offs[u] for u in range(self.n)), default=0)


def build_graph(el: EdgeList) -> Graph:
    """Build the indexed layout from a normalized edge list.

    Construction is deterministic: any permutation of the same edge set
    yields an identical :class:`Graph`.
    """
    edges = el.edges
    m = len(edges)
    max_id = -1
    for u, v in edges:
        if u > max_id:
            max_id = u
        if v > max_id:
            max_id = v
    n = max(int(el.n_hint), max_id + 1)
    if n > MAX_VERTICES:
        raise ValueError(
            f"vertex count {n} exceeds the 4-byte id range ({MAX_VERTICES})"
        )
    if m > MAX_EDGES:
        raise ValueError(f"edge count {m} exceeds the 4-byte id range ({MAX_EDGES})")

    seen: set[tuple[int, int]] = set()
    deg = [0] * n
    for u, v in edges:
        if not (0 <= u < n and 0 <= v < n):
            raise ValueError(f"edge ({u}, {v}) has an id outside [0, {n})")
        if u == v:
            raise ValueError(f"self-loop on vertex {u}")
        key = (u, v) if u < v else (v, u)
        if key in seen:
            raise ValueError(f"duplicate undirected edge {key}")
        seen.add(key)
        deg[u] += 1
        deg[v] += 1

    offsets = array("q", bytes(8 * (n + 1)))
    total = 0
    for u in range(n):
        offsets[u] = total
        total += deg[u]
    offsets[n] = total

    adjacency = array("i", bytes(4 * 2 * m))
    cursor = list(offsets[:n])
    for u, v in edges:
        adjacency[cursor[u]] = v
        cursor[u] += 1
        adjacency[cursor[v]] = u
        cursor[v] += 1
    for u in range(n):
        lo, hi = offsets[u], offsets[u + 1]
        if hi - lo > 1:
            run = sorted(adjacency[lo:hi])
            adjacency[lo:hi] = array("i", run)

    # Degree-oriented edge array: each undirected edge once, owned by its
    # smaller-degree endpoint (ties by id), grouped by owner.
    edge_pairs = array("i", bytes(4 * 2 * m))
    k = 0
    for a in range(n):
        da = deg[a]
        for s in range(offsets[a], offsets[a + 1]):
            b = adjacency[s]
            db = deg[b]
            if da < db or (da == db and a < b):
                edge_pairs[2 * k] = a
                edge_pairs[2 * k + 1] = b
                k += 1
    assert k == m

    edge_ids = array("i", bytes(4 * 2 * m))
    for k in range(m):
        a = edge_pairs[2 * k]
        b = edge_pairs[2 * k + 1]
        sa = bisect_left(adjacency, b, offsets[a], offsets[a + 1])
        sb = bisect_left(adjacency, a, offsets[b], offsets[b + 1])
        edge_ids[sa] = k
        edge_ids[sb] = k

    if el.orig_ids is not None:
        if len(el.orig_ids) != n:
            raise ValueError(
                f"orig_ids has {len(el.orig_ids)} entries for {n} vertices"
            )
        orig = array("I", el.orig_ids)
    else:
        orig = array("I", range(n))

    return Graph(
        n=n,
        m=m,
        vertex_offsets=offsets,
        adjacency=adjacency,
        edge_ids=edge_ids,
        edge_list=edge_pairs,
        orig_ids=orig,
    )


def edge_index(g: Graph, u: int, v: int) -> Optional[int]:
    """The undirected edge id of ``{u, v}``, or ``None`` if not adjacent.

    Binary search of ``v`` in ``u``'s adjacency run followed by an
    ``edge_ids`` lookup; symmetric in ``u`` and ``v``.
    """
    if not (0 <= u < g.n and 0 <= v < g.n):
        raise IndexError(f"vertex id out of range: ({u}, {v})")
    if u == v:
        return None
    lo, hi = g.vertex_offsets[u], g.vertex_offsets[u + 1]
    s = bisect_left(g.adjacency, v, lo, hi)
    if s < hi and g.adjacency[s] == v:
        return g.edge_ids[s]
    return None


# --- binary cache ---------------------------------------------------------
#
# Layout (all little-endian):
#   magic "GSCG" | version u32 | n u64 | m u64
#   vertex_offsets  (n+1) x i64
#   adjacency       2m    x i32
#   edge_ids        2m    x i32
#   edge_list       2m    x i32
#   orig_ids        n     x u32

_HEADER = struct.Struct("<4sIQQ")


def _write_array(f: BinaryIO, arr: array) -> None:
    if sys.byteorder == "big":
        arr = array(arr.typecode, arr)
        arr.byteswap()
    f.write(arr.tobytes())


def _read_array(f: BinaryIO, typecode: str, count: int) -> array:
    arr = array(typecode)
    data = f.read(arr.itemsize * count)
    if len(data) != arr.itemsize * count:
        raise ValueError("truncated graph cache")
    arr.frombytes(data)
    if sys.byteorder == "big":
        arr.byteswap()
    return arr


def save_graph(g: Graph, path: str) -> None:
    """Write the five layout arrays to a binary cache file."""
    with open(path, "wb") as f:
        f.write(_HEADER.pack(_GRAPH_MAGIC, _GRAPH_VERSION, g.n, g.m))
        _write_array(f, g.vertex_offsets)
        _write_array(f, g.adjacency)
        _write_array(f, g.edge_ids)
        _write_array(f, g.edge_list)
        _write_array(f, g.orig_ids)


def load_graph(path: str) -> Graph:
    """Read a graph cache written by :func:`save_graph`."""
    with open(path, "rb") as f:
        header = f.read(_HEADER.size)
        if len(header) != _HEADER.size:
            raise ValueError("truncated graph cache header")
        magic, version, n, m = _HEADER.unpack(header)
        if magic != _GRAPH_MAGIC:
            raise ValueError("not a graph cache file (bad magic)")
        if version != _GRAPH_VERSION:
            raise ValueError(f"unsupported graph cache version {version}")
        offsets = _read_array(f, "q", n + 1)
        adjacency = _read_array(f, "i", 2 * m)
        edge_ids = _read_array(f, "i", 2 * m)
        edge_list = _read_array(f, "i", 2 * m)
        orig = _read_array(f, "I", n)
    if offsets[0] != 0 or offsets[n] != 2 * m:
        raise ValueError("corrupt graph cache: bad offset bounds")
    for u in range(n):
        if offsets[u] > offsets[u + 1]:
            raise ValueError("corrupt graph cache: offsets not monotone")
    return Graph(
        n=n,
        m=m,
        vertex_offsets=offsets,
        adjacency=adjacency,
        edge_ids=edge_ids,
        edge_list=edge_list,
        orig_ids=orig,
    )


def is_graph_cache(path: str) -> bool:
    """True if ``path`` starts with the graph-cache magic bytes."""
    try:
        with open(path, "rb") as f:
            return f.read(4) == _GRAPH_MAGIC
    except OSError:
        return False
