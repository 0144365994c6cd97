"""Immutable finite directed graphs with positional action ids.

Nodes are dense integers ``0..m-1``. Each node owns an ordered list of
outgoing actions; the position of an arc in that list is its ActionId, so
a seeded walk replays identically everywhere. Undirected graphs are stored
as two opposing arcs. An action may optionally carry a direction label
(grids and mazes use ``"up"``/``"down"``/``"left"``/``"right"``), which is
what lets a temporally persistent walker re-apply "the same direction" at
a node whose action list differs from the previous node's.
"""

from __future__ import annotations

from collections import deque
from types import MappingProxyType
from typing import Iterable, Mapping, Optional, Sequence

NodeId = int
ActionId = int


class GraphError(ValueError):
    """A graph violated a structural requirement."""


class Graph:
    """Immutable directed graph over nodes ``0..m-1``.

    Parameters
    ----------
    m : int
        Node count, at least 1.
    out : sequence of sequences of int
        ``out[i][a]`` is the successor of node ``i`` under action ``a``.
        Every node needs at least one action (no dead ends).
    name : str
        Generator tag, e.g. ``"star"``.
    params : mapping, optional
        Generator parameters, kept for reporting.
    labels : sequence of sequences of str, optional
        ``labels[i][a]`` names the direction of action ``a`` at node ``i``.
        When given, its shape must match ``out`` and labels must be unique
        per node.
    """

    __slots__ = ("m", "out", "labels", "name", "params", "_label_maps")

    def __init__(
        self,
        m: int,
        out: Sequence[Sequence[NodeId]],
        name: str = "",
        params: Optional[Mapping[str, object]] = None,
        labels: Optional[Sequence[Sequence[str]]] = None,
    ) -> None:
        if m < 1:
            raise GraphError(f"need at least one node, got m={m}")
        if len(out) != m:
            raise GraphError(f"out-list has {len(out)} rows for m={m} nodes")
        rows = []
        for i, row in enumerate(out):
            if len(row) == 0:
                raise GraphError(f"node {i} has no outgoing action")
            for j in row:
                if not 0 <= j < m:
                    raise GraphError(f"node {i} has successor {j} outside 0..{m - 1}")
            rows.append(tuple(row))
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "out", tuple(rows))
        object.__setattr__(self, "name", name)
        object.__setattr__(self, "params", MappingProxyType(dict(params or {})))

        label_rows: Optional[tuple] = None
        label_maps: Optional[tuple] = None
        if labels is not None:
            if len(labels) != m:
                raise GraphError("labels shape does not match node count")
            lrows = []
            lmaps = []
            for i, lrow in enumerate(labels):
                if len(lrow) != len(rows[i]):
                    raise GraphError(f"labels at node {i} do not match its action count")
                if len(set(lrow)) != len(lrow):
                    raise GraphError(f"duplicate direction label at node {i}")
                lrows.append(tuple(lrow))
                lmaps.append(MappingProxyType({lab: a for a, lab in enumerate(lrow)}))
            label_rows = tuple(lrows)
            label_maps = tuple(lmaps)
        object.__setattr__(self, "labels", label_rows)
        object.__setattr__(self, "_label_maps", label_maps)

    def __setattr__(self, key, value):  # pragma: no cover - guard only
        raise AttributeError("Graph is immutable")

    def successor(self, i: NodeId, a: ActionId) -> NodeId:
        return self.out[i][a]

    def find_action(self, i: NodeId, label: str) -> Optional[ActionId]:
        """Action id carrying `label` at node i, or None if absent (or unlabeled graph)."""
        if self._label_maps is None:
            return None
        return self._label_maps[i].get(label)

    def __repr__(self) -> str:
        edges = sum(len(r) for r in self.out)
        tag = self.name or "graph"
        return f"<Graph {tag} m={self.m} arcs={edges}>"


def degree(g: Graph, i: NodeId) -> int:
    """Number of outgoing actions at node i (self-loop actions included)."""
    return len(g.out[i])


def _reachable_from(out: Sequence[Sequence[int]], m: int, source: int) -> int:
    seen = bytearray(m)
    seen[source] = 1
    queue = deque([source])
    count = 1
    while queue:
        u = queue.popleft()
        for v in out[u]:
            if not seen[v]:
                seen[v] = 1
                count += 1
                queue.append(v)
    return count


def is_connected(g: Graph) -> bool:
    """True when node 0 reaches every node and every node reaches node 0.

    Forward reachability runs over the out-arcs, reverse reachability over
    the transposed arcs; both must cover all ``m`` nodes. For graphs built
    from undirected edge sets the two sweeps coincide.
    """
    if _reachable_from(g.out, g.m, 0) != g.m:
        return False
    rev: list[list[int]] = [[] for _ in range(g.m)]
    for i, row in enumerate(g.out):
        for j in row:
            rev[j].append(i)
    return _reachable_from(rev, g.m, 0) == g.m


def bfs_distances(g: Graph, source: NodeId) -> list[int]:
    """Shortest-path distance (in arcs) from `source` to every node; -1 if unreached."""
    dist = [-1] * g.m
    dist[source] = 0
    queue = deque([source])
    while queue:
        u = queue.popleft()
        du = dist[u]
        for v in g.out[u]:
            if dist[v] < 0:
                dist[v] = du + 1
                queue.append(v)
    return dist


def eccentricity_max(g: Graph) -> int:
    """Diameter: max over ordered node pairs of the shortest-path distance.

    Raises GraphError when some pair is unreachable.
    """
    best = 0
    for s in range(g.m):
        dist = bfs_distances(g, s)
        worst = max(dist)
        if min(dist) < 0:
            raise GraphError("eccentricity_max needs a connected graph")
        if worst > best:
            best = worst
    return best


def from_undirected_edges(
    m: int,
    edges: Iterable[tuple[int, int]],
    name: str = "",
    params: Optional[Mapping[str, object]] = None,
) -> Graph:
    """Build a Graph from an undirected simple edge set.

    Neighbor lists are sorted ascending, so action ids are reproducible:
    action ``a`` at node ``i`` points to its ``a``-th smallest neighbor.
    """
    nbrs: list[set[int]] = [set() for _ in range(m)]
    for u, v in edges:
        if u == v:
            raise GraphError(f"self-loop edge ({u},{v}) not allowed in undirected input")
        if not (0 <= u < m and 0 <= v < m):
            raise GraphError(f"edge ({u},{v}) outside 0..{m - 1}")
        nbrs[u].add(v)
        nbrs[v].add(u)
    return Graph(m, [sorted(s) for s in nbrs], name=name, params=params)


def dump_adjacency(g: Graph) -> str:
    """Line-oriented adjacency dump: node count, then one `i: j1 j2 ...` line per node."""
    lines = [str(g.m)]
    for i in range(g.m):
        lines.append(f"{i}: " + " ".join(str(j) for j in g.out[i]))
    return "\n".join(lines) + "\n"
