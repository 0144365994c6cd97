"""Generators for the benchmark environments.

Every generator returns ``(Graph, EnvSpec)``. The EnvSpec carries the start
rule (a fixed node, or None for a uniformly random start) and the optional
target node used by hitting-time runs. Grid-family environments label their
actions with directions and map out-of-boundary moves to self-loops, so a
wall bump is a real, countable step.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional

from .graph_core import Graph, from_undirected_edges

ROOM_SIDE = 5  # multiroom rooms are open 5x5 cell squares


class ParameterError(ValueError):
    """An environment parameter is out of range."""


@dataclass(frozen=True)
class EnvSpec:
    kind: str
    params: Mapping[str, int] = field(default_factory=dict)
    start: Optional[int] = None  # None: start node drawn uniformly per run
    target: Optional[int] = None

    def __post_init__(self):
        # plain dict (not a read-only proxy) so instances can cross process
        # boundaries; treat it as frozen
        object.__setattr__(self, "params", dict(self.params))

    def describe_params(self) -> str:
        return ";".join(f"{k}={self.params[k]}" for k in sorted(self.params))


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise ParameterError(message)


def make_star(n: int) -> tuple[Graph, EnvSpec]:
    """Hub node 0 joined to n leaves; start at the hub."""
    _require(n >= 2, f"star needs n >= 2, got {n}")
    edges = [(0, i) for i in range(1, n + 1)]
    g = from_undirected_edges(n + 1, edges, name="star", params={"n": n})
    return g, EnvSpec("star", {"n": n}, start=0)


def make_path(n: int) -> tuple[Graph, EnvSpec]:
    """Line of n+1 nodes; start at node 0, target at node n."""
    _require(n >= 2, f"path needs n >= 2, got {n}")
    out, labels = _line_rows(n + 1)
    g = Graph(n + 1, out, name="path", params={"n": n}, labels=labels)
    return g, EnvSpec("path", {"n": n}, start=0, target=n)


def make_circle(n: int) -> tuple[Graph, EnvSpec]:
    """Cycle of n+1 nodes, every degree 2; start at node 0."""
    _require(n >= 2, f"circle needs n >= 2, got {n}")
    m = n + 1
    out = [((i - 1) % m, (i + 1) % m) for i in range(m)]
    labels = [("left", "right")] * m
    g = Graph(m, out, name="circle", params={"n": n}, labels=labels)
    return g, EnvSpec("circle", {"n": n}, start=0)


def make_clique(n: int) -> tuple[Graph, EnvSpec]:
    """Complete graph on n nodes; start at node 0."""
    _require(n >= 2, f"clique needs n >= 2, got {n}")
    edges = [(i, j) for i in range(n) for j in range(i + 1, n)]
    g = from_undirected_edges(n, edges, name="clique", params={"n": n})
    return g, EnvSpec("clique", {"n": n}, start=0)


def make_barbell(n: int) -> tuple[Graph, EnvSpec]:
    """Two n-cliques bridged by one edge; start uniform over all 2n nodes."""
    _require(n >= 2, f"barbell needs n >= 2, got {n}")
    edges = [(i, j) for i in range(n) for j in range(i + 1, n)]
    edges += [(n + i, n + j) for i in range(n) for j in range(i + 1, n)]
    edges.append((n - 1, n))
    g = from_undirected_edges(2 * n, edges, name="barbell", params={"n": n})
    return g, EnvSpec("barbell", {"n": n}, start=None)


def make_btree(b: int, H: int) -> tuple[Graph, EnvSpec]:
    """Balanced b-ary tree of depth H; node i's children are i*b+1 .. i*b+b.

    Node count is (b**(H+1) - 1) // (b - 1). Start is the root.
    """
    _require(b >= 2, f"btree needs branching b >= 2, got {b}")
    _require(H >= 1, f"btree needs depth H >= 1, got {H}")
    m = (b ** (H + 1) - 1) // (b - 1)
    edges = []
    for i in range(m):
        for k in range(1, b + 1):
            c = i * b + k
            if c < m:
                edges.append((i, c))
    g = from_undirected_edges(m, edges, name="btree", params={"b": b, "H": H})
    return g, EnvSpec("btree", {"b": b, "H": H}, start=0)


def _line_rows(m: int):
    out: list[tuple[int, ...]] = []
    labels: list[tuple[str, ...]] = []
    for i in range(m):
        row, lab = [], []
        if i > 0:
            row.append(i - 1)
            lab.append("left")
        if i < m - 1:
            row.append(i + 1)
            lab.append("right")
        out.append(tuple(row))
        labels.append(tuple(lab))
    return out, labels


def make_grid1d(n: int) -> tuple[Graph, EnvSpec]:
    """n+1 states on a line, endpoints degree 1; start uniform."""
    _require(n >= 2, f"grid1d needs n >= 2, got {n}")
    out, labels = _line_rows(n + 1)
    g = Graph(n + 1, out, name="grid1d", params={"n": n}, labels=labels)
    return g, EnvSpec("grid1d", {"n": n}, start=None)


_GRID2D_DIRS = (("up", -1, 0), ("down", 1, 0), ("left", 0, -1), ("right", 0, 1))


def make_grid2d(n1: int, n2: int) -> tuple[Graph, EnvSpec]:
    """n1 x n2 grid with 4 direction actions; boundary moves self-loop; start uniform."""
    _require(n1 >= 2 and n2 >= 2, f"grid2d needs n1, n2 >= 2, got {n1}, {n2}")
    out, labels = [], []
    for r in range(n1):
        for c in range(n2):
            row, lab = [], []
            for name, dr, dc in _GRID2D_DIRS:
                rr, cc = r + dr, c + dc
                if 0 <= rr < n1 and 0 <= cc < n2:
                    row.append(rr * n2 + cc)
                else:
                    row.append(r * n2 + c)
                lab.append(name)
            out.append(tuple(row))
            labels.append(tuple(lab))
    g = Graph(n1 * n2, out, name="grid2d", params={"n1": n1, "n2": n2}, labels=labels)
    return g, EnvSpec("grid2d", {"n1": n1, "n2": n2}, start=None)


_GRID3D_DIRS = (
    ("up", -1, 0, 0),
    ("down", 1, 0, 0),
    ("left", 0, -1, 0),
    ("right", 0, 1, 0),
    ("forward", 0, 0, -1),
    ("back", 0, 0, 1),
)


def make_grid3d(n1: int, n2: int, n3: int) -> tuple[Graph, EnvSpec]:
    """n1 x n2 x n3 grid with 6 direction actions; boundary moves self-loop; start uniform."""
    _require(
        n1 >= 2 and n2 >= 2 and n3 >= 2,
        f"grid3d needs n1, n2, n3 >= 2, got {n1}, {n2}, {n3}",
    )
    out, labels = [], []
    for i in range(n1):
        for j in range(n2):
            for k in range(n3):
                row, lab = [], []
                for name, di, dj, dk in _GRID3D_DIRS:
                    ii, jj, kk = i + di, j + dj, k + dk
                    if 0 <= ii < n1 and 0 <= jj < n2 and 0 <= kk < n3:
                        row.append((ii * n2 + jj) * n3 + kk)
                    else:
                        row.append((i * n2 + j) * n3 + k)
                    lab.append(name)
                out.append(tuple(row))
                labels.append(tuple(lab))
    m = n1 * n2 * n3
    g = Graph(m, out, name="grid3d", params={"n1": n1, "n2": n2, "n3": n3}, labels=labels)
    return g, EnvSpec("grid3d", {"n1": n1, "n2": n2, "n3": n3}, start=None)


def make_multiroom(rooms: int) -> tuple[Graph, EnvSpec]:
    """Chain of open 5x5 rooms.

    Each room is a fully open ROOM_SIDE x ROOM_SIDE cell square with the
    usual 4 direction actions and self-loops at walls. The bottom-right
    cell's `right` action enters the next room's top-left cell, and that
    cell's `left` action comes back. Start is the top-left cell of room 0.
    """
    _require(rooms >= 1, f"multiroom needs rooms >= 1, got {rooms}")
    side = ROOM_SIDE
    per_room = side * side
    m = rooms * per_room

    def cell(room: int, r: int, c: int) -> int:
        return room * per_room + r * side + c

    out, labels = [], []
    for room in range(rooms):
        for r in range(side):
            for c in range(side):
                row, lab = [], []
                for name, dr, dc in _GRID2D_DIRS:
                    rr, cc = r + dr, c + dc
                    if 0 <= rr < side and 0 <= cc < side:
                        nxt = cell(room, rr, cc)
                    elif name == "right" and r == side - 1 and c == side - 1 and room + 1 < rooms:
                        nxt = cell(room + 1, 0, 0)
                    elif name == "left" and r == 0 and c == 0 and room > 0:
                        nxt = cell(room - 1, side - 1, side - 1)
                    else:
                        nxt = cell(room, r, c)
                    row.append(nxt)
                    lab.append(name)
                out.append(tuple(row))
                labels.append(tuple(lab))
    g = Graph(m, out, name="multiroom", params={"rooms": rooms}, labels=labels)
    return g, EnvSpec("multiroom", {"rooms": rooms}, start=0)


def make_toy_maze() -> tuple[Graph, EnvSpec]:
    """The 7-state 3x3 maze with two blocked cells; start node 0, target node 6.

    Cell layout (rows top to bottom, # blocked)::

        1 # 5
        0 3 4
        2 # 6
    """
    moves = {
        0: [("up", 1), ("down", 2), ("right", 3)],
        1: [("down", 0)],
        2: [("up", 0)],
        3: [("left", 0), ("right", 4)],
        4: [("left", 3), ("up", 5), ("down", 6)],
        5: [("down", 4)],
        6: [("up", 4)],
    }
    out = [tuple(j for _, j in moves[i]) for i in range(7)]
    labels = [tuple(lab for lab, _ in moves[i]) for i in range(7)]
    g = Graph(7, out, name="toy_maze", labels=labels)
    return g, EnvSpec("toy_maze", {}, start=0, target=6)


def make_hanoi(discs: int) -> tuple[Graph, EnvSpec]:
    """State graph of the three-peg disc puzzle.

    A state assigns each disc a peg; stacking order on a peg is forced by
    size, so there are 3**discs states. State id is
    sum(peg[d] * 3**d for d in range(discs)) with disc 0 the smallest.
    Edges are the legal single-disc moves (always reversible). Start: all
    discs on peg 0 (id 0). Target: all discs on peg 2 (the largest id).
    """
    _require(1 <= discs <= 8, f"hanoi needs 1 <= discs <= 8, got {discs}")
    m = 3 ** discs
    edges = set()
    for state in range(m):
        pegs = [(state // 3 ** d) % 3 for d in range(discs)]
        # top disc of a peg is the smallest disc on it
        top = [None, None, None]
        for d in range(discs - 1, -1, -1):
            top[pegs[d]] = d
        for p in range(3):
            d = top[p]
            if d is None:
                continue
            for q in range(3):
                if q == p or (top[q] is not None and top[q] < d):
                    continue
                other = state + (q - p) * 3 ** d
                edges.add((min(state, other), max(state, other)))
    g = from_undirected_edges(m, sorted(edges), name="hanoi", params={"discs": discs})
    return g, EnvSpec("hanoi", {"discs": discs}, start=0, target=m - 1)


_BUILDERS: dict[str, Callable[..., tuple[Graph, EnvSpec]]] = {
    "star": make_star,
    "path": make_path,
    "circle": make_circle,
    "clique": make_clique,
    "barbell": make_barbell,
    "btree": make_btree,
    "grid1d": make_grid1d,
    "grid2d": make_grid2d,
    "grid3d": make_grid3d,
    "multiroom": make_multiroom,
    "toy_maze": make_toy_maze,
    "hanoi": make_hanoi,
}

KINDS = tuple(sorted(_BUILDERS))


def make(kind: str, **params: int) -> tuple[Graph, EnvSpec]:
    """Build an environment by kind name; raises ParameterError on bad input."""
    try:
        builder = _BUILDERS[kind]
    except KeyError:
        raise ParameterError(f"unknown environment kind {kind!r}; known: {', '.join(KINDS)}")
    try:
        return builder(**params)
    except TypeError as exc:
        raise ParameterError(f"bad parameters for {kind}: {exc}") from None
