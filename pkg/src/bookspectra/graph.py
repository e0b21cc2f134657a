"""Graph value type, the extremal families, graph6 I/O and structural recognizers.

Adjacency is stored as one Python ``int`` per vertex used as a bit row, so
common neighbourhoods are ``row[u] & row[v]`` and degrees are popcounts.
"""

from __future__ import annotations

import os
from collections import deque
from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Iterator, Sequence

import numpy as np

DEFAULT_VERTEX_CAP = 512


def vertex_cap() -> int:
    """Current vertex cap; ``BOOKSPECTRA_VERTEX_CAP`` overrides the default."""
    raw = os.environ.get("BOOKSPECTRA_VERTEX_CAP")
    if raw is None:
        return DEFAULT_VERTEX_CAP
    try:
        cap = int(raw)
    except ValueError:
        raise ValueError(f"BOOKSPECTRA_VERTEX_CAP must be an integer, got {raw!r}") from None
    if cap < 1:
        raise ValueError("BOOKSPECTRA_VERTEX_CAP must be positive")
    return cap


class Graph:
    """Immutable undirected simple graph on vertices ``0..n-1``."""

    __slots__ = ("_n", "_rows", "_m")

    def __init__(self, n: int, rows: Sequence[int], *, check: bool = True):
        if n < 0:
            raise ValueError("vertex count must be non-negative")
        if n > vertex_cap():
            raise ValueError(f"{n} vertices exceeds the vertex cap {vertex_cap()}")
        rows = tuple(int(r) for r in rows)
        if len(rows) != n:
            raise ValueError(f"expected {n} adjacency rows, got {len(rows)}")
        if check:
            full = (1 << n) - 1
            for v, row in enumerate(rows):
                if row & ~full:
                    raise ValueError(f"row {v} has bits outside range")
                if (row >> v) & 1:
                    raise ValueError(f"self-loop at vertex {v}")
                w = row
                while w:
                    low = w & -w
                    u = low.bit_length() - 1
                    if not (rows[u] >> v) & 1:
                        raise ValueError(f"asymmetric adjacency between {v} and {u}")
                    w ^= low
        self._n = n
        self._rows = rows
        total = sum(r.bit_count() for r in rows)
        self._m = total // 2

    @property
    def n(self) -> int:
        return self._n

    @property
    def m(self) -> int:
        return self._m

    @property
    def rows(self) -> tuple[int, ...]:
        return self._rows

    def degree(self, v: int) -> int:
        return self._rows[v].bit_count()

    def degrees(self) -> list[int]:
        return [r.bit_count() for r in self._rows]

    def has_edge(self, u: int, v: int) -> bool:
        return bool((self._rows[u] >> v) & 1)

    def neighbors(self, v: int) -> list[int]:
        return bits_to_list(self._rows[v])

    def edges(self) -> list[tuple[int, int]]:
        """Edges ``(u, v)`` with ``u < v`` in lexicographic order."""
        out = []
        for u, row in enumerate(self._rows):
            for v in bits_to_list(row >> (u + 1)):
                out.append((u, u + 1 + v))
        return out

    def adjacency(self, dtype=np.uint8) -> np.ndarray:
        """Dense ``n x n`` adjacency matrix."""
        n = self._n
        if n == 0:
            return np.zeros((0, 0), dtype=dtype)
        nbytes = (n + 7) // 8
        buf = b"".join(r.to_bytes(nbytes, "little") for r in self._rows)
        bits = np.unpackbits(np.frombuffer(buf, dtype=np.uint8), bitorder="little")
        return bits.reshape(n, nbytes * 8)[:, :n].astype(dtype)

    def subgraph(self, vertices: Sequence[int]) -> "Graph":
        """Induced subgraph, relabelled in the given vertex order."""
        index = {v: i for i, v in enumerate(vertices)}
        rows = []
        for v in vertices:
            row = 0
            for u in bits_to_list(self._rows[v]):
                if u in index:
                    row |= 1 << index[u]
            rows.append(row)
        return Graph(len(vertices), rows, check=False)

    def add_edge(self, u: int, v: int) -> "Graph":
        return self._toggled(u, v, True)

    def remove_edge(self, u: int, v: int) -> "Graph":
        return self._toggled(u, v, False)

    def _toggled(self, u: int, v: int, present: bool) -> "Graph":
        if u == v:
            raise ValueError("self-loop")
        rows = list(self._rows)
        if present:
            rows[u] |= 1 << v
            rows[v] |= 1 << u
        else:
            rows[u] &= ~(1 << v)
            rows[v] &= ~(1 << u)
        return Graph(self._n, rows, check=False)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return self._n == other._n and self._rows == other._rows

    def __hash__(self) -> int:
        return hash((self._n, self._rows))

    def __repr__(self) -> str:
        return f"Graph(n={self._n}, m={self._m}, graph6={write_graph6(self)!r})"


def bits_to_list(x: int) -> list[int]:
    out = []
    while x:
        low = x & -x
        out.append(low.bit_length() - 1)
        x ^= low
    return out


@dataclass(frozen=True)
class BlowupSpec:
    """A base graph together with a positive class size for each base vertex."""

    base: Graph
    weights: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "weights", tuple(int(k) for k in self.weights))
        if len(self.weights) != self.base.n:
            raise ValueError("need one weight per base vertex")
        if any(k < 1 for k in self.weights):
            raise ValueError("blow-up weights must be positive")

    @property
    def n(self) -> int:
        return sum(self.weights)

    @property
    def m(self) -> int:
        k = self.weights
        return sum(k[i] * k[j] for i, j in self.base.edges())


# ---------------------------------------------------------------------------
# constructors


def from_edges(n: int, edges: Iterable[tuple[int, int]]) -> Graph:
    """Graph on ``n`` vertices with the given edges; duplicates collapse."""
    rows = [0] * n
    for u, v in edges:
        if not (0 <= u < n and 0 <= v < n):
            raise ValueError(f"edge ({u}, {v}) out of range for n={n}")
        if u == v:
            raise ValueError(f"self-loop at vertex {u}")
        rows[u] |= 1 << v
        rows[v] |= 1 << u
    return Graph(n, rows)


def complete_graph(n: int) -> Graph:
    full = (1 << n) - 1
    return Graph(n, [full ^ (1 << v) for v in range(n)])


def cycle(n: int) -> Graph:
    if n < 3:
        raise ValueError("a cycle needs at least 3 vertices")
    return from_edges(n, [(i, (i + 1) % n) for i in range(n)])


def path(n: int) -> Graph:
    return from_edges(n, [(i, i + 1) for i in range(n - 1)])


def complete_bipartite(a: int, b: int) -> Graph:
    """K_{a,b}; the a-side is ``0..a-1``."""
    if a < 1 or b < 1:
        raise ValueError("both parts of K_{a,b} need at least one vertex")
    side_a = (1 << a) - 1
    side_b = ((1 << b) - 1) << a
    return Graph(a + b, [side_b] * a + [side_a] * b)


def book(r: int) -> Graph:
    """B_r: spine ``0-1`` plus pages ``2..r+1``."""
    if r < 1:
        raise ValueError("a book needs at least one page")
    edges = [(0, 1)]
    for p in range(2, r + 2):
        edges += [(0, p), (1, p)]
    return from_edges(r + 2, edges)


def s_plus(m: int, s: int) -> Graph:
    """K_{s,t} with one extra edge inside the t-side, t = (m-1)/s.

    The s-side is ``0..s-1``; the extra edge joins vertices ``s`` and ``s+1``.
    """
    if s < 1:
        raise ValueError("s must be positive")
    if (m - 1) % s:
        raise ValueError(f"{s} does not divide m-1={m - 1}")
    t = (m - 1) // s
    if t < 2:
        raise ValueError(f"(m-1)/s = {t} leaves no room for the extra edge")
    g = complete_bipartite(s, t)
    return g.add_edge(s, s + 1)


def blow_up(spec: BlowupSpec) -> Graph:
    """Replace base vertex i by an independent set of size k_i.

    Classes occupy consecutive labels in base-vertex order.
    """
    n = spec.n
    if n > vertex_cap():
        raise ValueError(f"blow-up has {n} vertices, above the vertex cap {vertex_cap()}")
    offsets = np.concatenate([[0], np.cumsum(spec.weights)]).tolist()
    masks = [((1 << k) - 1) << off for k, off in zip(spec.weights, offsets)]
    rows = []
    for i, k in enumerate(spec.weights):
        row = 0
        for j in spec.base.neighbors(i):
            row |= masks[j]
        rows.extend([row] * k)
    return Graph(n, rows)


def triangular_prism() -> Graph:
    """Two triangles ``012`` and ``345`` joined by the matching ``i -- i+3``."""
    return from_edges(6, [(0, 1), (0, 2), (1, 2), (3, 4), (3, 5), (4, 5), (0, 3), (1, 4), (2, 5)])


def prism_blowup(k: int) -> Graph:
    return blow_up(BlowupSpec(triangular_prism(), (k,) * 6))


# ---------------------------------------------------------------------------
# graph6


def edge_order(n: int) -> list[tuple[int, int]]:
    """Upper-triangle pairs in graph6 order: by column j, then row i."""
    return [(i, j) for j in range(1, n) for i in range(j)]


def _encode_n(n: int) -> str:
    if n < 0:
        raise ValueError("negative vertex count")
    if n <= 62:
        return chr(n + 63)
    if n <= 258047:
        return "~" + "".join(chr(((n >> shift) & 63) + 63) for shift in (12, 6, 0))
    raise ValueError(f"n={n} needs the long graph6 header, which is not supported")


def write_graph6(g: Graph) -> str:
    n = g.n
    out = [_encode_n(n)]
    rows = g.rows
    acc = 0
    nbits = 0
    for j in range(1, n):
        col = rows[j]
        for i in range(j):
            acc = (acc << 1) | ((col >> i) & 1)
            nbits += 1
            if nbits == 6:
                out.append(chr(acc + 63))
                acc = 0
                nbits = 0
    if nbits:
        out.append(chr((acc << (6 - nbits)) + 63))
    return "".join(out)


def parse_graph6(text: str) -> Graph:
    """Decode one graph6 string (short or 4-byte medium header)."""
    s = text.strip("\r\n")
    if s.startswith(">>graph6<<"):
        s = s[len(">>graph6<<"):]
    if not s:
        raise ValueError("empty graph6 string")
    for pos, ch in enumerate(s):
        if not 63 <= ord(ch) <= 126:
            raise ValueError(f"character {ch!r} at position {pos} outside the graph6 range")
    if s[0] != "~":
        n = ord(s[0]) - 63
        body = s[1:]
    else:
        if len(s) > 1 and s[1] == "~":
            raise ValueError("long-form graph6 header (n > 258047) is not supported")
        if len(s) < 4:
            raise ValueError("truncated graph6 size header")
        n = 0
        for ch in s[1:4]:
            n = (n << 6) | (ord(ch) - 63)
        if n <= 62:
            raise ValueError("non-canonical medium header for n <= 62")
        body = s[4:]
    nbits = n * (n - 1) // 2
    need = (nbits + 5) // 6
    if len(body) < need:
        raise ValueError(f"graph6 body too short: need {need} characters, got {len(body)}")
    if len(body) > need:
        raise ValueError(f"trailing garbage after graph6 body ({len(body) - need} extra characters)")
    rows = [0] * n
    k = 0
    for j in range(1, n):
        for i in range(j):
            ch = ord(body[k // 6]) - 63
            if (ch >> (5 - k % 6)) & 1:
                rows[i] |= 1 << j
                rows[j] |= 1 << i
            k += 1
    if nbits % 6 and (ord(body[-1]) - 63) & ((1 << (6 - nbits % 6)) - 1):
        raise ValueError("non-zero padding bits in graph6 body")
    return Graph(n, rows, check=False)


def read_graph6_lines(lines: Iterable[str]) -> Iterator[tuple[int, Graph | None, str | None]]:
    """Yield ``(line_number, graph, error)`` for each non-blank line."""
    for lineno, line in enumerate(lines, start=1):
        text = line.strip()
        if not text:
            continue
        try:
            yield lineno, parse_graph6(text), None
        except ValueError as exc:
            yield lineno, None, str(exc)


# ---------------------------------------------------------------------------
# structural recognizers


@dataclass(frozen=True)
class Bipartition:
    """Outcome of a 2-colouring attempt.

    ``coloring`` is set when the graph is bipartite; otherwise
    ``odd_walk`` is a closed walk of odd length, listed as a vertex sequence
    whose last vertex is adjacent to the first.
    """

    bipartite: bool
    coloring: tuple[int, ...] | None
    odd_walk: tuple[int, ...] | None


def bipartition(g: Graph) -> Bipartition:
    n = g.n
    color = [-1] * n
    parent = [-1] * n
    depth = [0] * n
    rows = g.rows
    for root in range(n):
        if color[root] >= 0:
            continue
        color[root] = 0
        queue = deque([root])
        while queue:
            u = queue.popleft()
            for v in bits_to_list(rows[u]):
                if color[v] < 0:
                    color[v] = 1 - color[u]
                    parent[v] = u
                    depth[v] = depth[u] + 1
                    queue.append(v)
                elif color[v] == color[u]:
                    return Bipartition(False, None, _odd_walk(u, v, parent, depth))
    return Bipartition(True, tuple(color), None)


def _odd_walk(u: int, v: int, parent: list[int], depth: list[int]) -> tuple[int, ...]:
    # u and v share a colour, so depth[u] + depth[v] + 1 is odd
    up = [u]
    while parent[up[-1]] >= 0:
        up.append(parent[up[-1]])
    down = [v]
    while parent[down[-1]] >= 0:
        down.append(parent[down[-1]])
    # walk u -> root -> v, closed by the edge v-u
    return tuple(up + down[::-1][1:])


def is_bipartite(g: Graph) -> bool:
    return bipartition(g).bipartite


def is_connected(g: Graph) -> bool:
    if g.n == 0:
        raise ValueError("connectivity of the empty graph is undefined")
    return component_mask(g, 0) == (1 << g.n) - 1


def component_mask(g: Graph, start: int) -> int:
    rows = g.rows
    seen = 1 << start
    frontier = seen
    while frontier:
        nxt = 0
        for v in bits_to_list(frontier):
            nxt |= rows[v]
        frontier = nxt & ~seen
        seen |= frontier
    return seen


def components(g: Graph) -> list[list[int]]:
    left = (1 << g.n) - 1
    out = []
    while left:
        start = (left & -left).bit_length() - 1
        comp = component_mask(g, start)
        out.append(bits_to_list(comp))
        left &= ~comp
    return out


def is_complete_bipartite(g: Graph) -> bool:
    """True iff ``g`` is K_{a,b} for some a, b >= 1."""
    if g.n < 2 or not is_connected(g):
        return False
    part = bipartition(g)
    if not part.bipartite:
        return False
    a = sum(1 for c in part.coloring if c == 0)
    return g.m == a * (g.n - a)


def is_star(g: Graph) -> bool:
    """True iff ``g`` is K_{1,n-1} on all of its vertices (K_2 included)."""
    n = g.n
    return n >= 2 and g.m == n - 1 and max(g.degrees()) == n - 1


def has_c4(g: Graph) -> bool:
    rows = g.rows
    for u, v in combinations(range(g.n), 2):
        if (rows[u] & rows[v]).bit_count() >= 2:
            return True
    return False


def s_plus_witness(g: Graph) -> tuple[int, tuple[int, int]] | None:
    """``(s, edge)`` for the first edge whose removal leaves K_{s,t}, t >= 2,
    with both endpoints in the t-side; ``None`` otherwise."""
    n, m = g.n, g.m
    if n < 3 or m < 3:
        return None
    rows = g.rows
    full = (1 << n) - 1
    for u, v in g.edges():
        # in S+ both ends see the whole s-side and each other
        if rows[u] != (rows[v] ^ (1 << v) ^ (1 << u)):
            continue
        s = rows[u].bit_count() - 1
        t = n - s
        if s < 1 or t < 2 or s * t != m - 1:
            continue
        s_side = rows[u] & ~(1 << v)
        t_side = full & ~s_side
        ok = all(rows[x] == t_side for x in bits_to_list(s_side))
        if ok:
            for x in bits_to_list(t_side):
                expect = s_side
                if x == u:
                    expect |= 1 << v
                elif x == v:
                    expect |= 1 << u
                if rows[x] != expect:
                    ok = False
                    break
        if ok:
            return s, (u, v)
    return None


def is_s_plus(g: Graph) -> int | None:
    hit = s_plus_witness(g)
    return None if hit is None else hit[0]
