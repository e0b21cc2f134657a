"""Booksize and common-neighbourhood statistics."""

from __future__ import annotations

from dataclasses import dataclass

from .graph import BlowupSpec, Graph, bits_to_list


@dataclass(frozen=True)
class BookStats:
    """``bk`` is the largest number of common neighbours over edges;
    ``k2t`` the largest over all vertex pairs."""

    bk: int
    witness_edge: tuple[int, int] | None
    witness_pages: tuple[int, ...]
    k2t: int


def booksize(g: Graph) -> BookStats:
    rows = g.rows
    n = g.n
    bk = 0
    k2t = 0
    witness = None
    for u in range(n):
        ru = rows[u]
        for v in range(u + 1, n):
            common = (ru & rows[v]).bit_count()
            if common > k2t:
                k2t = common
            if common > bk and (ru >> v) & 1:
                bk = common
                witness = (u, v)
    pages = () if witness is None else tuple(bits_to_list(rows[witness[0]] & rows[witness[1]]))
    return BookStats(bk, witness, pages, k2t)


def is_book_free(g: Graph, r: int) -> bool:
    """True iff ``g`` contains no B_{r+1}."""
    if r < 0:
        raise ValueError("page bound must be non-negative")
    return booksize(g).bk <= r


def blowup_booksize(spec: BlowupSpec) -> int:
    """Booksize of ``blow_up(spec)`` without building it.

    Two vertices from adjacent classes i, j share exactly the classes of the
    common base neighbours of i and j.
    """
    rows = spec.base.rows
    k = spec.weights
    best = 0
    for i, j in spec.base.edges():
        total = sum(k[l] for l in bits_to_list(rows[i] & rows[j]))
        if total > best:
            best = total
    return best
