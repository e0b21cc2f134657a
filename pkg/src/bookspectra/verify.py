"""Exhaustive census of small graphs and checks on the extremal families.

The census evaluates every predicate on each graph of a stream. Graphs are
processed in batches: dense adjacency stacks give common-neighbour counts,
closed-walk traces and power-iteration enclosures for a whole batch at once,
so the ~1.9M connected labelled graphs on at most 7 vertices fit in minutes
on one core.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator, Sequence

import numpy as np

from . import graph as gc
from .booksize import booksize
from .graph import Graph, edge_order
from .spectral import (
    DEFAULT_TOL,
    ThreeValued,
    power_iterate,
    solve_splus_rho,
    spectral_radius,
    splus_residual,
)
from .trace import build_trace

CHUNK = 1 << 15
MAX_ENUM_N = 8

# nosal-implies-triangle   rho > sqrt(m) forces a triangle
# nikiforov-equality       triangle-free with rho >= sqrt(m) only for complete bipartite
# c4-or-star               rho > sqrt(m), m >= 10 gives a C4 or the graph is a star
# nosal-book-bound         rho > sqrt(m) gives bk > sqrt(m)/9
# erdos-edwards            m > n^2/4 gives bk >= n/6
# book-free-nosal          bk <= r and m >= (9r)^2 rule out rho > sqrt(m)
# weak-census              non-bipartite, bk <= r, weak condition: recorded only
PREDICATES = (
    "nosal-implies-triangle",
    "nikiforov-equality",
    "c4-or-star",
    "nosal-book-bound",
    "erdos-edwards",
    "book-free-nosal",
    "weak-census",
)
OUTCOMES = ("na", "ok", "violation", "unresolved", "recorded")
CSV_COLUMNS = (
    "graph6", "n", "m", "connected", "bipartite", "complete_bipartite", "star", "has_c4",
    "bk", "k2t", "rho_lower", "rho_upper", "nosal", "weak_condition", "s_plus", "flags",
)


# ---------------------------------------------------------------------------
# enumeration


def _adjacency_from_masks(n: int, masks: np.ndarray) -> np.ndarray:
    pairs = edge_order(n)
    adj = np.zeros((masks.size, n, n), dtype=np.uint8)
    if pairs:
        shifts = np.arange(len(pairs), dtype=np.int64)
        bits = ((masks[:, None] >> shifts) & 1).astype(np.uint8)
        ii = np.array([p[0] for p in pairs])
        jj = np.array([p[1] for p in pairs])
        adj[:, ii, jj] = bits
        adj[:, jj, ii] = bits
    return adj


def _connected_batch(adj: np.ndarray) -> np.ndarray:
    b, n, _ = adj.shape
    if n <= 1:
        return np.ones(b, dtype=bool)
    reach = adj.astype(np.int32) + np.eye(n, dtype=np.int32)[None]
    steps = 1
    while steps < n - 1:
        reach = (reach @ reach > 0).astype(np.int32)
        steps *= 2
    return (reach[:, 0, :] > 0).all(axis=-1)


def enumerate_masks(n: int, connected_only: bool = False, allow_large: bool = False,
                    chunk: int = CHUNK) -> Iterator[np.ndarray]:
    """Edge masks of labelled graphs on ``n`` vertices in increasing order.

    Bit k of a mask is the k-th pair of :func:`edge_order`.
    """
    if not 1 <= n <= MAX_ENUM_N:
        raise ValueError(f"enumeration supports 1 <= n <= {MAX_ENUM_N}, got {n}")
    if n == MAX_ENUM_N and not allow_large:
        raise ValueError("n=8 means 2^28 graphs; pass allow_large=True to acknowledge")
    total = 1 << (n * (n - 1) // 2)
    for start in range(0, total, chunk):
        masks = np.arange(start, min(start + chunk, total), dtype=np.int64)
        if connected_only:
            masks = masks[_connected_batch(_adjacency_from_masks(n, masks))]
        yield masks


def graph_from_mask(n: int, mask: int) -> Graph:
    rows = [0] * n
    for k, (i, j) in enumerate(edge_order(n)):
        if (mask >> k) & 1:
            rows[i] |= 1 << j
            rows[j] |= 1 << i
    return Graph(n, rows, check=False)


def enumerate_labeled(n: int, connected_only: bool = False, allow_large: bool = False) -> Iterator[Graph]:
    """Every labelled simple graph on ``n`` vertices exactly once, by edge mask."""
    for masks in enumerate_masks(n, connected_only, allow_large):
        for mask in masks.tolist():
            yield graph_from_mask(n, mask)


def _graph6_from_masks(n: int, masks: np.ndarray) -> list[str]:
    nbits = n * (n - 1) // 2
    nchars = (nbits + 5) // 6
    header = gc._encode_n(n)
    if nchars == 0:
        return [header] * masks.size
    shifts = np.arange(nbits, dtype=np.int64)
    bits = ((masks[:, None] >> shifts) & 1).astype(np.uint8)
    padded = np.zeros((masks.size, nchars * 6), dtype=np.uint8)
    padded[:, :nbits] = bits
    weights = np.array([32, 16, 8, 4, 2, 1], dtype=np.uint8)
    chars = (padded.reshape(-1, nchars, 6) * weights).sum(axis=-1).astype(np.uint8) + 63
    body = chars.tobytes()
    return [header + body[i * nchars:(i + 1) * nchars].decode("ascii") for i in range(masks.size)]


# ---------------------------------------------------------------------------
# records


@dataclass(frozen=True)
class CensusRecord:
    graph6: str
    n: int
    m: int
    connected: bool
    bipartite: bool
    complete_bipartite: bool
    star: bool
    has_c4: bool
    bk: int
    k2t: int
    rho_lower: float
    rho_upper: float
    nosal: ThreeValued
    weak_condition: ThreeValued
    s_plus: int | None
    flags: tuple[str, ...]

    def outcome(self, predicate: str) -> str:
        for item in self.flags:
            name, _, value = item.partition("=")
            if name == predicate:
                return value
        raise KeyError(predicate)

    def csv_row(self) -> str:
        b = _csv_bool
        return (
            f"{self.graph6},{self.n},{self.m},{b(self.connected)},{b(self.bipartite)},"
            f"{b(self.complete_bipartite)},{b(self.star)},{b(self.has_c4)},{self.bk},{self.k2t},"
            f"{self.rho_lower!r},{self.rho_upper!r},{self.nosal.value},{self.weak_condition.value},"
            f"{'' if self.s_plus is None else self.s_plus},{';'.join(self.flags)}"
        )

    def to_json(self) -> dict:
        d = asdict(self)
        d["nosal"] = self.nosal.value
        d["weak_condition"] = self.weak_condition.value
        d["flags"] = list(self.flags)
        return d


def _csv_bool(v: bool) -> str:
    return "1" if v else "0"


@dataclass
class CensusSummary:
    r: int
    tol: float
    records: int = 0
    counts: dict = field(default_factory=dict)
    nosal: dict = field(default_factory=dict)
    weak: dict = field(default_factory=dict)
    weak_rows: int = 0
    weak_s_plus: int = 0
    weak_threshold_met: int = 0
    borderline_nosal_unexplained: int = 0
    empirical_c: float | None = None
    empirical_c_graph6: str | None = None
    malformed: list = field(default_factory=list)

    def add(self, rec: CensusRecord) -> None:
        self.records += 1
        for item in rec.flags:
            name, _, value = item.partition("=")
            if name in PREDICATES:
                key = f"{name}:{value}"
                self.counts[key] = self.counts.get(key, 0) + 1
        self.nosal[rec.nosal.value] = self.nosal.get(rec.nosal.value, 0) + 1
        self.weak[rec.weak_condition.value] = self.weak.get(rec.weak_condition.value, 0) + 1
        if rec.outcome("weak-census") == "recorded":
            self.weak_rows += 1
            self.weak_s_plus += rec.s_plus is not None
            self.weak_threshold_met += "threshold-240r=met" in rec.flags
        if rec.nosal is ThreeValued.BORDERLINE and not rec.complete_bipartite:
            if rec.rho_upper - rec.rho_lower > self.tol * rec.rho_upper:
                self.borderline_nosal_unexplained += 1
        if rec.nosal is ThreeValued.YES:
            ratio = rec.bk / math.sqrt(rec.m)
            if self.empirical_c is None or ratio < self.empirical_c:
                self.empirical_c = ratio
                self.empirical_c_graph6 = rec.graph6

    def merge(self, other: "CensusSummary") -> None:
        """Fold a later chunk's summary into this one."""
        self.records += other.records
        for src, dst in ((other.counts, self.counts), (other.nosal, self.nosal), (other.weak, self.weak)):
            for k, v in src.items():
                dst[k] = dst.get(k, 0) + v
        self.weak_rows += other.weak_rows
        self.weak_s_plus += other.weak_s_plus
        self.weak_threshold_met += other.weak_threshold_met
        self.borderline_nosal_unexplained += other.borderline_nosal_unexplained
        if other.empirical_c is not None and (self.empirical_c is None or other.empirical_c < self.empirical_c):
            self.empirical_c = other.empirical_c
            self.empirical_c_graph6 = other.empirical_c_graph6
        self.malformed.extend(other.malformed)

    def violations(self, predicate: str) -> int:
        return self.counts.get(f"{predicate}:violation", 0)

    def total_violations(self, predicates: Sequence[str] = PREDICATES[:6]) -> int:
        return sum(self.violations(p) for p in predicates)

    def to_json(self) -> dict:
        return {
            "records": self.records,
            "r": self.r,
            "tol": self.tol,
            "violations": {p: self.violations(p) for p in PREDICATES[:6]},
            "unresolved": {p: self.counts.get(f"{p}:unresolved", 0) for p in PREDICATES[:6]},
            "applicable": {
                p: sum(self.counts.get(f"{p}:{o}", 0) for o in ("ok", "violation", "unresolved"))
                for p in PREDICATES[:6]
            },
            "nosal": dict(sorted(self.nosal.items())),
            "weak_condition": dict(sorted(self.weak.items())),
            "weak_census": {
                "rows": self.weak_rows,
                "s_plus": self.weak_s_plus,
                "threshold_240r_met": self.weak_threshold_met,
            },
            "borderline_nosal_unexplained": self.borderline_nosal_unexplained,
            "empirical_c": self.empirical_c,
            "empirical_c_graph6": self.empirical_c_graph6,
            "malformed": list(self.malformed),
        }


# ---------------------------------------------------------------------------
# batch evaluation


def _odd_trace_bipartite(adj: np.ndarray) -> np.ndarray:
    # an odd cycle of length l <= n shows up in trace(A^l)
    b, n, _ = adj.shape
    a = adj.astype(np.int64)
    power = a
    square = a @ a
    odd = np.zeros(b, dtype=bool)
    for length in range(3, n + 1, 2):
        power = power @ square
        odd |= np.einsum("bii->b", power) > 0
    return ~odd


def _weak_batch(lower: np.ndarray, m: np.ndarray) -> np.ndarray:
    """Boolean array: the weak condition holds at rho = lower (lower > 1)."""
    with np.errstate(divide="ignore", invalid="ignore"):
        val = lower * lower - 2.0 / (lower - 1.0) - (m - 1)
    out = val >= 0
    near = np.abs(val) <= 1e-9 * np.maximum(1.0, m)
    for i in np.flatnonzero(near):
        r = Fraction(float(lower[i]))
        out[i] = r * r - Fraction(2) / (r - 1) >= int(m[i]) - 1
    return out


_FLAG_CACHE: dict = {}


def _flags_for(codes: tuple[int, ...], t9: bool, t240: bool) -> tuple[str, ...]:
    key = (codes, t9, t240)
    hit = _FLAG_CACHE.get(key)
    if hit is None:
        hit = tuple(f"{p}={OUTCOMES[c]}" for p, c in zip(PREDICATES, codes)) + (
            f"threshold-9r={'met' if t9 else 'unmet'}",
            f"threshold-240r={'met' if t240 else 'unmet'}",
        )
        _FLAG_CACHE[key] = hit
    return hit


_NOSAL = (ThreeValued.NO, ThreeValued.BORDERLINE, ThreeValued.YES)


def evaluate_batch(n: int, adj: np.ndarray, graph6: Sequence[str], r: int = 1,
                   tol: float = DEFAULT_TOL, graphs: Sequence[Graph] | None = None) -> list[CensusRecord]:
    """Census records for a stack of adjacency matrices on ``n`` vertices."""
    b = adj.shape[0]
    if b == 0:
        return []
    a = adj.astype(np.int64)
    deg = a.sum(axis=-1)
    m = deg.sum(axis=-1) // 2
    connected = _connected_batch(adj)

    def graph_at(i: int) -> Graph:
        if graphs is not None:
            return graphs[i]
        rows = [sum(1 << int(j) for j in np.flatnonzero(adj[i, v])) for v in range(n)]
        return Graph(n, rows, check=False)

    if n >= 2:
        iu, ju = np.triu_indices(n, 1)
        sq = a @ a
        common = sq[:, iu, ju]
        adjacent = a[:, iu, ju]
        k2t = common.max(axis=-1)
        bk = (common * adjacent).max(axis=-1)
        tri6 = np.einsum("bij,bji->b", sq, a)
        if n <= 8:
            bipartite = _odd_trace_bipartite(adj)
        else:
            bipartite = np.array([gc.is_bipartite(graph_at(i)) for i in range(b)])
        di = deg[:, iu]
        dj = deg[:, ju]
        twin = (adjacent == 1) | ((common == di) & (di == dj))
        complete_bip = connected & bipartite & twin.all(axis=-1)
        star = (m == n - 1) & (deg.max(axis=-1) == n - 1)
    else:
        k2t = bk = tri6 = np.zeros(b, dtype=np.int64)
        bipartite = np.ones(b, dtype=bool)
        complete_bip = star = np.zeros(b, dtype=bool)
    has_c4 = k2t >= 2

    lower = np.zeros(b)
    upper = np.zeros(b)
    dense = np.flatnonzero(connected & (m > 0))
    if dense.size:
        res = power_iterate(adj[dense].astype(np.float64), tol)
        lower[dense] = res["lower"]
        upper[dense] = res["upper"]
    for i in np.flatnonzero(~connected & (m > 0)):
        cert = spectral_radius(graph_at(i), tol)
        lower[i], upper[i] = cert.rho_lower, cert.rho_upper

    root = np.sqrt(m.astype(np.float64))
    nosal_code = np.where(lower > root, 2, np.where(upper < root, 0, 1))
    # the 2/(rho-1) term is meaningless at rho <= 1; only K1, K2 and edgeless graphs land there
    above_one = lower > 1.0
    weak_code = np.zeros(b, dtype=np.int64)
    if above_one.any():
        idx = np.flatnonzero(above_one)
        yes = _weak_batch(lower[idx], m[idx])
        hold_upper = _weak_batch(upper[idx], m[idx])
        weak_code[idx] = np.where(yes, 2, np.where(hold_upper, 1, 0))
    straddle = (~above_one) & (upper > 1.0)
    weak_code[straddle] = 1

    s_plus = [None] * b
    cand = (~bipartite) & (bk >= 1) & (tri6 // 6 == bk) & (m - 1 == bk * (n - bk)) & (n - bk >= 2)
    for i in np.flatnonzero(cand):
        s_plus[i] = gc.is_s_plus(graph_at(i))

    # edgeless graphs sit outside every statement (rho = sqrt(m) = 0 trivially)
    has_edges = m > 0
    yes = (nosal_code == 2) & has_edges
    border = (nosal_code == 1) & has_edges
    tri_free = bk == 0
    # codes index OUTCOMES: 0 na, 1 ok, 2 violation, 3 unresolved, 4 recorded
    fa = np.where(yes, np.where(tri_free, 2, 1), 0)
    fb_app = yes | border
    fb = np.where(~fb_app, 0, np.where(~tri_free | complete_bip, 1, np.where(yes, 2, 3)))
    fc_app = yes & (m >= 10)
    fc = np.where(fc_app, np.where(~star & ~has_c4, 2, 1), 0)
    fd = np.where(yes, np.where(81 * bk * bk <= m, 2, 1), 0)
    fe_app = has_edges & (m >= (n * n) // 4 + 1)
    fe = np.where(fe_app, np.where(6 * bk < n, 2, 1), 0)
    t9 = m >= (9 * r) ** 2
    t240 = m >= (240 * r) ** 2
    ff_app = has_edges & (bk <= r) & t9
    ff = np.where(ff_app, np.where(yes, 2, np.where(border & ~complete_bip, 3, 1)), 0)
    fg = np.where(connected & ~bipartite & (bk <= r) & (weak_code >= 1), 4, 0)

    codes = np.stack([fa, fb, fc, fd, fe, ff, fg], axis=1).tolist()
    out = []
    m_l = m.tolist()
    lo_l = lower.tolist()
    hi_l = upper.tolist()
    conn_l = connected.tolist()
    bip_l = bipartite.tolist()
    cb_l = complete_bip.tolist()
    star_l = star.tolist()
    c4_l = has_c4.tolist()
    bk_l = bk.tolist()
    k2t_l = k2t.tolist()
    nos_l = nosal_code.tolist()
    weak_l = weak_code.tolist()
    t9_l = t9.tolist()
    t240_l = t240.tolist()
    for i in range(b):
        out.append(CensusRecord(
            graph6[i], n, m_l[i], conn_l[i], bip_l[i], cb_l[i], star_l[i], c4_l[i],
            bk_l[i], k2t_l[i], lo_l[i], hi_l[i], _NOSAL[nos_l[i]], _NOSAL[weak_l[i]],
            s_plus[i], _flags_for(tuple(codes[i]), t9_l[i], t240_l[i]),
        ))
    return out


def census_record(g: Graph, r: int = 1, tol: float = DEFAULT_TOL) -> CensusRecord:
    """Census record of a single graph (same arithmetic as the batch path)."""
    return evaluate_batch(g.n, g.adjacency()[None], [gc.write_graph6(g)], r, tol, graphs=[g])[0]


# ---------------------------------------------------------------------------
# drivers


def _mask_chunk(args) -> tuple[list[CensusRecord], CensusSummary]:
    n, masks, r, tol = args
    recs = evaluate_batch(n, _adjacency_from_masks(n, masks), _graph6_from_masks(n, masks), r, tol)
    summ = CensusSummary(r, tol)
    for rec in recs:
        summ.add(rec)
    return recs, summ


class Census:
    """Streaming census; ``summary`` is complete once a run is exhausted."""

    def __init__(self, r: int = 1, tol: float = DEFAULT_TOL, threads: int = 1):
        if r < 0:
            raise ValueError("page bound must be non-negative")
        self.r = r
        self.tol = tol
        self.threads = max(1, int(threads))
        self.summary = CensusSummary(r, tol)

    def run(self, graphs: Iterable[Graph]) -> Iterator[CensusRecord]:
        batch: list[Graph] = []
        for g in graphs:
            if batch and (g.n != batch[0].n or len(batch) >= self._batch_size(g.n)):
                yield from self._flush(batch)
                batch = []
            batch.append(g)
        if batch:
            yield from self._flush(batch)

    def run_graph6(self, lines: Iterable[str]) -> Iterator[CensusRecord]:
        def good():
            for lineno, g, err in gc.read_graph6_lines(lines):
                if err is not None:
                    self.summary.malformed.append({"line": lineno, "error": err})
                    continue
                yield g
        yield from self.run(good())

    def run_labeled(self, n_max: int, n_min: int = 1, allow_large: bool = False) -> Iterator[CensusRecord]:
        """All connected labelled graphs with ``n_min <= n <= n_max`` vertices."""
        jobs = ((n, masks, self.r, self.tol)
                for n in range(n_min, n_max + 1)
                for masks in enumerate_masks(n, True, allow_large))
        if self.threads == 1:
            results = map(_mask_chunk, jobs)
            for recs, summ in results:
                self.summary.merge(summ)
                yield from recs
        else:
            with ProcessPoolExecutor(self.threads) as pool:
                for recs, summ in pool.map(_mask_chunk, jobs):
                    self.summary.merge(summ)
                    yield from recs

    @staticmethod
    def _batch_size(n: int) -> int:
        return max(1, min(CHUNK, (1 << 22) // max(1, n * n)))

    def _flush(self, batch: list[Graph]) -> list[CensusRecord]:
        n = batch[0].n
        adj = np.stack([g.adjacency() for g in batch]) if n else np.zeros((len(batch), 0, 0), np.uint8)
        recs = evaluate_batch(n, adj, [gc.write_graph6(g) for g in batch], self.r, self.tol, graphs=batch)
        for rec in recs:
            self.summary.add(rec)
        return recs


def census(stream: Iterable[Graph], r: int = 1, tol: float = DEFAULT_TOL) -> tuple[list[CensusRecord], CensusSummary]:
    run = Census(r, tol)
    records = list(run.run(stream))
    return records, run.summary


def csv_header() -> str:
    return ",".join(CSV_COLUMNS)


def write_records(records: Iterable[CensusRecord], out, fmt: str = "csv") -> int:
    count = 0
    if fmt == "csv":
        out.write(csv_header() + "\n")
        for rec in records:
            out.write(rec.csv_row())
            out.write("\n")
            count += 1
    elif fmt == "jsonl":
        for rec in records:
            out.write(json.dumps(rec.to_json()))
            out.write("\n")
            count += 1
    else:
        raise ValueError(f"unknown record format {fmt!r}")
    return count


# ---------------------------------------------------------------------------
# extremal families


@dataclass
class ExtremalReport:
    rows: list = field(default_factory=list)
    failures: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures


def verify_extremal_families(k_max: int = 10, m_list: Sequence[tuple[int, int]] = (),
                             tol: float = DEFAULT_TOL) -> ExtremalReport:
    """Check the prism blow-ups for k = 1..k_max and S+ for each (m, s)."""
    report = ExtremalReport()
    for k in range(1, k_max + 1):
        try:
            g = gc.prism_blowup(k)
        except ValueError as exc:
            report.failures.append({"family": "prism", "k": k, "error": str(exc)})
            continue
        cert = spectral_radius(g, tol)
        bk = booksize(g).bk
        row = {"family": "prism", "k": k, "n": g.n, "m": g.m, "bk": bk,
               "rho": cert.estimate, "rho_lower": cert.rho_lower, "rho_upper": cert.rho_upper}
        ok = g.m == 9 * k * k and bk == k and abs(cert.estimate - 3 * k) <= tol * 3 * k
        row["passed"] = ok
        report.rows.append(row)
        if not ok:
            report.failures.append(row)
    for m, s in m_list:
        row = {"family": "splus", "m": m, "s": s}
        try:
            g = gc.s_plus(m, s)
        except ValueError as exc:
            row.update(passed=False, error=str(exc))
            report.rows.append(row)
            report.failures.append(row)
            continue
        cert = spectral_radius(g, tol)
        rho0 = solve_splus_rho(m, s)
        trace = build_trace(g, cert, max(1, s), 2)
        u1, v1 = gc.s_plus_witness(g)[1]
        extra_edge = float(trace.x[u1] + trace.x[v1] - 2.0 * s / (cert.estimate - 1.0))
        row.update(n=g.n, rho=cert.estimate, rho_solver=rho0, gap=cert.estimate - rho0,
                   residual=splus_residual(cert.estimate, m, s), extra_edge_residual=extra_edge)
        ok = abs(row["gap"]) <= 1e-8 and abs(row["residual"]) <= 1e-8
        row["passed"] = ok
        report.rows.append(row)
        if not ok:
            report.failures.append(row)
    return report
