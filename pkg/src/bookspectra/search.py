"""Search for graphs with extreme booksize ratio bk/sqrt(m) under a spectral condition.

Two strategies: simulated annealing over single-edge moves on a fixed vertex
set, and coordinate ascent over the class sizes of blow-ups of small base
graphs. Both only report graphs whose condition is certified from a lower
bound on rho, and re-certify the winner from scratch before returning it.
"""

from __future__ import annotations

import json
import math
import platform
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import permutations, product

import numpy as np

from . import __version__
from .booksize import blowup_booksize, booksize
from .graph import (
    BlowupSpec,
    Graph,
    blow_up,
    bits_to_list,
    book,
    complete_graph,
    component_mask,
    is_bipartite,
    is_connected,
    is_s_plus,
    s_plus,
    triangular_prism,
    write_graph6,
)
from .spectral import (
    DEFAULT_TOL,
    ThreeValued,
    classify_nosal,
    classify_weak,
    rapid_certificate,
    spectral_radius,
    weak_margin,
)

CONDITIONS = ("weak", "strict-nosal")
DIRECTIONS = ("max", "min")
PENALTY = 10.0


# ---------------------------------------------------------------------------
# spectral condition


def condition_status(condition: str, lower: float, upper: float, m: int) -> ThreeValued:
    if condition == "strict-nosal":
        return classify_nosal(lower, upper, m)
    if condition == "weak":
        if lower <= 1.0:
            return ThreeValued.NO if upper <= 1.0 else ThreeValued.BORDERLINE
        return classify_weak(lower, upper, m)
    raise ValueError(f"unknown condition {condition!r}")


def condition_margin(condition: str, lower: float, m: int) -> float:
    """Signed slack of the condition evaluated at the certified lower bound."""
    if condition == "strict-nosal":
        return lower - math.sqrt(m)
    if lower <= 1.0:
        return -float(m)
    return weak_margin(lower, m)


def _admissible(g: Graph, direction: str) -> bool:
    # minimising is only meaningful off the S+ family and off bipartite graphs
    if direction == "min":
        return not is_bipartite(g) and is_s_plus(g) is None
    return True


# ---------------------------------------------------------------------------
# result type


@dataclass
class Schedule:
    t0: float = 0.2
    factor: float = 0.999
    steps: int | None = None
    restarts: int = 8

    def steps_for(self, n: int) -> int:
        return 200 * n * n if self.steps is None else self.steps


@dataclass
class SearchResult:
    best_graph6: str | None
    ratio: float | None
    condition: str
    condition_margin: float | None
    seed: int | None
    moves_evaluated: int
    feasible: bool = True
    direction: str = "max"
    trajectory: list | None = None
    details: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return asdict(self)


def _better(direction: str, key_new, key_old) -> bool:
    """Compare ``(ratio_fraction, tie_breaker)`` keys; smaller tie-breaker wins ties."""
    if key_old is None:
        return True
    if key_new[0] != key_old[0]:
        return key_new[0] > key_old[0] if direction == "max" else key_new[0] < key_old[0]
    return key_new[1] < key_old[1]


def _ratio_key(bk: int, m: int) -> Fraction:
    # bk/sqrt(m) orders like bk^2/m
    return Fraction(bk * bk, m)


def _recertify(g: Graph, condition: str, direction: str, tol: float) -> tuple[bool, float]:
    cert = spectral_radius(g, tol)
    status = condition_status(condition, cert.rho_lower, cert.rho_upper, g.m)
    ok = status is ThreeValued.YES and is_connected(g) and _admissible(g, direction)
    return ok, condition_margin(condition, cert.rho_lower, g.m)


# ---------------------------------------------------------------------------
# simulated annealing


def _evaluate(g: Graph, condition: str, direction: str, tol: float):
    """``(score, ratio, feasible, margin)`` for a connected graph."""
    m = g.m
    bk = booksize(g).bk
    ratio = bk / math.sqrt(m) if m else 0.0
    cert = rapid_certificate(g.adjacency(np.float64), tol=tol)
    status = condition_status(condition, cert.rho_lower, cert.rho_upper, m)
    margin = condition_margin(condition, cert.rho_lower, m)
    feasible = status is ThreeValued.YES and _admissible(g, direction)
    deficit = max(0.0, -margin)
    if status is not ThreeValued.YES and deficit == 0.0:
        deficit = tol
    signed = ratio if direction == "max" else -ratio
    score = signed - PENALTY * deficit
    if not _admissible(g, direction):
        score -= PENALTY
    return score, ratio, feasible, margin, bk


def seed_structures(n: int) -> list[Graph]:
    """Known structures on exactly ``n`` vertices used to prime the restarts."""
    out = []
    if n >= 6:
        k = [n // 6 + (1 if i < n % 6 else 0) for i in range(6)]
        out.append(blow_up(BlowupSpec(triangular_prism(), tuple(k))))
    if n >= 3:
        out.append(book(n - 2))
        for s in range(1, n - 1):
            t = n - s
            if t >= 2:
                g = s_plus(s * t + 1, s)
                if g not in out:
                    out.append(g)
    if n >= 4:
        out.append(complete_graph(n))
        # K4 joined to an independent set
        rows = []
        full = (1 << n) - 1
        k4 = 0b1111
        for v in range(n):
            rows.append((full ^ (1 << v)) if v < 4 else k4)
        out.append(Graph(n, rows))
    return out


def _random_connected(n: int, rng: np.random.Generator, density: float = 0.5) -> Graph:
    rows = [0] * n
    order = rng.permutation(n).tolist()
    for idx in range(1, n):
        v = order[idx]
        u = order[int(rng.integers(idx))]
        rows[u] |= 1 << v
        rows[v] |= 1 << u
    for u in range(n):
        for v in range(u + 1, n):
            if rng.random() < density:
                rows[u] |= 1 << v
                rows[v] |= 1 << u
    return Graph(n, rows, check=False)


def _propose(g: Graph, rng: np.random.Generator) -> Graph | None:
    n = g.n
    rows = g.rows
    if rng.random() < 0.8:
        u, v = (int(a) for a in rng.choice(n, size=2, replace=False))
        new = g.remove_edge(u, v) if (rows[u] >> v) & 1 else g.add_edge(u, v)
    else:
        edges = g.edges()
        full = n * (n - 1) // 2
        if not edges or len(edges) == full:
            return None
        a, b = edges[int(rng.integers(len(edges)))]
        while True:
            u, v = (int(x) for x in rng.choice(n, size=2, replace=False))
            if not (rows[u] >> v) & 1:
                break
        new = g.remove_edge(a, b).add_edge(u, v)
    if new.m == 0 or component_mask(new, 0) != (1 << n) - 1:
        return None
    return new


def _anneal_restart(args):
    n, condition, seed, restart, schedule, start6, direction, tol = args
    from .graph import parse_graph6

    rng = np.random.default_rng(seed + restart)
    g = parse_graph6(start6) if start6 is not None else _random_connected(n, rng)
    score, ratio, feasible, margin, bk = _evaluate(g, condition, direction, tol)
    best = None

    def consider(graph, ratio, feasible, bk):
        nonlocal best
        if not feasible:
            return
        frac = _ratio_key(bk, graph.m)
        # graph6 only matters for ties
        if best is not None and frac != best[0][0] and not _better(direction, (frac, ""), best[0]):
            return
        key = (frac, write_graph6(graph))
        if best is None or _better(direction, key, best[0]):
            best = (key, ratio)

    consider(g, ratio, feasible, bk)
    steps = schedule.steps_for(n)
    temp = schedule.t0
    evaluated = 1
    trajectory = []
    sample = max(1, steps // 50)
    for step in range(1, steps + 1):
        cand = _propose(g, rng)
        if cand is not None:
            c_score, c_ratio, c_feasible, c_margin, c_bk = _evaluate(cand, condition, direction, tol)
            evaluated += 1
            delta = c_score - score
            if delta >= 0 or rng.random() < math.exp(delta / temp):
                g, score = cand, c_score
            consider(cand, c_ratio, c_feasible, c_bk)
        temp *= schedule.factor
        if step % sample == 0:
            trajectory.append((step, None if best is None else best[1]))
    return best, evaluated, trajectory


def anneal_search(n: int, condition: str = "weak", seed: int = 0, schedule: Schedule | None = None,
                  direction: str = "max", tol: float = DEFAULT_TOL, threads: int = 1,
                  keep_trajectory: bool = True) -> SearchResult:
    """Simulated annealing over connected graphs on ``n`` vertices.

    Restart ``i`` uses the generator seeded with ``seed + i``; the first
    restarts start from :func:`seed_structures`, the rest from random graphs.
    """
    if condition not in CONDITIONS:
        raise ValueError(f"condition must be one of {CONDITIONS}")
    if direction not in DIRECTIONS:
        raise ValueError(f"direction must be one of {DIRECTIONS}")
    if n < 4:
        return _exhaustive_small(n, condition, direction, tol, seed)
    schedule = schedule or Schedule()
    seeds = [g for g in seed_structures(n) if _admissible(g, direction)]
    best = None
    evaluated = 0
    # injected structures compete directly
    for g in seeds:
        _, ratio, feasible, _, bk = _evaluate(g, condition, direction, tol)
        evaluated += 1
        if feasible:
            key = (_ratio_key(bk, g.m), write_graph6(g))
            if best is None or _better(direction, key, best[0]):
                best = (key, ratio)
    jobs = []
    for i in range(schedule.restarts):
        start = write_graph6(seeds[i]) if i < len(seeds) else None
        jobs.append((n, condition, seed, i, schedule, start, direction, tol))
    if threads > 1:
        with ProcessPoolExecutor(threads) as pool:
            outcomes = list(pool.map(_anneal_restart, jobs))
    else:
        outcomes = [_anneal_restart(job) for job in jobs]
    trajectory = []
    for i, (res, count, traj) in enumerate(outcomes):
        evaluated += count
        trajectory.append({"restart": i, "samples": traj})
        if res is not None and _better(direction, res[0], best[0] if best else None):
            best = res
    sched = asdict(schedule)
    sched["steps"] = schedule.steps_for(n)
    if best is None:
        return SearchResult(None, None, condition, None, seed, evaluated, feasible=False,
                            direction=direction, trajectory=trajectory if keep_trajectory else None,
                            details={"n": n, "schedule": sched})
    from .graph import parse_graph6

    g = parse_graph6(best[0][1])
    ok, margin = _recertify(g, condition, direction, tol)
    bk = booksize(g).bk
    return SearchResult(best[0][1], bk / math.sqrt(g.m), condition, margin, seed, evaluated,
                        feasible=ok, direction=direction,
                        trajectory=trajectory if keep_trajectory else None,
                        details={"n": n, "m": g.m, "bk": bk, "schedule": sched})


def _exhaustive_small(n: int, condition: str, direction: str, tol: float, seed: int) -> SearchResult:
    from .verify import enumerate_labeled

    best = None
    count = 0
    if n >= 1:
        for g in enumerate_labeled(n, connected_only=True):
            if g.m == 0:
                continue
            count += 1
            _, ratio, feasible, _, bk = _evaluate(g, condition, direction, tol)
            if feasible:
                key = (_ratio_key(bk, g.m), write_graph6(g))
                if best is None or _better(direction, key, best[0]):
                    best = (key, ratio)
    if best is None:
        return SearchResult(None, None, condition, None, seed, count, feasible=False,
                            direction=direction, details={"n": n, "exhaustive": True})
    from .graph import parse_graph6

    g = parse_graph6(best[0][1])
    ok, margin = _recertify(g, condition, direction, tol)
    return SearchResult(best[0][1], best[1], condition, margin, seed, count, feasible=ok,
                        direction=direction, details={"n": n, "m": g.m, "exhaustive": True})


# ---------------------------------------------------------------------------
# isomorphism-free small graphs


def _refine(g: Graph) -> list[int]:
    n = g.n
    colors = g.degrees()
    while True:
        sigs = [(colors[v], tuple(sorted(colors[u] for u in bits_to_list(g.rows[v])))) for v in range(n)]
        ranking = {s: i for i, s in enumerate(sorted(set(sigs)))}
        new = [ranking[s] for s in sigs]
        if len(set(new)) == len(set(colors)):
            return new
        colors = new


def canonical_code(g: Graph) -> tuple[int, int]:
    """Isomorphism invariant that separates non-isomorphic graphs.

    Vertices are ordered by refined colour; every ordering within colour
    cells is tried and the largest upper-triangle bit code is kept.
    """
    n = g.n
    colors = _refine(g)
    cells = []
    for c in sorted(set(colors)):
        cells.append([v for v in range(n) if colors[v] == c])
    rows = g.rows
    pairs = [(i, j) for j in range(1, n) for i in range(j)]
    best = -1
    for choice in product(*(permutations(cell) for cell in cells)):
        order = [v for part in choice for v in part]
        code = 0
        for i, j in pairs:
            code = (code << 1) | ((rows[order[i]] >> order[j]) & 1)
        if code > best:
            best = code
    return n, best


def _from_code(n: int, code: int) -> Graph:
    rows = [0] * n
    pairs = [(i, j) for j in range(1, n) for i in range(j)]
    for k, (i, j) in enumerate(reversed(pairs)):
        if (code >> k) & 1:
            rows[i] |= 1 << j
            rows[j] |= 1 << i
    return Graph(n, rows, check=False)


@lru_cache(maxsize=None)
def nonisomorphic_graphs(n: int) -> tuple[Graph, ...]:
    """One representative per isomorphism class on ``n`` vertices."""
    if n <= 1:
        return (Graph(n, [0] * n),)
    seen = {}
    for h in nonisomorphic_graphs(n - 1):
        for nbrs in range(1 << (n - 1)):
            rows = list(h.rows) + [nbrs]
            for u in bits_to_list(nbrs):
                rows[u] |= 1 << (n - 1)
            code = canonical_code(Graph(n, rows, check=False))
            seen.setdefault(code, None)
    return tuple(_from_code(n, code) for _, code in sorted(seen))


def triangle_bases(n_max: int) -> list[Graph]:
    out = []
    for n in range(3, n_max + 1):
        for g in nonisomorphic_graphs(n):
            if is_connected(g) and booksize(g).bk >= 1:
                out.append(g)
    return out


# ---------------------------------------------------------------------------
# blow-up search


def _blowup_feasible(spec: BlowupSpec, condition: str, direction: str, tol: float):
    cert = rapid_certificate(spec.base.adjacency(np.float64), spec.weights, tol)
    m = spec.m
    status = condition_status(condition, cert.rho_lower, cert.rho_upper, m)
    if status is not ThreeValued.YES:
        return False, condition_margin(condition, cert.rho_lower, m)
    if direction == "min" and not _admissible(blow_up(spec), direction):
        return False, condition_margin(condition, cert.rho_lower, m)
    return True, condition_margin(condition, cert.rho_lower, m)


def optimize_weights(base: Graph, condition: str = "weak", direction: str = "max",
                     max_weight: int = 64, tol: float = DEFAULT_TOL):
    """Coordinate ascent on class sizes; returns ``(key, weights, evaluations)``.

    ``key`` is ``(bk^2/m, total weight)`` of the best feasible weighting or
    ``None`` if no weighting visited was feasible.
    """
    n = base.n
    weights = [1] * n
    evaluations = 0
    best = None
    spec = BlowupSpec(base, tuple(weights))
    evaluations += 1
    ok, _ = _blowup_feasible(spec, condition, direction, tol)
    if ok:
        best = ((_ratio_key(blowup_booksize(spec), spec.m), n), tuple(weights))
    improved = True
    while improved:
        improved = False
        for i in range(n):
            for w in range(1, max_weight + 1):
                if w == weights[i]:
                    continue
                trial = list(weights)
                trial[i] = w
                spec = BlowupSpec(base, tuple(trial))
                key = (_ratio_key(blowup_booksize(spec), spec.m), sum(trial))
                evaluations += 1
                if best is not None and not _better(direction, key, best[0]):
                    continue
                ok, _ = _blowup_feasible(spec, condition, direction, tol)
                if ok:
                    best = (key, tuple(trial))
                    weights = trial
                    improved = True
    return best, evaluations


def blowup_search(base_n_max: int = 6, condition: str = "weak", direction: str = "max",
                  max_weight: int = 64, tol: float = DEFAULT_TOL) -> SearchResult:
    """Best blow-up over all connected triangle-containing bases on <= base_n_max vertices."""
    if not 3 <= base_n_max <= 8:
        raise ValueError("base_n_max must lie in [3, 8]")
    if condition not in CONDITIONS:
        raise ValueError(f"condition must be one of {CONDITIONS}")
    if direction not in DIRECTIONS:
        raise ValueError(f"direction must be one of {DIRECTIONS}")
    best = None
    evaluated = 0
    bases = triangle_bases(base_n_max)
    for base in bases:
        res, count = optimize_weights(base, condition, direction, max_weight, tol)
        evaluated += count
        if res is None:
            continue
        key, weights = res
        g6 = write_graph6(blow_up(BlowupSpec(base, weights)))
        full_key = (key[0], (key[1], g6))
        if best is None or _better(direction, full_key, best[0]):
            best = (full_key, base, weights)
    if best is None:
        return SearchResult(None, None, condition, None, None, evaluated, feasible=False,
                            direction=direction, details={"bases": len(bases)})
    (_, (_, g6)), base, weights = best
    g = blow_up(BlowupSpec(base, weights))
    ok, margin = _recertify(g, condition, direction, tol)
    bk = booksize(g).bk
    return SearchResult(g6, bk / math.sqrt(g.m), condition, margin, None, evaluated, feasible=ok,
                        direction=direction,
                        details={"base_graph6": write_graph6(base), "weights": list(weights),
                                 "n": g.n, "m": g.m, "bk": bk, "bases": len(bases),
                                 "max_weight": max_weight})


# ---------------------------------------------------------------------------
# ledger


def append_ledger(path, result: SearchResult, **metadata) -> dict:
    """Append one JSON line with the result and its reproduction metadata."""
    entry = {
        "result": result.to_json(),
        "metadata": {
            "bookspectra": __version__,
            "numpy": np.__version__,
            "python": platform.python_version(),
            **metadata,
        },
    }
    with open(path, "a", encoding="utf-8") as fh:
        fh.write(json.dumps(entry, sort_keys=True) + "\n")
    return entry


__all__ = [
    "Schedule",
    "SearchResult",
    "anneal_search",
    "append_ledger",
    "blowup_search",
    "canonical_code",
    "nonisomorphic_graphs",
    "optimize_weights",
    "seed_structures",
    "triangle_bases",
]
