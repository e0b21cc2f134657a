"""Perron-weight partition of a graph around its heaviest vertex.

Given a graph and a converged Perron vector (scaled so the heaviest vertex
u* has weight 1), this module builds the vertex and edge classes used to bound
rho^2 from the second-order eigen-equation at u*, checks that equation in its
two forms, and evaluates the intermediate inequalities numerically.

Notation used in field names:

* ``U`` = N(u*), ``W`` = everything else except u*.
* An edge uv inside U is *bad* when x_u + x_v >= x_{u*}; it belongs to its
  heavier endpoint (smaller index on exact ties).
* ``W_star`` = {w in W : x_w >= (1 - 4.5 r / rho)}.
* ``U1``/``U2`` split the owners of bad edges by whether they have more than
  ``c * rho / 4.5`` neighbours in W minus W_star.
* ``V_star`` are the light endpoints of bad edges owned by U2, and ``beta[v]``
  is the largest weight among v's neighbours in U2.
* ``f[w] = d_U(w) (1 - x_w) + d_W(w) / 2``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .booksize import booksize
from .graph import Graph, bits_to_list, is_connected, s_plus_witness, write_graph6
from .spectral import SpectralCertificate, splus_residual

FRAGILE = 1e-9
CLAIM_TOL = 1e-6


@dataclass(frozen=True, eq=False)
class ProofTrace:
    graph: Graph
    rho: float
    rho_lower: float
    r: int
    c: float
    x: np.ndarray
    u_star: int
    U: tuple[int, ...]
    W: tuple[int, ...]
    edges_U: tuple[tuple[int, int], ...]
    bad_edges: tuple[tuple[int, int], ...]
    estar: dict[tuple[int, int], int]
    w_star_threshold: float
    W_star: tuple[int, ...]
    U1: tuple[int, ...]
    U2: tuple[int, ...]
    E1: tuple[tuple[int, int], ...]
    E2: tuple[tuple[int, int], ...]
    E3: tuple[tuple[int, int], ...]
    V_star: tuple[int, ...]
    beta: dict[int, float]
    d_U: dict[int, int]
    d_W: dict[int, int]
    f: dict[int, float]
    residual_eq1: float
    residual_eq2: float
    fragile: tuple[str, ...] = ()
    flags: tuple[str, ...] = ()

    @property
    def lam(self) -> dict[int, float]:
        """Normalised weight x_v / x_{u*} per vertex."""
        return {v: float(self.x[v]) for v in range(self.graph.n)}

    @property
    def e_U(self) -> int:
        return len(self.edges_U)

    def to_json(self) -> dict:
        def real(v: float) -> float:
            return float(f"{v:.17g}")

        return {
            "graph6": write_graph6(self.graph),
            "n": self.graph.n,
            "m": self.graph.m,
            "rho": real(self.rho),
            "r": self.r,
            "c": self.c,
            "u_star": self.u_star,
            "x": [real(v) for v in self.x],
            "U": list(self.U),
            "W": list(self.W),
            "edges_U": [list(e) for e in self.edges_U],
            "bad_edges": [list(e) for e in self.bad_edges],
            "estar": [[e[0], e[1], owner] for e, owner in sorted(self.estar.items())],
            "w_star_threshold": real(self.w_star_threshold),
            "W_star": list(self.W_star),
            "U1": list(self.U1),
            "U2": list(self.U2),
            "E1": [list(e) for e in self.E1],
            "E2": [list(e) for e in self.E2],
            "E3": [list(e) for e in self.E3],
            "V_star": list(self.V_star),
            "beta": {str(v): real(b) for v, b in sorted(self.beta.items())},
            "f": {str(w): real(val) for w, val in sorted(self.f.items())},
            "residual_eq1": real(self.residual_eq1),
            "residual_eq2": real(self.residual_eq2),
            "fragile": list(self.fragile),
            "flags": list(self.flags),
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=False)


def build_trace(g: Graph, cert: SpectralCertificate, r: int, c: float = 1.0) -> ProofTrace:
    if g.n == 0 or g.m == 0:
        raise ValueError("trace needs a graph with at least one edge")
    if not is_connected(g):
        raise ValueError("trace needs a connected graph")
    if not cert.converged or cert.width > 1e-8 * cert.rho_upper:
        raise ValueError("trace needs a converged certificate of relative width <= 1e-8")
    if r < 1:
        raise ValueError("page bound r must be at least 1")
    if c <= 0:
        raise ValueError("c must be positive")
    flags = []
    if c not in (1, 2):
        flags.append("nonstandard-c")

    rows = g.rows
    rho = cert.estimate
    x = np.asarray(cert.perron, dtype=np.float64)
    u_star = int(np.argmax(x))
    x = x / x[u_star]
    fragile = []
    order = np.sort(x)
    if g.n > 1 and order[-1] - order[-2] < FRAGILE:
        fragile.append("u_star")

    u_mask = rows[u_star]
    U = bits_to_list(u_mask)
    w_mask = ((1 << g.n) - 1) & ~u_mask & ~(1 << u_star)
    W = bits_to_list(w_mask)

    edges_U = []
    for u in U:
        for v in bits_to_list(rows[u] & u_mask):
            if u < v:
                edges_U.append((u, v))

    bad_edges = []
    estar: dict[tuple[int, int], int] = {}
    for u, v in edges_U:
        gap = x[u] + x[v] - 1.0
        if abs(gap) < FRAGILE:
            fragile.append(f"bad-edge:{u}-{v}")
        if gap >= 0:
            bad_edges.append((u, v))
            if x[u] > x[v] or (x[u] == x[v] and u < v):
                estar[(u, v)] = u
            else:
                estar[(u, v)] = v
            if abs(x[u] - x[v]) < FRAGILE:
                fragile.append(f"owner:{u}-{v}")

    threshold = 1.0 - 4.5 * r / rho
    if threshold <= 0:
        flags.append("w-star-threshold-nonpositive")
    W_star = []
    for w in W:
        if abs(x[w] - threshold) < FRAGILE:
            fragile.append(f"w-star:{w}")
        if x[w] >= threshold:
            W_star.append(w)
    w_star_mask = sum(1 << w for w in W_star)
    w_rest_mask = w_mask & ~w_star_mask

    owners = sorted(set(estar.values()))
    cut = c * rho / 4.5
    U1, U2 = [], []
    for u in owners:
        d = (rows[u] & w_rest_mask).bit_count()
        if abs(d - cut) < FRAGILE:
            fragile.append(f"u-class:{u}")
        (U1 if d > cut else U2).append(u)
    u1_set, u2_set = set(U1), set(U2)

    E1 = tuple(e for e in bad_edges if estar[e] in u1_set)
    E2 = tuple(e for e in bad_edges if estar[e] in u2_set)
    owned = set(E1) | set(E2)
    E3 = tuple(e for e in edges_U if e not in owned)

    V_star = sorted({e[0] if estar[e] == e[1] else e[1] for e in E2})
    u2_mask = sum(1 << u for u in U2)
    beta = {}
    for v in V_star:
        beta[v] = float(max(x[u] for u in bits_to_list(rows[v] & u2_mask)))

    d_U = {w: (rows[w] & u_mask).bit_count() for w in W}
    d_W = {w: (rows[w] & w_mask).bit_count() for w in W}
    f = {w: d_U[w] * (1.0 - x[w]) + 0.5 * d_W[w] for w in W}

    trace = ProofTrace(
        graph=g, rho=rho, rho_lower=cert.rho_lower, r=r, c=c, x=x, u_star=u_star,
        U=tuple(U), W=tuple(W), edges_U=tuple(edges_U), bad_edges=tuple(bad_edges),
        estar=estar, w_star_threshold=threshold, W_star=tuple(W_star),
        U1=tuple(U1), U2=tuple(U2), E1=E1, E2=E2, E3=E3, V_star=tuple(V_star),
        beta=beta, d_U=d_U, d_W=d_W, f=f, residual_eq1=0.0, residual_eq2=0.0,
        fragile=tuple(fragile), flags=tuple(flags),
    )
    eq1, eq2 = _residuals(trace)
    object.__setattr__(trace, "residual_eq1", eq1)
    object.__setattr__(trace, "residual_eq2", eq2)
    return trace


def _residuals(t: ProofTrace) -> tuple[float, float]:
    x = t.x
    rows = t.graph.rows
    lhs = t.rho * t.rho * x[t.u_star]
    inside = math.fsum(x[u] + x[v] for u, v in t.edges_U)
    # first form: d(u*) x_u* + sum over E(U) + sum_W d_U(w) x_w
    cross = math.fsum((rows[w] & rows[t.u_star]).bit_count() * x[w] for w in t.W)
    eq1 = lhs - (t.graph.degree(t.u_star) * x[t.u_star] + inside + cross)
    # second form uses the stored f values
    eq2 = lhs - ((t.graph.m - t.e_U) * x[t.u_star] + inside - math.fsum(t.f.values()))
    return abs(float(eq1)), abs(float(eq2))


@dataclass(frozen=True)
class IdentityCheck:
    passed: bool
    residual_eq1: float
    residual_eq2: float
    bound: float


def verify_identities(t: ProofTrace) -> IdentityCheck:
    """Recompute both forms of the eigen-equation at u* from the trace data."""
    eq1, eq2 = _residuals(t)
    bound = 1e-6 * t.graph.m * float(t.x[t.u_star])
    return IdentityCheck(eq1 <= bound and eq2 <= bound, eq1, eq2, bound)


@dataclass(frozen=True)
class ClaimResult:
    applicable: bool
    holds: bool
    margin: float | None
    note: str = ""
    details: dict = field(default_factory=dict)


def _claim_w_rest(t: ProofTrace) -> ClaimResult:
    rest = [w for w in t.W if w not in set(t.W_star)]
    lhs = math.fsum(t.f[w] for w in rest)
    rhs = t.c * t.r * len(t.U1)
    margin = lhs - rhs
    note = "strict inequality required" if t.U1 else ""
    return ClaimResult(True, margin >= -CLAIM_TOL, margin, note)


def _claim_u2_degree(t: ProofTrace, bk: int) -> ClaimResult:
    if bk > t.r:
        return ClaimResult(False, True, None, f"booksize {bk} exceeds r={t.r}")
    if not t.U2:
        return ClaimResult(False, True, None, "U2 is empty")
    rows = t.graph.rows
    w_star_mask = sum(1 << w for w in t.W_star)
    margins = {}
    for u in t.U2:
        lam = float(t.x[u])
        bound = (lam - t.c / 4.5) * t.rho - (t.r + lam)
        margins[u] = (rows[u] & w_star_mask).bit_count() - bound
    margin = min(margins.values())
    return ClaimResult(True, margin >= -CLAIM_TOL, margin, details={"per_vertex": margins})


def _non_neighbors_in_w_star(t: ProofTrace, v: int) -> int:
    w_star_mask = sum(1 << w for w in t.W_star)
    return len(t.W_star) - (t.graph.rows[v] & w_star_mask).bit_count()


def _claim_v_star(t: ProofTrace, bk: int) -> ClaimResult:
    if bk > t.r:
        return ClaimResult(False, True, None, f"booksize {bk} exceeds r={t.r}")
    if not t.V_star:
        return ClaimResult(False, True, None, "V* is empty")
    margins = {}
    for v in t.V_star:
        b = t.beta[v]
        bound = (b - t.c / 4.5) * t.rho - 2 * t.r + (1 - b)
        margins[v] = _non_neighbors_in_w_star(t, v) - bound
    margin = min(margins.values())
    return ClaimResult(True, margin >= -CLAIM_TOL, margin, details={"per_vertex": margins})


def _claim_w_star_f(t: ProofTrace, bk: int) -> ClaimResult:
    m, r = t.graph.m, t.r
    if bk > r:
        return ClaimResult(False, True, None, f"booksize {bk} exceeds r={r}")
    if not t.V_star:
        return ClaimResult(False, True, None, "V* is empty")
    if m < (9 * r) ** 2:
        return ClaimResult(False, True, None, f"m={m} below (9r)^2={(9 * r) ** 2}")
    # the argument also relies on rho >= 9r, which holds when rho >= sqrt(m)
    if t.rho_lower < 9 * r:
        return ClaimResult(False, True, None, "rho below 9r")
    rows = t.graph.rows
    u_mask = sum(1 << u for u in t.U)
    margins = {}
    for w in t.W_star:
        missing = bits_to_list(u_mask & ~rows[w])
        margins[w] = t.f[w] - 0.25 * math.fsum(t.x[v] for v in missing)
    if not margins:
        return ClaimResult(False, True, None, "W* is empty")
    margin = min(margins.values())
    return ClaimResult(True, margin >= -CLAIM_TOL, margin, details={"per_vertex": margins})


def _claim_splus(t: ProofTrace) -> ClaimResult:
    hit = s_plus_witness(t.graph)
    if hit is None:
        return ClaimResult(False, True, None, "not an S+ graph")
    s, (u1, v1) = hit
    if (u1, v1) not in set(t.edges_U):
        return ClaimResult(False, True, None, "extra edge not inside N(u*)")
    m, rho = t.graph.m, t.rho
    eq_res = splus_residual(rho, m, s)
    target = 2.0 * s / (rho - 1.0)
    margin = float(t.x[u1] + t.x[v1] - target)
    ok = abs(eq_res) <= CLAIM_TOL and abs(margin) <= CLAIM_TOL
    return ClaimResult(True, ok, margin, details={"s": s, "edge": (u1, v1), "equation_residual": eq_res})


CLAIMS = ("w-rest-f-sum", "u2-w-star-degree", "v-star-w-star-gap", "w-star-f-bound", "splus-extra-edge")


def verify_claims(t: ProofTrace) -> dict[str, ClaimResult]:
    """Evaluate each inequality; inapplicable claims report ``applicable=False``.

    Margins are LHS - RHS in units of x_{u*}; for the S+ identity the margin
    is the signed deviation of x_{u1} + x_{v1} from 2s/(rho-1).
    """
    bk = booksize(t.graph).bk
    return {
        "w-rest-f-sum": _claim_w_rest(t),
        "u2-w-star-degree": _claim_u2_degree(t, bk),
        "v-star-w-star-gap": _claim_v_star(t, bk),
        "w-star-f-bound": _claim_w_star_f(t, bk),
        "splus-extra-edge": _claim_splus(t),
    }
