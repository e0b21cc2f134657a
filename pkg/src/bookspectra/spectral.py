"""Certified spectral-radius enclosures.

Every enclosure comes from Collatz-Wielandt quotients of a positive vector:
for a nonnegative matrix M and x > 0,

    min_v (Mx)_v / x_v  <=  rho(M)  <=  max_v (Mx)_v / x_v.

The vector is produced by shifted power iteration on M + I, started from the
all-ones vector. The shift keeps bipartite graphs (eigenvalue -rho) from
oscillating. Quotients are widened by a few units in the last place so the
bounds survive floating-point rounding.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .graph import BlowupSpec, Graph, components, is_connected

DEFAULT_TOL = 1e-10
_EPS = np.finfo(np.float64).eps


class ThreeValued(str, enum.Enum):
    YES = "certified-yes"
    NO = "certified-no"
    BORDERLINE = "borderline"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True, eq=False)
class SpectralCertificate:
    rho_lower: float
    rho_upper: float
    estimate: float
    perron: np.ndarray
    iterations: int
    converged: bool

    @property
    def width(self) -> float:
        return self.rho_upper - self.rho_lower

    def contains(self, value: float) -> bool:
        return self.rho_lower <= value <= self.rho_upper


def iteration_cap(n: int) -> int:
    return 100 * n + 10000


def _matvec(mats: np.ndarray, x: np.ndarray) -> np.ndarray:
    # elementwise product + row reduction: the summation order of a row does
    # not depend on how many matrices share the batch
    return (mats * x[:, None, :]).sum(axis=-1)


def _widen(lo: np.ndarray, hi: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    # 8 ulps for the division plus n*eps for the row sum
    lo_c = lo - 8.0 * np.spacing(np.abs(lo)) - n * _EPS * np.abs(lo)
    hi_c = hi + 8.0 * np.spacing(np.abs(hi)) + n * _EPS * np.abs(hi)
    return np.maximum(lo_c, 0.0), hi_c


def collatz_wielandt(mats: np.ndarray, x: np.ndarray):
    """Widened Collatz-Wielandt bounds of a batch of matrices at positive ``x``.

    Returns ``(lower, upper, raw_lower, raw_upper, Mx)``.
    """
    y = _matvec(mats, x)
    q = y / x
    lo = q.min(axis=-1)
    hi = q.max(axis=-1)
    lo_c, hi_c = _widen(lo, hi, mats.shape[-1])
    return lo_c, hi_c, lo, hi, y


def power_iterate(mats: np.ndarray, tol: float = DEFAULT_TOL, max_iter: int | None = None,
                  x0: np.ndarray | None = None):
    """Batched shifted power iteration on irreducible nonnegative matrices.

    ``mats`` has shape ``(B, n, n)``. Each matrix is iterated independently
    until its enclosure width is at most ``tol * upper`` or the cap is hit;
    converged members leave the active set so their trajectory is the same
    as in a batch of one.

    Returns a dict of arrays: ``lower``, ``upper``, ``estimate``, ``vectors``,
    ``iterations``, ``converged``.
    """
    mats = np.asarray(mats, dtype=np.float64)
    if mats.ndim != 3 or mats.shape[1] != mats.shape[2]:
        raise ValueError("expected a (B, n, n) stack of square matrices")
    b, n, _ = mats.shape
    if max_iter is None:
        max_iter = iteration_cap(n)
    x = np.ones((b, n)) if x0 is None else np.array(x0, dtype=np.float64, copy=True)
    lower = np.zeros(b)
    upper = np.zeros(b)
    estimate = np.zeros(b)
    iterations = np.zeros(b, dtype=np.int64)
    converged = np.zeros(b, dtype=bool)
    vectors = x.copy()
    active = np.arange(b)
    sub = mats
    xa = x
    it = 0
    while active.size:
        it += 1
        lo_c, hi_c, lo, hi, y = collatz_wielandt(sub, xa)
        done = (hi_c - lo_c) <= tol * hi_c
        last = it >= max_iter
        finish = done | last
        if finish.any():
            idx = active[finish]
            lower[idx] = lo_c[finish]
            upper[idx] = hi_c[finish]
            estimate[idx] = np.clip(0.5 * (lo[finish] + hi[finish]), lo_c[finish], hi_c[finish])
            vectors[idx] = xa[finish]
            iterations[idx] = it
            converged[idx] = done[finish]
            keep = ~finish
            active = active[keep]
            sub = sub[keep]
            xa = xa[keep]
            y = y[keep]
        if not active.size:
            break
        xa = xa + y
        xa = xa / xa.max(axis=-1, keepdims=True)
    return {
        "lower": lower,
        "upper": upper,
        "estimate": estimate,
        "vectors": vectors,
        "iterations": iterations,
        "converged": converged,
    }


def _certificate_from(result: dict, i: int = 0) -> SpectralCertificate:
    return SpectralCertificate(
        rho_lower=float(result["lower"][i]),
        rho_upper=float(result["upper"][i]),
        estimate=float(result["estimate"][i]),
        perron=result["vectors"][i],
        iterations=int(result["iterations"][i]),
        converged=bool(result["converged"][i]),
    )


def _zero_certificate(n: int) -> SpectralCertificate:
    return SpectralCertificate(0.0, 0.0, 0.0, np.ones(n), 0, True)


def _connected_certificate(adj: np.ndarray, tol: float) -> SpectralCertificate:
    if adj.shape[0] == 1:
        return _zero_certificate(1)
    return _certificate_from(power_iterate(adj[None].astype(np.float64), tol))


def spectral_radius(g: Graph, tol: float = DEFAULT_TOL) -> SpectralCertificate:
    """Certified enclosure of the adjacency spectral radius of ``g``.

    For a disconnected graph the component with the largest upper bound
    wins; its Perron vector is embedded with zeros elsewhere.
    """
    if g.n == 0:
        raise ValueError("spectral radius of the empty graph is undefined")
    if tol <= 0:
        raise ValueError("tol must be positive")
    if g.m == 0:
        return _zero_certificate(g.n)
    adj = g.adjacency(np.float64)
    if is_connected(g):
        return _connected_certificate(adj, tol)
    best = None
    best_comp = None
    for comp in components(g):
        if len(comp) < 2:
            continue
        cert = _connected_certificate(adj[np.ix_(comp, comp)], tol)
        if best is None or cert.rho_upper > best.rho_upper:
            best, best_comp = cert, comp
    perron = np.zeros(g.n)
    perron[best_comp] = best.perron
    return SpectralCertificate(best.rho_lower, best.rho_upper, best.estimate, perron,
                               best.iterations, best.converged)


def quotient_matrix(spec: BlowupSpec) -> np.ndarray:
    """``M[i, j] = k_j`` for base edges ij; same spectral radius as the blow-up."""
    adj = spec.base.adjacency(np.float64)
    return adj * np.asarray(spec.weights, dtype=np.float64)[None, :]


def quotient_rho(spec: BlowupSpec, tol: float = DEFAULT_TOL) -> SpectralCertificate:
    """Spectral radius of ``blow_up(spec)`` through the base-sized quotient system.

    The Perron vector is indexed by base vertex (one value per class).
    """
    if spec.base.n == 0 or not is_connected(spec.base):
        raise ValueError("quotient_rho needs a connected base graph")
    if spec.base.n == 1:
        return _zero_certificate(1)
    return _certificate_from(power_iterate(quotient_matrix(spec)[None], tol))


def rapid_certificate(adj: np.ndarray, weights=None, tol: float = DEFAULT_TOL) -> SpectralCertificate:
    """Enclosure for a connected (weighted) graph, seeded by a dense eigensolver.

    The eigenvector of the symmetrised system is only a starting point; the
    bounds are Collatz-Wielandt quotients of ``A diag(weights)`` at that
    vector, with power iteration taking over if they are not tight enough.
    """
    adj = np.asarray(adj, dtype=np.float64)
    n = adj.shape[0]
    if n == 1:
        return _zero_certificate(1)
    k = np.ones(n) if weights is None else np.asarray(weights, dtype=np.float64)
    root = np.sqrt(k)
    sym = adj * root[:, None] * root[None, :]
    _, vecs = np.linalg.eigh(sym)
    y = vecs[:, -1]
    if y.sum() < 0:
        y = -y
    mat = adj * k[None, :]
    if not np.all(y > 0):
        return _certificate_from(power_iterate(mat[None], tol))
    x = y / root
    x = x / x.max()
    # usually tight at the seed already; this is the first power-iteration step
    lo_c, hi_c, lo, hi, _ = collatz_wielandt(mat[None], x[None])
    if hi_c[0] - lo_c[0] <= tol * hi_c[0]:
        est = min(max(0.5 * (lo[0] + hi[0]), lo_c[0]), hi_c[0])
        return SpectralCertificate(float(lo_c[0]), float(hi_c[0]), float(est), x, 1, True)
    return _certificate_from(power_iterate(mat[None], tol, x0=x[None]))


# ---------------------------------------------------------------------------
# extremal solver and classifiers


def splus_residual(rho: float, m: int, s: int) -> float:
    """``rho^2 - (m-1) - 2s/(rho-1)``; zero at rho(S+_{m,s})."""
    return rho * rho - (m - 1) - 2.0 * s / (rho - 1.0)


def solve_splus_rho(m: int, s: int) -> float:
    """Root rho_0 > sqrt(m-1) of rho^2 = m - 1 + 2s/(rho - 1), by bisection."""
    if m < 3 or s < 1:
        raise ValueError("need m >= 3 and s >= 1")
    # the residual is increasing on rho > 1 and negative at sqrt(m-1)
    lo = math.sqrt(m - 1)
    hi = lo + 2.0
    while splus_residual(hi, m, s) <= 0:
        hi *= 2.0
    while hi - lo > 1e-12:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if splus_residual(mid, m, s) < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def nosal_classify(g: Graph, tol: float = DEFAULT_TOL, cert: SpectralCertificate | None = None) -> ThreeValued:
    """Compare rho(g) with sqrt(m)."""
    if cert is None:
        cert = spectral_radius(g, tol)
    return classify_nosal(cert.rho_lower, cert.rho_upper, g.m)


def classify_nosal(lower: float, upper: float, m: int) -> ThreeValued:
    # math.sqrt is correctly rounded, so strict float comparisons are exact
    root = math.sqrt(m)
    if lower > root:
        return ThreeValued.YES
    if upper < root:
        return ThreeValued.NO
    return ThreeValued.BORDERLINE


def weak_margin(rho: float, m: int) -> float:
    """``rho^2 - 2/(rho-1) - (m-1)``; nonnegative iff the weak condition holds."""
    return rho * rho - 2.0 / (rho - 1.0) - (m - 1)


def _weak_holds(rho: float, m: int) -> bool:
    val = weak_margin(rho, m)
    if abs(val) > 1e-9 * max(1.0, m):
        return val >= 0
    r = Fraction(rho)
    return r * r - Fraction(2) / (r - 1) >= m - 1


def classify_weak(lower: float, upper: float, m: int) -> ThreeValued:
    if lower <= 1.0:
        raise ValueError("weak condition needs an enclosure strictly above 1")
    # rho^2 - 2/(rho-1) is increasing for rho > 1
    if _weak_holds(lower, m):
        return ThreeValued.YES
    if not _weak_holds(upper, m):
        return ThreeValued.NO
    return ThreeValued.BORDERLINE


def weak_condition_classify(g: Graph, tol: float = DEFAULT_TOL,
                            cert: SpectralCertificate | None = None) -> ThreeValued:
    """Classify rho^2 >= m - 1 + 2/(rho - 1)."""
    if cert is None:
        cert = spectral_radius(g, tol)
    return classify_weak(cert.rho_lower, cert.rho_upper, g.m)
