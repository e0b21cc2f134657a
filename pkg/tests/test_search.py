import json
import math
from fractions import Fraction

import pytest
from hypothesis import given

from bookspectra.graph import (
    BlowupSpec,
    blow_up,
    from_edges,
    is_bipartite,
    is_connected,
    is_s_plus,
    parse_graph6,
)
from bookspectra.booksize import booksize
from bookspectra.search import (
    Schedule,
    anneal_search,
    append_ledger,
    blowup_search,
    canonical_code,
    nonisomorphic_graphs,
    optimize_weights,
    seed_structures,
    triangle_bases,
)
from bookspectra.spectral import ThreeValued, nosal_classify, weak_condition_classify
from bookspectra.verify import Census

from conftest import graphs

SMALL = Schedule(t0=0.2, factor=0.99, steps=300, restarts=3)


@pytest.mark.parametrize("n,count", [(1, 1), (2, 2), (3, 4), (4, 11), (5, 34), (6, 156)])
def test_isomorphism_class_counts(n, count):
    assert len(nonisomorphic_graphs(n)) == count


@given(graphs(min_n=1, max_n=7))
def test_canonical_code_invariant_under_relabelling(g):
    perm = list(range(g.n))[::-1]
    h = from_edges(g.n, [(perm[u], perm[v]) for u, v in g.edges()])
    assert canonical_code(g) == canonical_code(h)


def test_triangle_bases_are_connected_with_triangles():
    bases = triangle_bases(5)
    assert all(is_connected(b) and booksize(b).bk >= 1 for b in bases)
    # 21 connected graphs on 5 vertices, 6 of them triangle-free
    assert len(bases) == 1 + 3 + 15


def test_seed_structures_have_n_vertices():
    for n in (6, 7, 12):
        for g in seed_structures(n):
            assert g.n == n and is_connected(g)


def _check_result(res, condition):
    assert res.feasible
    g = parse_graph6(res.best_graph6)
    assert is_connected(g)
    assert math.isclose(res.ratio, booksize(g).bk / math.sqrt(g.m))
    status = nosal_classify(g) if condition == "strict-nosal" else weak_condition_classify(g)
    assert status is ThreeValued.YES
    assert res.condition_margin >= 0
    return g


def test_anneal_small_is_feasible_and_deterministic():
    a = anneal_search(8, "weak", seed=7, schedule=SMALL)
    b = anneal_search(8, "weak", seed=7, schedule=SMALL)
    assert a.to_json() == b.to_json()
    _check_result(a, "weak")


def test_anneal_matches_exhaustive_n6_strict():
    best = Fraction(0)
    for rec in Census().run_labeled(6, n_min=6):
        if rec.nosal is ThreeValued.YES:
            best = max(best, Fraction(rec.bk * rec.bk, rec.m))
    res = anneal_search(6, "strict-nosal", seed=3, schedule=SMALL)
    g = _check_result(res, "strict-nosal")
    assert Fraction(booksize(g).bk ** 2, g.m) == best


def test_anneal_tiny_n_is_exhaustive():
    res = anneal_search(3, "strict-nosal")
    assert res.best_graph6 == "Bw"
    assert res.details["exhaustive"]


def test_anneal_min_direction_avoids_splus_and_bipartite():
    res = anneal_search(7, "weak", seed=1, schedule=SMALL, direction="min")
    g = _check_result(res, "weak")
    assert not is_bipartite(g) and is_s_plus(g) is None


def test_anneal_threads_same_result():
    a = anneal_search(7, "weak", seed=2, schedule=SMALL, threads=1)
    b = anneal_search(7, "weak", seed=2, schedule=SMALL, threads=2)
    assert a.to_json() == b.to_json()


def test_anneal_rejects_bad_arguments():
    with pytest.raises(ValueError):
        anneal_search(6, "nosal")
    with pytest.raises(ValueError):
        anneal_search(6, "weak", direction="up")


def test_optimize_weights_triangle():
    # K3 with classes (a, b, c): bk = max class, so one huge class wins
    k3 = from_edges(3, [(0, 1), (1, 2), (0, 2)])
    best, evaluations = optimize_weights(k3, "weak", max_weight=5)
    (key, total), weights = best
    assert evaluations > 0
    spec = BlowupSpec(k3, weights)
    g = blow_up(spec)
    assert key == Fraction(booksize(g).bk ** 2, g.m)
    assert sum(weights) == total


def test_blowup_search_small():
    res = blowup_search(4, "weak", max_weight=8)
    g = _check_result(res, "weak")
    assert res.details["bases"] == 4
    assert g.n == sum(res.details["weights"])
    assert res.ratio >= 1 / 3


def test_blowup_search_deterministic():
    a = blowup_search(4, "strict-nosal", max_weight=6)
    b = blowup_search(4, "strict-nosal", max_weight=6)
    assert a.to_json() == b.to_json()
    _check_result(a, "strict-nosal")


def test_blowup_search_bounds():
    with pytest.raises(ValueError):
        blowup_search(9)
    with pytest.raises(ValueError):
        blowup_search(2)


def test_ledger_append(tmp_path):
    res = anneal_search(5, "weak", seed=0, schedule=Schedule(steps=50, restarts=1))
    path = tmp_path / "ledger.jsonl"
    append_ledger(path, res, command="test")
    append_ledger(path, res, command="test")
    lines = path.read_text().splitlines()
    assert len(lines) == 2
    entry = json.loads(lines[0])
    assert entry["result"]["best_graph6"] == res.best_graph6
    assert entry["metadata"]["command"] == "test"
    assert "numpy" in entry["metadata"]


def test_blowup_k3_matches_weight_scan():
    # exhaustive scan over k_i <= 64, best ratio first; ties go to smaller total weight
    from bookspectra.spectral import quotient_rho, classify_weak

    k3 = from_edges(3, [(0, 1), (1, 2), (0, 2)])
    cands = []
    for a in range(1, 65):
        for b in range(1, 65):
            for c in range(1, 65):
                m = a * b + b * c + a * c
                cands.append((-Fraction(max(a, b, c) ** 2, m), a + b + c, (a, b, c)))
    cands.sort()
    for neg, total, w in cands:
        cert = quotient_rho(BlowupSpec(k3, w))
        m = w[0] * w[1] + w[1] * w[2] + w[0] * w[2]
        if cert.rho_lower > 1 and classify_weak(cert.rho_lower, cert.rho_upper, m) is ThreeValued.YES:
            best = -neg
            break
    res = blowup_search(3, "weak")
    g = parse_graph6(res.best_graph6)
    assert Fraction(booksize(g).bk ** 2, g.m) == best
    assert sum(res.details["weights"]) == total


def test_blowup_unit_weights_is_small_graph_maximum():
    best = Fraction(0)
    for rec in Census().run_labeled(5, n_min=3):
        if rec.weak_condition is ThreeValued.YES and rec.connected:
            best = max(best, Fraction(rec.bk ** 2, rec.m))
    res = blowup_search(5, "weak", max_weight=1)
    g = parse_graph6(res.best_graph6)
    assert Fraction(booksize(g).bk ** 2, g.m) == best
