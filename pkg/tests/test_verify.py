import io
import json

import numpy as np
import pytest

from bookspectra.graph import (
    Graph,
    complete_bipartite,
    complete_graph,
    cycle,
    path,
    s_plus,
    write_graph6,
)
from bookspectra.spectral import ThreeValued
from bookspectra.verify import (
    CSV_COLUMNS,
    PREDICATES,
    Census,
    CensusSummary,
    census,
    census_record,
    enumerate_labeled,
    enumerate_masks,
    evaluate_batch,
    graph_from_mask,
    verify_extremal_families,
    write_records,
)
from bookspectra.booksize import booksize
from bookspectra.graph import has_c4, is_bipartite, is_complete_bipartite, is_connected, is_s_plus, is_star

from conftest import random_connected


# labelled counts: all graphs and connected graphs
@pytest.mark.parametrize("n,total,conn", [(1, 1, 1), (2, 2, 1), (3, 8, 4), (4, 64, 38), (5, 1024, 728)])
def test_enumeration_counts(n, total, conn):
    assert sum(len(c) for c in enumerate_masks(n)) == total
    assert sum(len(c) for c in enumerate_masks(n, connected_only=True)) == conn


def test_n8_requires_opt_in():
    with pytest.raises(ValueError):
        next(enumerate_masks(8))


def test_mask_bit_order():
    # bit k is the k-th pair in graph6 order
    assert graph_from_mask(3, 0b001).has_edge(0, 1)
    assert graph_from_mask(3, 0b010).has_edge(0, 2)
    assert graph_from_mask(3, 0b100).has_edge(1, 2)


def test_enumerated_graphs_connected():
    for g in enumerate_labeled(4, connected_only=True):
        assert is_connected(g)


def test_batch_matches_direct_recognizers(rng):
    gs = [random_connected(9, rng, p=float(rng.random())) for _ in range(40)]
    gs += [complete_bipartite(4, 5), s_plus(19, 2), cycle(9), path(9)]
    gs = [g for g in gs if g.n == 9]
    adj = np.stack([g.adjacency() for g in gs])
    recs = evaluate_batch(9, adj, [write_graph6(g) for g in gs])
    for g, rec in zip(gs, recs):
        assert rec.m == g.m
        assert rec.bk == booksize(g).bk
        assert rec.bipartite == is_bipartite(g)
        assert rec.complete_bipartite == is_complete_bipartite(g)
        assert rec.star == is_star(g)
        assert rec.has_c4 == has_c4(g)
        assert rec.s_plus == is_s_plus(g)
        # single-graph path must agree bit for bit
        assert census_record(g) == rec


def test_batch_membership_does_not_change_records(rng):
    gs = [random_connected(7, rng) for _ in range(10)]
    recs, _ = census(gs)
    for g, rec in zip(gs, recs):
        assert census_record(g) == rec


def test_predicates_on_examples():
    k34 = census_record(complete_bipartite(3, 4))
    assert k34.nosal is ThreeValued.BORDERLINE
    assert k34.outcome("nikiforov-equality") == "ok"
    assert k34.outcome("nosal-implies-triangle") == "na"
    k5 = census_record(complete_graph(5))
    assert k5.nosal is ThreeValued.YES
    assert k5.outcome("nosal-implies-triangle") == "ok"
    assert k5.outcome("c4-or-star") == "ok"
    assert k5.outcome("erdos-edwards") == "ok"
    c5 = census_record(cycle(5))
    assert c5.nosal is ThreeValued.NO
    assert c5.outcome("weak-census") == "na"


def test_edgeless_graph_record():
    rec = census_record(Graph(1, [0]))
    assert rec.m == 0 and rec.rho_upper == 0.0
    assert all(rec.outcome(p) == "na" for p in PREDICATES)


def test_small_census_zero_violations():
    run = Census()
    records = list(run.run_labeled(5))
    assert len(records) == 1 + 1 + 4 + 38 + 728
    summ = run.summary
    assert summ.total_violations() == 0
    assert summ.borderline_nosal_unexplained == 0
    assert all(v == 0 for v in summ.to_json()["unresolved"].values())


def test_threads_do_not_change_output():
    a = Census(threads=1)
    b = Census(threads=2)
    ra = list(a.run_labeled(5, n_min=4))
    rb = list(b.run_labeled(5, n_min=4))
    assert ra == rb
    assert a.summary.to_json() == b.summary.to_json()


def test_summary_merge_equals_single_pass():
    gs = list(enumerate_labeled(4, connected_only=True))
    _, whole = census(gs)
    _, first = census(gs[:10])
    _, second = census(gs[10:])
    first.merge(second)
    assert first.to_json() == whole.to_json()


def test_graph6_ingestion_records_malformed():
    run = Census()
    recs = list(run.run_graph6(["Bw\n", "oops\n", "C~\n"]))
    assert [r.graph6 for r in recs] == ["Bw", "C~"]
    assert run.summary.malformed[0]["line"] == 2


def test_write_records_formats():
    recs, _ = census([complete_graph(3), cycle(4)])
    buf = io.StringIO()
    assert write_records(recs, buf, "csv") == 2
    lines = buf.getvalue().splitlines()
    assert lines[0].split(",") == list(CSV_COLUMNS)
    assert lines[1].startswith("Bw,3,3,1,0,")
    buf = io.StringIO()
    write_records(recs, buf, "jsonl")
    first = json.loads(buf.getvalue().splitlines()[0])
    assert first["nosal"] == "certified-yes"
    with pytest.raises(ValueError):
        write_records(recs, io.StringIO(), "xml")


def test_extremal_families():
    rep = verify_extremal_families(4, [(17, 1), (37, 2), (1000, 3)])
    assert rep.passed
    prism_rows = [r for r in rep.rows if r["family"] == "prism"]
    assert [r["m"] for r in prism_rows] == [9, 36, 81, 144]
    for row in rep.rows:
        if row["family"] == "splus":
            assert abs(row["extra_edge_residual"]) <= 1e-6


def test_extremal_records_invalid_splus():
    rep = verify_extremal_families(1, [(1001, 3)])
    assert not rep.passed
    assert "does not divide" in rep.failures[0]["error"]


def test_summary_json_keys():
    summ = CensusSummary(1, 1e-10)
    doc = summ.to_json()
    assert set(doc["violations"]) == set(PREDICATES[:6])
