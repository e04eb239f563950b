from __future__ import annotations

import json
import random
from fractions import Fraction

import pytest

from atsp_approx.errors import BudgetError, InfeasibleInstanceError, InputError
from atsp_approx.graph import Digraph
from atsp_approx.harness import (
    gen_instance,
    held_karp_opt,
    instance_to_json,
    parse_instance,
    run_pipeline,
    verify_tour,
)
from fixtures import c3, k2, two_tri, multiset

F = Fraction


def test_parse_json_c3():
    doc = {"name": "c3", "n": 3,
           "edges": [[0, 1, "1"], [1, 2, 1], [2, 0, "1"]]}
    name, g = parse_instance(json.dumps(doc))
    assert name == "c3" and g.n == 3 and g.m == 3
    assert all(e.cost == 1 for e in g.edges)


def test_parse_json_rational_strings():
    doc = {"n": 2, "edges": [[0, 1, "1/3"], [1, 0, "0.75"]]}
    _, g = parse_instance(json.dumps(doc))
    assert g.edges[0].cost == F(1, 3)
    assert g.edges[1].cost == F(3, 4)


def test_parse_json_errors():
    with pytest.raises(InputError):
        parse_instance('{"n": 2}')
    with pytest.raises(InputError):
        parse_instance(json.dumps({"n": 2, "edges": [[0, 1, "-1"], [1, 0, "1"]]}))
    with pytest.raises(InfeasibleInstanceError):
        parse_instance(json.dumps({"n": 3, "edges": [[0, 1, "1"], [1, 0, "1"]]}))


def test_parse_tsplib_k2():
    text = """NAME: tiny
TYPE: ATSP
DIMENSION: 2
EDGE_WEIGHT_TYPE: EXPLICIT
EDGE_WEIGHT_FORMAT: FULL_MATRIX
EDGE_WEIGHT_SECTION
0 1
1 0
EOF
"""
    name, g = parse_instance(text)
    assert name == "tiny" and g.n == 2
    assert sorted((e.tail, e.head) for e in g.edges) == [(0, 1), (1, 0)]


def test_parse_tsplib_requires_atsp():
    text = "TYPE: TSP\nDIMENSION: 2\nEDGE_WEIGHT_FORMAT: FULL_MATRIX\nEDGE_WEIGHT_SECTION\n0 1 1 0\nEOF"
    with pytest.raises(InputError):
        parse_instance(text)


def test_instance_json_roundtrip():
    g = two_tri()
    name, parsed = parse_instance(instance_to_json("t", g))
    assert parsed.n == g.n and parsed.m == g.m
    for a, b in zip(g.edges, parsed.edges):
        assert (a.tail, a.head, a.cost) == (b.tail, b.head, b.cost)


def test_gen_cycle_is_c3():
    g = gen_instance("cycle", 3, 0)
    assert [(e.tail, e.head, e.cost) for e in g.edges] == \
        [(e.tail, e.head, e.cost) for e in c3().edges]


def test_gen_two_cluster_is_two_tri():
    g = gen_instance("two-cluster", 6, 0)
    expected = two_tri()
    assert sorted((e.tail, e.head, e.cost) for e in g.edges) == \
        sorted((e.tail, e.head, e.cost) for e in expected.edges)


def test_gen_random_strong_deterministic():
    a = gen_instance("random-strong", 10, 7)
    b = gen_instance("random-strong", 10, 7)
    assert [(e.tail, e.head, e.cost) for e in a.edges] == \
        [(e.tail, e.head, e.cost) for e in b.edges]
    assert a.is_strongly_connected()


def test_gen_unit_digraph_all_unit():
    g = gen_instance("unit-digraph", 9, 3)
    assert all(e.cost == 1 for e in g.edges)
    assert g.is_strongly_connected()


def test_held_karp_fixtures():
    assert held_karp_opt(c3()) == 3
    assert held_karp_opt(k2()) == 2
    assert held_karp_opt(two_tri()) == 16


def test_held_karp_revisits_beat_hamiltonian():
    # going back and forth through the hub is optimal: 1-0-2-0-1 style walk
    g = Digraph(3, [
        (0, 1, F(1)), (1, 0, F(1)), (0, 2, F(1)), (2, 0, F(1)),
        (1, 2, F(10)), (2, 1, F(10)),
    ])
    assert held_karp_opt(g) == 4


def test_held_karp_budget():
    g = gen_instance("cycle", 19, 0)
    with pytest.raises(BudgetError):
        held_karp_opt(g)


def test_held_karp_matches_brute_force_walks():
    # brute-force oracle: Hamiltonian cycles over the metric closure
    import itertools

    rng = random.Random(41)
    for _ in range(10):
        n = rng.randint(2, 6)
        g = gen_instance("random-strong", n, rng.randint(0, 99))
        dist = [[None] * n for _ in range(n)]
        for v in range(n):
            dist[v][v] = F(0)
        for e in g.edges:
            if dist[e.tail][e.head] is None or e.cost < dist[e.tail][e.head]:
                dist[e.tail][e.head] = e.cost
        for mid in range(n):
            for a in range(n):
                for b in range(n):
                    if dist[a][mid] is not None and dist[mid][b] is not None:
                        cand = dist[a][mid] + dist[mid][b]
                        if dist[a][b] is None or cand < dist[a][b]:
                            dist[a][b] = cand
        best = None
        for perm in itertools.permutations(range(1, n)):
            order = (0,) + perm
            total = sum(dist[order[i]][order[(i + 1) % n]] for i in range(n))
            if best is None or total < best:
                best = total
        assert held_karp_opt(g) == best


def test_verify_tour_cases():
    g = c3()
    ok, diag = verify_tour(g, multiset([(0, 1), (1, 1), (2, 1)]))
    assert ok and diag["walk"] == [[0, 1], [1, 2], [2, 0]]
    ok, diag = verify_tour(g, multiset([(0, 1), (1, 1)]))
    assert not ok and not diag["eulerian"]
    g2 = two_tri()
    ok, diag = verify_tour(g2, multiset([(i, 1) for i in range(6)]))
    assert not ok and diag["eulerian"] and not diag["connected_spanning"]


def test_run_pipeline_c3():
    report = run_pipeline("c3", c3(), F(1), with_oracle=True)
    assert report.ratio == 1
    assert report.held_karp == 3
    assert report.lp_value == 3
    doc = report.to_dict()
    assert doc["ratio"] == "1"
    assert doc["held_karp_opt"] == "3"


def test_run_pipeline_sandwich_random():
    g = gen_instance("random-strong", 8, 5)
    report = run_pipeline("r8", g, F(1), with_oracle=True)
    assert report.lp_value <= report.held_karp <= report.tour_cost
    assert report.tour_cost <= 23 * report.lp_value


def test_run_pipeline_deterministic_report():
    g = gen_instance("two-cluster", 7, 0)
    a = run_pipeline("x", g, F(1), with_oracle=True).to_dict()
    b = run_pipeline("x", g, F(1), with_oracle=True).to_dict()
    a.pop("timings")
    b.pop("timings")
    assert a == b


def test_run_pipeline_single_vertex():
    report = run_pipeline("unit", Digraph(1, []), F(1), with_oracle=True)
    assert report.tour_cost == 0 and report.ratio == 1
    assert report.tour_walk == []
