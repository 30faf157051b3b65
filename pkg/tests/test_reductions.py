from __future__ import annotations

import random

import pytest

from dsirup.classifier import nl_hardness
from dsirup.datalog import certain_answer_delta
from dsirup.errors import PairIneligibleError
from dsirup.expansion import QuerySignature
from dsirup.fo_dichotomy import decide_fo, enumerate_periodic_structures, type_graph
from dsirup.model import parse, solitary_pairs
from dsirup.reductions import (
    GraphInstance,
    blowup_reduction,
    dag_reduction,
    undirected_reduction,
)

from .conftest import load


def _random_dag(rng: random.Random, max_nodes: int = 5, max_edges: int = 8) -> GraphInstance:
    n = rng.randint(2, max_nodes)
    vertices = [f"g{i}" for i in range(n)]
    edges = set()
    for _ in range(rng.randint(1, max_edges)):
        i, j = sorted(rng.sample(range(n), 2))
        edges.add((vertices[i], vertices[j]))  # increasing indices keep it acyclic
    s, t = rng.sample(vertices, 2)  # distinct endpoints, as in the reduction
    return GraphInstance(tuple(vertices), tuple(sorted(edges)), s, t, directed=True)


def _random_undirected(rng: random.Random, max_nodes: int = 5, max_edges: int = 7) -> GraphInstance:
    n = rng.randint(2, max_nodes)
    vertices = [f"g{i}" for i in range(n)]
    edges = set()
    for _ in range(rng.randint(0, max_edges)):
        i, j = rng.sample(range(n), 2)
        edges.add(tuple(sorted((vertices[i], vertices[j]))))
    s, t = rng.sample(vertices, 2)
    return GraphInstance(tuple(vertices), tuple(sorted(edges)), s, t, directed=False)


def test_dag_reduction_single_edge():
    q = load("q4.cq")
    pair = solitary_pairs(q)[0]
    g = GraphInstance(("s", "t"), (("s", "t"),), "s", "t", directed=True)
    data = dag_reduction(q, pair, g)
    assert "T" in data.labels("s") and "F" in data.labels("t")
    assert certain_answer_delta(q, data) is True


def test_dag_reduction_disconnected():
    q = load("q4.cq")
    pair = solitary_pairs(q)[0]
    g = GraphInstance(
        ("s", "a", "t", "b"), (("s", "a"), ("t", "b")), "s", "t", directed=True
    )
    assert certain_answer_delta(q, dag_reduction(q, pair, g)) is False


def test_dag_reduction_ineligible_pair():
    # q2's (u, w) pair has the solitary T-node v strictly between
    q = load("q2.cq")
    bad = [p for p in solitary_pairs(q) if (p.t, p.f) == ("u", "w")][0]
    with pytest.raises(PairIneligibleError):
        dag_reduction(q, bad, GraphInstance(("s", "t"), (("s", "t"),), "s", "t"))


def test_dag_reduction_reachability_q3(rng):
    q = load("q3.cq")
    pair = [p for p in solitary_pairs(q) if (p.t, p.f) == ("v", "w")][0]
    for i in range(20):
        g = _random_dag(rng)
        data = dag_reduction(q, pair, g)
        assert certain_answer_delta(q, data) == g.reachable(), (i, g)


def test_dag_reduction_reachability_other_witnesses(rng):
    # every fixture with a hardness witness powers the same reduction
    for name in ("q2.cq",):
        q = load(name)
        witness = nl_hardness(q)
        assert witness is not None
        for i in range(20):
            g = _random_dag(rng)
            data = dag_reduction(q, witness.pair, g)
            assert certain_answer_delta(q, data) == g.reachable(), (name, i, g)
    asym = parse("T(z). F(x). R(y,z). R(y,m). R(m,x).")
    witness = nl_hardness(asym)
    assert witness is not None and witness.rationale == "asymmetric"
    for i in range(20):
        g = _random_dag(rng)
        data = dag_reduction(asym, witness.pair, g)
        assert certain_answer_delta(asym, data) == g.reachable(), ("asym", i, g)


def test_dag_reduction_wellformed(rng):
    q = load("q3.cq")
    pair = [p for p in solitary_pairs(q) if (p.t, p.f) == ("v", "w")][0]
    data = dag_reduction(q, pair, _random_dag(rng))
    allowed_unary = {"T", "F", "A"}
    for n in data.nodes:
        assert data.labels(n) <= allowed_unary
    assert data.binary_predicates() <= q.binary_predicates()


def test_undirected_reduction_single_edge():
    q = load("q4.cq")
    g = GraphInstance(("s", "t"), (("s", "t"),), "s", "t", directed=False)
    assert certain_answer_delta(q, undirected_reduction(q, g)) is True


def test_undirected_reduction_two_components():
    q = load("q4.cq")
    g = GraphInstance(
        ("s", "a", "t", "b"), (("s", "a"), ("t", "b")), "s", "t", directed=False
    )
    assert certain_answer_delta(q, undirected_reduction(q, g)) is False


def test_undirected_reduction_connectivity_q4(rng):
    q = load("q4.cq")
    for i in range(20):
        g = _random_undirected(rng)
        data = undirected_reduction(q, g)
        assert certain_answer_delta(q, data) == g.reachable(), (i, g)


def _k1_witness(qname: str):
    q = load(f"{qname}.cq")
    return q, enumerate_periodic_structures(QuerySignature.of(q), type_graph(1))[0]


def test_blowup_reduction_precondition():
    q, ps = _k1_witness("q5")  # q5's structure satisfies h1: ineligible
    g = GraphInstance(("s", "t"), (("s", "t"),), "s", "t", directed=False)
    with pytest.raises(PairIneligibleError):
        blowup_reduction(ps, q, g)


def test_blowup_reduction_single_edge():
    q, ps = _k1_witness("q4")
    g = GraphInstance(("s", "t"), (("s", "t"),), "s", "t", directed=False)
    data = blowup_reduction(ps, q, g)
    assert certain_answer_delta(q, data) is True


def test_blowup_reduction_disconnected():
    q, ps = _k1_witness("q4")
    g = GraphInstance(("s", "t"), (), "s", "t", directed=False)
    data = blowup_reduction(ps, q, g)
    assert certain_answer_delta(q, data) is False


def test_blowup_reduction_self_reach():
    q, ps = _k1_witness("q4")
    g = GraphInstance(("s",), (), "s", "s", directed=False)
    data = blowup_reduction(ps, q, g)
    assert certain_answer_delta(q, data) is True


def test_blowup_reduction_connectivity(rng):
    q, ps = _k1_witness("q4")
    for i in range(20):
        g = _random_undirected(rng, max_nodes=6, max_edges=7)
        data = blowup_reduction(ps, q, g)
        if len(data.nodes_with_label("A")) > 18:
            continue
        assert certain_answer_delta(q, data) == g.reachable(), (i, g)


def test_blowup_reduction_for_lhard_verdict_witness(rng):
    # the witness materialised by the decision procedure powers the reduction
    q = load("q4.cq")
    verdict = decide_fo(q)
    assert not verdict.fo
    for i in range(10):
        g = _random_undirected(rng, max_nodes=5, max_edges=6)
        data = blowup_reduction(verdict.witness, q, g)
        assert certain_answer_delta(q, data) == g.reachable(), (i, g)
