from __future__ import annotations

import itertools
import random

import pytest

from dsirup.errors import BudgetExceededError, NotADitreeError
from dsirup.homs import (
    backtracking_hom,
    check_focused,
    compose,
    ditree_hom,
    hom_exists,
    verify_hom,
)
from dsirup.model import LabelledGraph, parse

from .conftest import load, random_ditree, random_graph


def test_identity_hom():
    g = load("q4.cq")
    h = hom_exists(g, g)
    assert h is not None and verify_hom(g, g, h.mapping)


def test_q2_into_d2():
    h = hom_exists(load("q2.cq"), load("d2.data"))
    assert h is None  # d2's A-nodes carry no T labels yet
    d2 = load("d2.data")
    d2 = d2.relabel({"a": {"A", "T"}, "b": {"A", "T"}})
    h = hom_exists(load("q2.cq"), d2)
    assert h is not None


def test_q4_into_single_edge_none():
    target = parse("T(a). F(b). R(a,b).")
    assert hom_exists(load("q4.cq"), target) is None


def test_path_embedding():
    src = parse("T(a). F(b). R(a,b).")
    tgt = parse("T(a). T(b). F(c). R(a,b). R(b,c).")
    assert hom_exists(src, tgt) is not None


def test_no_edges_in_target():
    src = parse("F(a). T(b). R(a,b).")
    tgt = parse("F(c). T(c).")
    assert hom_exists(src, tgt) is None


def test_anchor_constraint():
    src = parse("T(a). R(a,b).")
    tgt = parse("T(x). T(y). R(x,u). R(y,v).")
    h = hom_exists(src, tgt, anchor={"a": "y"})
    assert h is not None and h.mapping["a"] == "y"
    assert hom_exists(src, tgt, anchor={"a": "u"}) is None


def test_anchored_monotone(rng):
    # adding anchor pairs never turns "no hom" into "hom"
    for _ in range(60):
        src = random_ditree(rng, max_nodes=4)
        tgt = random_graph(rng, max_nodes=5)
        free = hom_exists(src, tgt)
        n = sorted(src.nodes)[0]
        for c in sorted(tgt.nodes):
            anchored = hom_exists(src, tgt, anchor={n: c})
            if anchored is not None:
                assert free is not None


def test_composition(rng):
    for _ in range(40):
        a = random_ditree(rng, max_nodes=4)
        b = random_graph(rng, max_nodes=5)
        c = random_graph(rng, max_nodes=5)
        h1 = hom_exists(a, b)
        if h1 is None:
            continue
        h2 = backtracking_hom(b, c)
        if h2 is None:
            continue
        comp = compose(h1, h2)
        assert verify_hom(a, c, comp.mapping)


def _all_maps_hom(src: LabelledGraph, tgt: LabelledGraph) -> bool:
    nodes = sorted(src.nodes)
    for images in itertools.product(sorted(tgt.nodes), repeat=len(nodes)):
        if verify_hom(src, tgt, dict(zip(nodes, images))):
            return True
    return False


def _enumerate_small_ditrees(max_nodes: int):
    """Deterministic family: all rooted tree shapes up to max_nodes with a few
    label patterns."""
    shapes_by_size = {1: [[]]}  # shape: list of parent indices for nodes 1..n-1
    for n in range(2, max_nodes + 1):
        shapes = []
        for smaller in shapes_by_size[n - 1]:
            for parent in range(n - 1):
                cand = smaller + [parent]
                shapes.append(cand)
        # dedupe by canonical code
        seen = {}
        for cand in shapes:
            children = {i: [] for i in range(n)}
            for i, p in enumerate(cand, start=1):
                children[p].append(i)

            def code(i):
                return "(" + "".join(sorted(code(c) for c in children[i])) + ")"

            seen.setdefault(code(0), cand)
        shapes_by_size[n] = list(seen.values())

    label_patterns = [
        {},
        {0: {"F"}},
        {0: {"T"}},
    ]
    for n, shapes in shapes_by_size.items():
        for parents in shapes:
            extra = {n - 1: {"T"}} if n > 1 else {}
            for base in label_patterns:
                unary = dict(base)
                unary.update(extra)
                edges = [(f"n{p}", f"n{i}", "R") for i, p in enumerate(parents, start=1)]
                yield LabelledGraph.build(
                    nodes=[f"n{i}" for i in range(n)],
                    unary={f"n{i}": ls for i, ls in unary.items()},
                    edges=edges,
                )


def test_ditree_vs_backtracking_exhaustive_small():
    # every ditree shape up to 6 nodes against a pool of small targets
    rng = random.Random(7)
    targets = [random_graph(rng, max_nodes=6) for _ in range(6)]
    count = 0
    for src in _enumerate_small_ditrees(6):
        for tgt in targets:
            a = ditree_hom(src, tgt)
            b = backtracking_hom(src, tgt)
            assert (a is None) == (b is None)
            if a is not None:
                assert verify_hom(src, tgt, a.mapping)
                assert verify_hom(src, tgt, b.mapping)
            count += 1
    assert count > 200


def test_ditree_vs_backtracking_random_pairs(rng):
    for _ in range(200):
        src = random_ditree(rng, max_nodes=8)
        tgt = random_graph(rng, max_nodes=8)
        a = ditree_hom(src, tgt)
        b = backtracking_hom(src, tgt)
        assert (a is None) == (b is None)


def test_backtracking_vs_bruteforce(rng):
    for _ in range(60):
        src = random_ditree(rng, max_nodes=3)
        tgt = random_graph(rng, max_nodes=3)
        assert (backtracking_hom(src, tgt) is not None) == _all_maps_hom(src, tgt)


def test_ditree_hom_rejects_non_tree():
    with pytest.raises(NotADitreeError):
        ditree_hom(parse("R(a,b). R(c,b)."), parse("R(x,y)."))


def test_budget_exceeded_distinct():
    # a hard unsatisfiable instance under a tiny budget raises, not "no"
    src = random_ditree(random.Random(3), max_nodes=8, labels=(None,))
    tgt = random_graph(random.Random(4), max_nodes=8, labels=(None,), edge_prob=0.6)
    try:
        backtracking_hom(src, tgt, budget=1)
    except BudgetExceededError:
        pass  # acceptable; otherwise it finished within budget, also fine


def test_multi_predicate_parallel_edges():
    src = parse("R(a,b). S(a,b).")
    tgt_good = parse("R(x,y). S(x,y).")
    tgt_bad = parse("R(x,y). S(x,z).")
    assert hom_exists(src, tgt_good) is not None
    assert hom_exists(src, tgt_bad) is None


def test_check_focused_q5_holds():
    report = check_focused(load("q5.cq"), depth=2)
    assert report.holds_up_to_depth


def test_check_focused_q6_counterexample():
    report = check_focused(load("q6.cq"), depth=2)
    assert not report.holds_up_to_depth
    c, c2, h = report.counterexample
    image = h.mapping[c.root_focus]
    labels = c2.graph.labels(image)
    assert {"F", "T"} <= labels  # the root-focus lands on an FT-node


def test_check_focused_span_zero_vacuous():
    report = check_focused(parse("F(a). R(a,b)."), depth=3)
    assert report.holds_up_to_depth


def test_witness_serialization_golden():
    src = parse("T(a). F(b). R(a,b).")
    tgt = parse("T(x). F(y). R(x,y).")
    h = hom_exists(src, tgt)
    assert h.serialize() == "a=x\nb=y\n"
