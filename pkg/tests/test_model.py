from __future__ import annotations

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dsirup.errors import NotADitreeError, ParseError
from dsirup.homs import backtracking_hom
from dsirup.model import (
    core_ditree,
    is_quasi_symmetric,
    parse,
    serialize,
    shape,
    solitary_pairs,
    TreeIndex,
)

from .conftest import load, random_ditree


def test_parse_basic():
    g = parse("T(a). R(a,b). F(b).")
    assert g.nodes == {"a", "b"}
    assert g.labels("a") == {"T"}
    assert g.labels("b") == {"F"}
    assert g.edges == {("a", "b", "R")}


def test_parse_q2_is_three_node_path():
    g = load("q2.cq")
    assert len(g.nodes) == 3
    rep = shape(g)
    assert rep.is_path
    assert rep.solitary_t == ("u", "v")
    assert rep.solitary_f == ("w",)


def test_parse_empty():
    g = parse("")
    assert not g.nodes and not g.edges


def test_parse_errors():
    with pytest.raises(ParseError) as err:
        parse("T(a)")
    assert err.value.line == 1
    with pytest.raises(ParseError):
        parse("T(a). \nR(a,b). T(b,c).")  # arity conflict for T
    with pytest.raises(ParseError):
        parse("T(a . b).")


def test_unknown_unary_preserved():
    g = parse("Animal(a). R(a,b).")
    assert g.labels("a") == {"Animal"}


def test_serialize_sorted_and_stable():
    g = parse("R(a,b). T(a). F(b). S(a,b).")
    text = serialize(g)
    assert text == "F(b).\nT(a).\nR(a,b).\nS(a,b).\n"
    assert serialize(parse(text)) == text


@settings(max_examples=60, deadline=None)
@given(st.integers(min_value=0, max_value=10**9))
def test_parse_serialize_roundtrip_random(seed):
    rng = random.Random(seed)
    g = random_ditree(rng, max_nodes=6, labels=("T", "F", "FT", None, "A"))
    if len(g.nodes) == 1 and not g.unary:
        g = g.relabel({next(iter(g.nodes)): {"T"}})  # atom-free nodes are not expressible
    g2 = parse(serialize(g))
    assert g2.nodes == g.nodes
    assert g2.edges == g.edges
    assert {n: g2.labels(n) for n in g2.nodes} == {n: g.labels(n) for n in g.nodes}


def test_shape_q4():
    rep = shape(load("q4.cq"))
    assert rep.is_ditree and not rep.is_path
    assert rep.root == "y"
    assert rep.solitary_f == ("x",)
    assert rep.solitary_t == ("z",)
    assert rep.ft_twins == ()
    assert rep.is_1cq
    assert rep.lambda_span == 1


def test_shape_q6():
    rep = shape(load("q6.cq"))
    assert rep.is_ditree
    assert len(rep.solitary_f) == 1
    assert rep.solitary_t == ("t0", "t1")
    assert rep.ft_twins == ("w",)
    assert rep.lambda_span == 2


def test_shape_single_f_node():
    rep = shape(parse("F(a)."))
    assert rep.is_ditree and rep.is_1cq and rep.lambda_span == 0


def test_shape_cycle_not_tree():
    rep = shape(parse("R(a,b). R(b,a)."))
    assert not rep.is_dag and not rep.is_ditree
    assert rep.root is None


def test_shape_comparable_t_has_no_span():
    rep = shape(load("q3.cq"))  # T above F on the same path
    assert rep.is_ditree and rep.is_1cq
    assert rep.lambda_span is None


def test_tree_index_distances():
    g = load("q5.cq")
    idx = TreeIndex(g)
    assert idx.root == "d"
    assert idx.delta("d", "a") == 3
    assert idx.distance("c", "f") == 3
    assert idx.inf("c", "f") == "d"
    # tree-order arithmetic: distance through the meet
    for x in g.nodes:
        for y in g.nodes:
            m = idx.inf(x, y)
            assert idx.distance(x, y) == idx.delta(m, x) + idx.delta(m, y)
            if idx.leq(x, y):
                assert idx.distance(x, y) == idx.delta(x, y)


def test_solitary_pairs_q3_comparable():
    pairs = solitary_pairs(load("q3.cq"))
    assert any(p.comparable for p in pairs)


def test_solitary_pairs_q4_symmetric():
    pairs = solitary_pairs(load("q4.cq"))
    assert len(pairs) == 1
    p = pairs[0]
    assert not p.comparable and p.symmetric and p.distance == 2


def test_solitary_pairs_q5_not_symmetric():
    g = load("q5.cq")
    idx = TreeIndex(g)
    pairs = solitary_pairs(g)
    assert len(pairs) == 1
    p = pairs[0]
    assert not p.comparable
    assert idx.delta("d", p.t) == 1 and idx.delta("d", p.f) == 2
    assert not p.symmetric


def test_solitary_pairs_rejects_non_ditree():
    with pytest.raises(NotADitreeError):
        solitary_pairs(parse("R(a,b). R(b,a). T(a). F(b)."))


def test_quasi_symmetric():
    assert is_quasi_symmetric(load("q4.cq"))
    assert not is_quasi_symmetric(load("q3.cq"))
    assert not is_quasi_symmetric(load("q5.cq"))


def test_core_minimal_q4():
    core, minimal = core_ditree(load("q4.cq"))
    assert minimal
    assert core.nodes == load("q4.cq").nodes


def test_core_duplicated_branch():
    # q4 with a duplicated leaf branch folds back onto q4
    g = parse("T(z). F(x). R(y,z). R(y,x). R(y,z2). T(z2).")
    core, minimal = core_ditree(g)
    assert not minimal
    assert len(core.nodes) == 3
    # homomorphically equivalent in both directions
    assert backtracking_hom(g, core) is not None
    assert backtracking_hom(core, g) is not None


def test_core_single_node():
    g = parse("F(a).")
    core, minimal = core_ditree(g)
    assert minimal and core.nodes == {"a"}


def _brute_core_size(g) -> int:
    """Smallest node subset whose induced sub-CQ admits a hom from g."""
    import itertools

    nodes = sorted(g.nodes)
    for size in range(1, len(nodes) + 1):
        for keep in itertools.combinations(nodes, size):
            sub = g.induced(keep)
            if backtracking_hom(g, sub) is not None:
                return size
    raise AssertionError("unreachable")


def test_core_matches_bruteforce_on_random_trees(rng):
    for _ in range(40):
        g = random_ditree(rng, max_nodes=7, labels=("T", "F", "FT", None))
        core, _ = core_ditree(g)
        assert len(core.nodes) == _brute_core_size(g)
        # equivalence and idempotence
        assert backtracking_hom(g, core) is not None
        assert backtracking_hom(core, g) is not None
        core2, minimal2 = core_ditree(core)
        assert minimal2 and core2.nodes == core.nodes
