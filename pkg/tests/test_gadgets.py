from __future__ import annotations

import pytest

from dsirup.errors import ShapeViolationError
from dsirup.expansion import as_cactus, bud, cactuses_up_to
from dsirup.gadgets import (
    AndGate,
    Formula,
    InputTuple,
    Leaf,
    NotGate,
    build_query,
    expected_triggered,
    frame_compatible,
    gen_good,
    gen_mustbranch,
    good_oracle,
    mustbranch_oracle,
    or_gate,
    skeleton_downpaths,
    skeleton_uppath,
    triggered,
)
from dsirup.model import shape


F_NOT = Formula(root=NotGate(Leaf(1)), n_vars=1, input_types=(InputTuple("down", 1),), name="not1")
F_UP = Formula(root=NotGate(NotGate(Leaf(1))), n_vars=1, input_types=(InputTuple("up", 1),), name="up1")
F_MIX = Formula(
    root=AndGate(Leaf(1), NotGate(Leaf(2))),
    n_vars=2,
    input_types=(InputTuple("up", 1), InputTuple("down", 1)),
    name="mix",
)
F_OR2 = Formula(
    root=or_gate(Leaf(1), Leaf(2)), n_vars=2, input_types=(InputTuple("down", 2),), name="or2"
)


def test_formula_evaluate():
    assert F_NOT.evaluate([0]) == 1 and F_NOT.evaluate([1]) == 0
    assert F_MIX.evaluate([1, 0]) == 1
    assert F_MIX.evaluate([1, 1]) == 0
    assert F_OR2.evaluate([0, 0]) == 0
    assert F_OR2.evaluate([0, 1]) == 1


def test_formula_validation():
    with pytest.raises(ShapeViolationError):
        Formula(root=Leaf(1), n_vars=1, input_types=(InputTuple("up", 1),))
    with pytest.raises(ShapeViolationError):
        Formula(root=NotGate(Leaf(1)), n_vars=2, input_types=(InputTuple("up", 1),))


def test_gen_good_examples():
    f = gen_good(1)
    assert f.n_vars == 15
    assert f.evaluate([1] * 15) == 1
    # a word containing the reversed marker evaluates to 0
    word = [1] * 15
    word[3:7] = [0, 1, 0, 0]
    assert f.evaluate(word) == 0


def test_gen_good_against_scan(rng):
    f = gen_good(1)
    for _ in range(1000):
        bits = [rng.randint(0, 1) for _ in range(f.n_vars)]
        assert f.evaluate(bits) == good_oracle(bits)


def test_gen_mustbranch_4():
    f = gen_mustbranch(4)
    assert f.evaluate([0, 1, 0, 0]) == 1  # reverse of the 4-long marker 0,0,1,0
    assert f.evaluate([1, 1, 1, 1]) == 0
    for i in range(16):
        bits = [(i >> j) & 1 for j in range(4)]
        assert f.evaluate(bits) == mustbranch_oracle(bits)


def test_gen_mustbranch_exhaustive_small():
    for k in (4, 7, 8):
        f = gen_mustbranch(k)
        for i in range(1 << k):
            bits = [(i >> j) & 1 for j in range(k)]
            assert f.evaluate(bits) == mustbranch_oracle(bits), (k, bits)


def test_gen_mustbranch_range():
    with pytest.raises(ValueError):
        gen_mustbranch(3)


def test_build_query_shape():
    gq = build_query([(F_NOT, "AA")])
    rep = shape(gq.graph)
    assert rep.is_dag and not rep.is_ditree
    assert len(rep.solitary_f) == 1
    assert len(rep.solitary_t) == 2
    # structural focusedness: F has successors, FT-twins have none
    assert gq.graph.successors(gq.base["F"])
    for n in rep.ft_twins:
        assert not gq.graph.successors(n)


def test_query_size_linear_in_gates(rng):
    sizes = []
    for gates in (1, 2, 4, 8):
        g = NotGate(Leaf(1))
        for _ in range(gates - 1):
            g = NotGate(g)
        f = Formula(root=g, n_vars=1, input_types=(InputTuple("down", 1),))
        gq = build_query([(f, "AA")])
        sizes.append((gates, len(gq.graph.nodes)))
    deltas = [b[1] - a[1] for a, b in zip(sizes, sizes[1:])]
    per_gate = [d / (b[0] - a[0]) for d, (a, b) in zip(deltas, zip(sizes, sizes[1:]))]
    assert max(per_gate) <= 2 * min(per_gate)  # linear growth, stable slope


def test_triggered_leaf_is_error():
    gq = build_query([(F_NOT, "AA")])
    c = as_cactus(gq.graph)
    c = bud(c, c.buddable()[0][2])
    leaf = 1
    with pytest.raises(ShapeViolationError):
        triggered(gq, c, leaf, 0)
    with pytest.raises(ShapeViolationError):
        triggered(gq, c, 0, 5)


def test_gather_helpers():
    gq = build_query([(F_NOT, "AA")])
    c = as_cactus(gq.graph)
    t0_node = c.skeleton.segments[0].node_map[gq.base["t0"]]
    c = bud(c, t0_node)
    t1_node = c.skeleton.segments[1].node_map[gq.base["t1"]]
    c = bud(c, t1_node)
    assert skeleton_uppath(c, 1, 1) == (0,)
    assert skeleton_uppath(c, 2, 2) == (1, 0)
    assert skeleton_uppath(c, 2, 3) is None
    assert skeleton_downpaths(c, 0, 2) == [(0, 1)]


def _verify_biconditional(gq, depth=2, cap=30):
    mismatches = []
    for c in cactuses_up_to(gq.graph, depth, cap=cap).cactuses:
        for seg in c.skeleton.segments:
            if not c.skeleton.children(seg.index):
                continue
            for gi in range(len(gq.gadgets)):
                got = triggered(gq, c, seg.index, gi)
                if seg.parent is None:
                    if got:
                        mismatches.append(("root", seg.index, gi))
                    continue
                want = expected_triggered(gq, c, seg.index, gi)
                if got != want:
                    mismatches.append((tuple(seg.budded), got, want, gi))
    return mismatches


@pytest.mark.parametrize(
    "formula,frame",
    [
        (F_NOT, "AA"),
        (F_UP, "AA"),
        (F_MIX, "AA"),
        (F_OR2, "AA"),
        (gen_mustbranch(4), "AT"),
        (gen_mustbranch(4), "TA"),
    ],
    ids=["not1", "up1", "mix", "or2", "mb4-AT", "mb4-TA"],
)
def test_claim_triggering_biconditional(formula, frame):
    gq = build_query([(formula, frame)])
    assert _verify_biconditional(gq) == []


def test_frame_discipline():
    # a type-AT gadget triggers only at segments of the AT form
    f_taut = Formula(
        root=or_gate(Leaf(1), NotGate(Leaf(1))),
        n_vars=1,
        input_types=(InputTuple("down", 1),),
        name="taut",
    )
    gq = build_query([(f_taut, "AT")])
    seen_at = False
    for c in cactuses_up_to(gq.graph, 2, cap=30).cactuses:
        for seg in c.skeleton.segments:
            if not c.skeleton.children(seg.index) or seg.parent is None:
                continue
            got = triggered(gq, c, seg.index, 0)
            if got:
                assert frame_compatible("AT", c, seg.index)
                assert tuple(seg.budded) == (1,)
                seen_at = True
            if tuple(seg.budded) == (2,):
                assert not got
    assert seen_at


def test_mustbranch_fires_on_deep_marker_path():
    """A depth-5 chain whose fourth segment sees the marker uppath triggers the
    matching typed gadget; flipping one bud breaks it."""
    mb4 = gen_mustbranch(4)
    gq = build_query([(mb4, "AT")])

    def chain(labels):
        c = as_cactus(gq.graph)
        seg = 0
        for lbl in labels:
            qnode = gq.base["t0"] if lbl == 0 else gq.base["t1"]
            c = bud(c, c.skeleton.segments[seg].node_map[qnode])
            seg = len(c.skeleton.segments) - 1
        return c

    # uppath of the depth-4 segment, nearest first: (0, 1, 0, 0) => marker
    good = chain([0, 0, 1, 0, 0])
    assert expected_triggered(gq, good, 4, 0)
    assert triggered(gq, good, 4, 0)
    # flip the third bud: uppath (0, 0, 0, 0) fails the formula
    bad = chain([0, 0, 0, 0, 0])
    assert not expected_triggered(gq, bad, 4, 0)
    assert not triggered(gq, bad, 4, 0)


def test_two_gadget_query():
    gq = build_query([(F_NOT, "AA"), (F_UP, "AA")])
    rep = shape(gq.graph)
    assert len(rep.solitary_f) == 1 and len(rep.solitary_t) == 2
    assert len(rep.ft_twins) == 2
    assert _verify_biconditional(gq, depth=1, cap=10) == []
