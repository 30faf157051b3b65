"""Boolean-formula-to-CQ gadget compiler with triggering verification.

A gadget query is a dag-shaped 1-CQ with one solitary F, two solitary T-nodes
and one FT-twin per gadget. Each gadget wires a Boolean formula (an AND/NOT
gate tree over variables read off skeleton paths) to the base block through a
frame of type AT, TA or AA; its input block forces the formula's value to 1
whenever an anchored homomorphism of the defocused query maps the gadget's
iota-node onto a segment's alpha-node ("triggering").

Node-label shorthands from the construction (W, U, B_i, B_ij, E, D) desugar
to same-named binary edges into fresh sink nodes.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Dict, Iterator, List, Mapping, Optional, Sequence, Set, Tuple, Union

from .errors import ShapeViolationError
from .expansion import Cactus
from .homs import backtracking_hom
from .model import LabelledGraph, shape

# --- formulas -------------------------------------------------------------------


@dataclass(frozen=True)
class Leaf:
    var: int  # 1-based


@dataclass(frozen=True)
class NotGate:
    child: "Gate"


@dataclass(frozen=True)
class AndGate:
    left: "Gate"
    right: "Gate"


Gate = Union[Leaf, NotGate, AndGate]


def or_gate(a: Gate, b: Gate) -> Gate:
    """OR desugars into the AND/NOT gate set before compilation."""
    return NotGate(AndGate(NotGate(a), NotGate(b)))


@dataclass(frozen=True)
class InputTuple:
    kind: str   # "up" | "down"
    length: int

    def __post_init__(self):
        if self.kind not in ("up", "down"):
            raise ValueError("input tuple kind must be 'up' or 'down'")


@dataclass(frozen=True)
class Formula:
    root: Gate
    n_vars: int
    input_types: Tuple[InputTuple, ...]
    name: str = "formula"

    def __post_init__(self):
        if sum(t.length for t in self.input_types) != self.n_vars:
            raise ShapeViolationError("input tuples must cover the variables exactly")
        if isinstance(self.root, Leaf):
            raise ShapeViolationError(
                "the root must be a gate (wrap a bare variable in two negations)"
            )
        for v in self.variables_used():
            if not 1 <= v <= self.n_vars:
                raise ShapeViolationError(f"variable y{v} out of range")

    def variables_used(self) -> Set[int]:
        out: Set[int] = set()

        def walk(g: Gate):
            if isinstance(g, Leaf):
                out.add(g.var)
            elif isinstance(g, NotGate):
                walk(g.child)
            else:
                walk(g.left)
                walk(g.right)

        walk(self.root)
        return out

    def evaluate(self, bits: Sequence[int]) -> int:
        assert len(bits) == self.n_vars

        def walk(g: Gate) -> int:
            if isinstance(g, Leaf):
                return bits[g.var - 1]
            if isinstance(g, NotGate):
                return 1 - walk(g.child)
            return walk(g.left) & walk(g.right)

        return walk(self.root)

    def tuple_of_var(self, var: int) -> Tuple[int, InputTuple, int]:
        """(tuple index, tuple, 1-based position within the tuple)."""
        offset = 0
        for idx, t in enumerate(self.input_types):
            if var <= offset + t.length:
                return idx, t, var - offset
            offset += t.length
        raise ValueError(var)

    def branches(self) -> List[Tuple[int, int, List[Tuple[str, Gate, int]]]]:
        """(var i, copy j, gates from leaf to root as (gate id, gate, child position))."""
        out: List[Tuple[int, int, List[Tuple[str, Gate, int]]]] = []
        copy_counter: Dict[int, int] = {}

        def walk(g: Gate, gid: str, chain_above: List[Tuple[str, Gate, int]]):
            if isinstance(g, Leaf):
                copy_counter[g.var] = copy_counter.get(g.var, 0) + 1
                out.append((g.var, copy_counter[g.var], list(chain_above)))
            elif isinstance(g, NotGate):
                walk(g.child, gid + "n", [(gid, g, 1)] + chain_above)
            else:
                walk(g.left, gid + "l", [(gid, g, 1)] + chain_above)
                walk(g.right, gid + "r", [(gid, g, 2)] + chain_above)

        walk(self.root, "g", [])
        return out

    def gate_ids(self) -> Dict[str, Gate]:
        out: Dict[str, Gate] = {}

        def walk(g: Gate, gid: str):
            if isinstance(g, Leaf):
                return
            out[gid] = g
            if isinstance(g, NotGate):
                walk(g.child, gid + "n")
            else:
                walk(g.left, gid + "l")
                walk(g.right, gid + "r")

        walk(self.root, "g")
        return out


def gen_good(d: int) -> Formula:
    """True iff a 4d+11-long word does not contain the reverse of the
    marker pattern (any,1,0,0 in some window); read from the uppath."""
    if d < 1:
        raise ValueError("d must be >= 1")
    n = 4 * d + 11
    windows: List[Gate] = []
    # a reversed marker occupies four positions (any, 1, 0, 0); the constrained
    # triple can therefore only start from position 2
    for p in range(2, n - 1):
        windows.append(
            AndGate(Leaf(p), AndGate(NotGate(Leaf(p + 1)), NotGate(Leaf(p + 2))))
        )
    bad: Gate = windows[0]
    for g in windows[1:]:
        bad = or_gate(bad, g)
    return Formula(
        root=NotGate(bad),
        n_vars=n,
        input_types=(InputTuple("up", n),),
        name=f"good_{d}",
    )


def good_oracle(bits: Sequence[int]) -> int:
    for w in range(1, len(bits) - 2):
        if bits[w] == 1 and bits[w + 1] == 0 and bits[w + 2] == 0:
            return 0
    return 1


def _mustbranch_patterns(k: int, d: int) -> List[List[Optional[int]]]:
    """Length-k marker patterns (prefix marker, filler blocks, tail) allowed to
    demand branching; None entries are wildcards."""
    out: List[List[Optional[int]]] = []
    for ell in range(0, d + 1):
        for w in ([], [0, 0, 1], [1, 1, 1]):
            if 4 + 4 * ell + len(w) != k:
                continue
            if not w and ell != 0:
                continue
            if w == [1, 1, 1] and not ell < d - 1:
                continue
            pattern: List[Optional[int]] = [0, 0, 1, None]
            for _ in range(ell):
                pattern += [1, 1, 1, None]
            pattern += w
            out.append(pattern)
    return out


def gen_mustbranch(k: int, d: Optional[int] = None) -> Formula:
    """True iff the k-long uppath is the reverse of a marker-pattern word that
    obliges the node to have both children."""
    if d is None:
        d = max(1, -(-(k - 11) // 4))
    if not 4 <= k <= 4 * d + 11:
        raise ValueError(f"k must be within [4, {4 * d + 11}]")
    patterns = _mustbranch_patterns(k, d)
    if not patterns:
        # lengths that admit no marker decomposition yield the constant-false
        # formula (the gadget can then never trigger)
        return Formula(
            root=AndGate(Leaf(k), NotGate(Leaf(k))),
            n_vars=k,
            input_types=(InputTuple("up", k),),
            name=f"mustbranch_{k}",
        )
    disjuncts: List[Gate] = []
    for pattern in patterns:
        literals: List[Gate] = []
        for pos, val in enumerate(pattern, start=1):
            if val is None:
                continue
            var = k + 1 - pos  # uppath variable i reads the i-th bit above
            literals.append(Leaf(var) if val else NotGate(Leaf(var)))
        conj = literals[0]
        for lit in literals[1:]:
            conj = AndGate(conj, lit)
        disjuncts.append(conj)
    root = disjuncts[0]
    for dd in disjuncts[1:]:
        root = or_gate(root, dd)
    return Formula(
        root=root, n_vars=k, input_types=(InputTuple("up", k),), name=f"mustbranch_{k}"
    )


def mustbranch_oracle(bits: Sequence[int], d: Optional[int] = None) -> int:
    k = len(bits)
    if d is None:
        d = max(1, -(-(k - 11) // 4))
    word = list(reversed(bits))
    for pattern in _mustbranch_patterns(k, d):
        if all(p is None or p == b for p, b in zip(pattern, word)):
            return 1
    return 0


# --- query assembly ---------------------------------------------------------------

FRAMES = ("AT", "TA", "AA")


class _Builder:
    def __init__(self):
        self.unary: Dict[str, Set[str]] = {}
        self.edges: Set[Tuple[str, str, str]] = set()
        self.nodes: Set[str] = set()
        self._sink_counter = 0

    def node(self, name: str) -> str:
        self.nodes.add(name)
        return name

    def edge(self, src: str, tgt: str, pred: str = "R") -> None:
        self.nodes.add(src)
        self.nodes.add(tgt)
        self.edges.add((src, tgt, pred))

    def label_arrow(self, node: str, pred: str) -> None:
        """The node-label shorthand: a same-named arrow to a fresh sink."""
        sink = f"{node}~{pred}"
        self.edge(node, sink, pred)

    def unary_label(self, node: str, label: str) -> None:
        self.nodes.add(node)
        self.unary.setdefault(node, set()).add(label)

    def graph(self) -> LabelledGraph:
        return LabelledGraph.build(nodes=self.nodes, unary=self.unary, edges=self.edges)


@dataclass(frozen=True)
class GadgetInfo:
    index: int
    formula: Formula
    frame: str
    rg: str  # the gadget's private edge predicate


@dataclass(frozen=True)
class GadgetQuery:
    graph: LabelledGraph
    gadgets: Tuple[GadgetInfo, ...]
    base: Mapping[str, str]                 # role -> node (F, xi, alpha, t0, t1, w, xi2, ...)
    frame_nodes: Mapping[int, Mapping[str, str]]  # gadget -> role -> node

    def q_minus_tt(self) -> LabelledGraph:
        focus = self.base["F"]
        return self.graph.relabel({focus: (self.graph.labels(focus) - {"F"}) | {"A"}})


def _emit_gate_gadget(
    b: _Builder, prefix: str, gid: str, gate: Gate, is_root: bool, port: Mapping[Tuple[str, int], str]
) -> str:
    """Internal nodes and edges of one gate gadget; returns its output node."""
    out = f"{prefix}.o.{gid}" if is_root else port[(gid, -1)]
    if isinstance(gate, NotGate):
        i1 = port[(gid, 1)]
        n2 = b.node(f"{prefix}.{gid}.n2")
        n3 = b.node(f"{prefix}.{gid}.n3")
        n4 = b.node(f"{prefix}.{gid}.n4")
        dnode = b.node(f"{prefix}.{gid}.d")
        b.edge(i1, n2)
        b.edge(n2, n3, "S")
        b.edge(i1, n4, "S")
        b.edge(n3, dnode)
        b.edge(dnode, out)
        b.edge(n4, out)
        if is_root:
            b.label_arrow(dnode, "D")
        return out
    assert isinstance(gate, AndGate)
    i1, i2 = port[(gid, 1)], port[(gid, 2)]
    o01 = b.node(f"{prefix}.{gid}.o01")
    o02 = b.node(f"{prefix}.{gid}.o02")
    n22 = b.node(f"{prefix}.{gid}.n22")
    n23 = b.node(f"{prefix}.{gid}.n23")
    bb = b.node(f"{prefix}.{gid}.b")
    c1 = b.node(f"{prefix}.{gid}.c1")
    c2 = b.node(f"{prefix}.{gid}.c2")
    c3 = b.node(f"{prefix}.{gid}.c3")
    dnode = b.node(f"{prefix}.{gid}.d")
    b.edge(i1, bb, "S")
    b.edge(i2, bb, "S")
    b.edge(i2, o01)
    b.edge(i1, o02)
    b.edge(i1, c1, "S")
    b.edge(i1, n22)
    b.edge(i2, n23)
    b.edge(i2, c2, "S")
    b.edge(o01, c1, "S")
    b.edge(o02, c2, "S")
    b.edge(n22, c3, "S")
    b.edge(n23, c3, "S")
    b.edge(c1, out)
    b.edge(c2, out)
    b.edge(c3, out)
    b.edge(bb, dnode)
    b.edge(dnode, out)
    if is_root:
        b.label_arrow(dnode, "D")
    for collector in (bb, c1, c2, c3):
        e = b.node(f"{collector}.e")
        b.edge(collector, e)
        b.label_arrow(e, "E")
    return out


def _emit_main_block(
    b: _Builder, prefix: str, formula: Formula, anchor: str, upper: str, rho: str, rg: str
) -> None:
    """One main block: the beta-structure plus the formula's gate network."""
    n = formula.n_vars
    beta_f = b.node(f"{prefix}.betaF")
    for i in range(1, n + 1):
        beta_t = b.node(f"{prefix}.betaT{i}")
        b.edge(upper, beta_t)
        b.edge(beta_t, beta_f)
        b.label_arrow(beta_t, f"B{i}")
        b.label_arrow(beta_f, f"B{i}")
    mid = b.node(f"{prefix}.mid")
    b.edge(beta_f, rho)
    b.edge(beta_f, mid)
    b.edge(mid, rho)
    b.edge(rho, anchor, rg)

    branches = formula.branches()
    # ports: (gate id, child position) -> node; position -1 is the output side
    port: Dict[Tuple[str, int], str] = {}
    for gid, gate in formula.gate_ids().items():
        positions = (1,) if isinstance(gate, NotGate) else (1, 2)
        for m in positions:
            port[(gid, m)] = b.node(f"{prefix}.p.{gid}_{m}")
    for gid, gate in formula.gate_ids().items():
        if gid == "g":
            continue
        parent_gid = gid[:-1]
        m = 1 if gid.endswith(("n", "l")) else 2
        port[(gid, -1)] = port[(parent_gid, m)]
    for gid, gate in formula.gate_ids().items():
        _emit_gate_gadget(b, prefix, gid, gate, is_root=(gid == "g"), port=port)
    # leaf wiring: the lower B_ij node is the first gate's input port
    for var, copy, chain in branches:
        upper_bij = b.node(f"{prefix}.uB{var}_{copy}")
        first_gid, _, first_pos = chain[0]
        lower_bij = port[(first_gid, first_pos)]
        b.edge(beta_f, upper_bij)
        b.edge(upper_bij, lower_bij)
        b.label_arrow(upper_bij, f"B{var}_{copy}")
        b.label_arrow(lower_bij, f"B{var}_{copy}")


def _emit_input_block(
    b: _Builder, prefix: str, formula: Formula, base: Mapping[str, str], pi: str, iota: str, rg: str
) -> None:
    n = formula.n_vars
    b.edge(pi, iota, rg)
    tuple_w: Dict[int, str] = {}
    for idx, t in enumerate(formula.input_types):
        if t.kind == "down":
            w = b.node(f"{prefix}.wt{idx}")
            b.label_arrow(w, "W")
            tuple_w[idx] = w
    for var in range(1, n + 1):
        b_i = b.node(f"{prefix}.B{var}")
        b.label_arrow(b_i, f"B{var}")
        mid = b.node(f"{prefix}.m{var}")
        b.edge(b_i, mid)
        b.edge(mid, pi)
        # gathering block
        t_idx, t, pos = formula.tuple_of_var(var)
        chain_len = 4 * t.length
        names = [b.node(f"{prefix}.G{var}.{i}") for i in range(chain_len + 1)]
        if t.kind == "up":
            s_at = 4 * (t.length - pos) + 3
            for i in range(chain_len):
                pred = "S" if i + 1 == s_at else "R"
                b.edge(names[i], names[i + 1], pred)
            gamma = names[-1]
        else:
            s_at = 4 * pos - 1
            for i in range(chain_len):
                pred = "S" if i + 1 == s_at else "R"
                b.edge(names[i], names[i + 1], pred)
            gamma = names[0]
            eta = names[-1]
            b.edge(eta, tuple_w[t_idx])
        g_mid = b.node(f"{prefix}.gm{var}")
        b.edge(gamma, g_mid)
        b.edge(g_mid, b_i)
    # branch fans and the gate-order chains
    gate_ids = formula.gate_ids()
    e_coll: Dict[str, str] = {}
    for var, copy, chain in formula.branches():
        fan = b.node(f"{prefix}.f{var}_{copy}")
        bij = b.node(f"{prefix}.IB{var}_{copy}")
        b.edge(f"{prefix}.B{var}", fan)
        b.edge(fan, bij)
        b.label_arrow(bij, f"B{var}_{copy}")
        prev = bij
        for depth, (gid, gate, _pos) in enumerate(chain, start=1):
            a = b.node(f"{prefix}.r{var}_{copy}.{depth}a")
            s = b.node(f"{prefix}.r{var}_{copy}.{depth}s")
            p = b.node(f"{prefix}.r{var}_{copy}.{depth}p")
            b.edge(prev, a)
            b.edge(a, s, "S")
            b.edge(s, p)
            if isinstance(gate, AndGate):
                coll = e_coll.get(gid)
                if coll is None:
                    coll = b.node(f"{prefix}.E.{gid}")
                    b.label_arrow(coll, "E")
                    e_coll[gid] = coll
                b.edge(s, coll)
            prev = p
        b.label_arrow(prev, "D")


def build_query(gadgets: Sequence[Tuple[Formula, str]]) -> GadgetQuery:
    """Assemble the 1-CQ for a list of (formula, frame type) gadgets."""
    if not gadgets:
        raise ShapeViolationError("at least one gadget is required")
    for _, frame in gadgets:
        if frame not in FRAMES:
            raise ShapeViolationError(f"unknown frame type {frame!r}")
    b = _Builder()
    base = {
        "F": b.node("b.F"),
        "xi": b.node("b.xi"),
        "alpha": b.node("b.alpha"),
        "n4": b.node("b.n4"),
        "t0": b.node("b.t0"),
        "n6": b.node("b.n6"),
        "t1": b.node("b.t1"),
        "w": b.node("b.w"),
        "xi2": b.node("b.xi2"),
    }
    b.unary_label(base["F"], "F")
    b.unary_label(base["t0"], "T")
    b.unary_label(base["t1"], "T")
    b.label_arrow(base["w"], "W")
    b.edge(base["F"], base["xi"])
    b.edge(base["xi"], base["alpha"])
    b.edge(base["alpha"], base["n4"])
    b.edge(base["n4"], base["t0"])
    b.edge(base["n4"], base["t0"], "S")
    b.edge(base["alpha"], base["n6"])
    b.edge(base["alpha"], base["n6"], "S")
    b.edge(base["n6"], base["t1"])
    b.edge(base["F"], base["w"])
    b.edge(base["xi"], base["w"])
    b.edge(base["xi2"], base["w"])
    b.edge(base["F"], base["xi2"])

    infos = []
    frame_nodes: Dict[int, Dict[str, str]] = {}
    for gi, (formula, frame) in enumerate(gadgets):
        rg = f"Rg{gi}"
        infos.append(GadgetInfo(index=gi, formula=formula, frame=frame, rg=rg))
        p = f"g{gi}"
        roles = {
            "pi": b.node(f"{p}.pi"),
            "iota": b.node(f"{p}.iota"),
            "i3": b.node(f"{p}.i3"),
            "i4": b.node(f"{p}.i4"),
            "rho": b.node(f"{p}.rho"),
            "rho2": b.node(f"{p}.rho2"),
            "tau": b.node(f"{p}.tau"),
            "g6": b.node(f"{p}.g6"),
            "g7": b.node(f"{p}.g7"),
            "ucross": b.node(f"{p}.u"),
        }
        frame_nodes[gi] = roles
        b.unary_label(roles["g7"], "F")
        b.unary_label(roles["g7"], "T")
        b.edge(roles["iota"], roles["i3"])
        b.edge(base["alpha"], roles["i3"])
        b.label_arrow(roles["i3"], f"Ug{gi}")
        b.edge(base["alpha"], roles["i4"])
        b.edge(roles["tau"], roles["i4"])
        b.label_arrow(roles["i4"], f"Ug{gi}")
        b.label_arrow(roles["ucross"], f"Ug{gi}")
        b.edge(roles["iota"], roles["ucross"])
        b.edge(base["xi2"], roles["tau"])
        if frame == "AA":
            b.edge(roles["tau"], roles["g6"])
            b.edge(roles["tau"], roles["g6"], "S")
            b.edge(roles["g6"], roles["g7"])
            b.edge(roles["g6"], roles["g7"], "S")
        elif frame == "AT":
            g4 = b.node(f"{p}.g4")
            roles["g4"] = g4
            b.edge(roles["tau"], g4)
            b.edge(roles["tau"], g4, "S")
            b.edge(g4, base["t1"])
            b.edge(roles["tau"], roles["g6"])
            b.edge(roles["g6"], roles["g7"])
            b.edge(roles["g6"], roles["g7"], "S")
        else:  # TA
            g4 = b.node(f"{p}.g4")
            roles["g4"] = g4
            b.edge(roles["tau"], g4)
            b.edge(g4, base["t0"])
            b.edge(g4, base["t0"], "S")
            b.edge(roles["tau"], roles["g6"])
            b.edge(roles["tau"], roles["g6"], "S")
            b.edge(roles["g6"], roles["g7"])
        _emit_main_block(b, f"{p}.M", formula, base["alpha"], base["xi"], roles["rho"], rg)
        _emit_main_block(b, f"{p}.Mp", formula, roles["tau"], base["xi2"], roles["rho2"], rg)
        _emit_input_block(b, f"{p}.I", formula, base, roles["pi"], roles["iota"], rg)
    # cross-gadget wiring
    for gi, _ in enumerate(gadgets):
        for gj, _ in enumerate(gadgets):
            if gi != gj:
                b.edge(frame_nodes[gj]["tau"], frame_nodes[gi]["ucross"])
            b.edge(frame_nodes[gi]["rho2"], frame_nodes[gj]["tau"], f"Rg{gi}")

    graph = b.graph()
    gq = GadgetQuery(
        graph=graph, gadgets=tuple(infos), base=base, frame_nodes=frame_nodes
    )
    _validate_query(gq)
    return gq


def _validate_query(gq: GadgetQuery) -> None:
    rep = shape(gq.graph)
    if not rep.is_dag:
        raise ShapeViolationError("assembled query must be a dag")
    if list(rep.solitary_f) != [gq.base["F"]]:
        raise ShapeViolationError("assembled query must have exactly one solitary F")
    if list(rep.solitary_t) != sorted([gq.base["t0"], gq.base["t1"]]):
        raise ShapeViolationError("assembled query must have exactly two solitary T")
    g = gq.graph
    if not g.successors(gq.base["F"]):
        raise ShapeViolationError("the F-node must have successors")
    for n in g.nodes:
        if {"F", "T"} <= g.labels(n) and g.successors(n):
            raise ShapeViolationError("FT-twins must have no successors")


# --- triggering --------------------------------------------------------------------


def triggered(
    gq: GadgetQuery, c: Cactus, seg_index: int, gadget: int, budget: int = 5 * 10**6
) -> bool:
    """Is there an anchored homomorphism of the defocused query into the cactus
    mapping the gadget's iota-node onto the segment's alpha-node?"""
    if gadget >= len(gq.gadgets):
        raise ShapeViolationError(f"unknown gadget {gadget}")
    seg = c.skeleton.segments[seg_index]
    if not c.skeleton.children(seg_index):
        raise ShapeViolationError("triggering is defined at non-leaf segments only")
    alpha = seg.node_map[gq.base["alpha"]]
    iota = gq.frame_nodes[gadget]["iota"]
    h = backtracking_hom(
        gq.q_minus_tt(), c.graph, anchor={iota: alpha}, budget=budget
    )
    return h is not None


# --- the gathering oracle ------------------------------------------------------------


def skeleton_uppath(c: Cactus, seg_index: int, n: int) -> Optional[Tuple[int, ...]]:
    """Bits of the n-long uppath (nearest edge first), or None if too shallow.
    Skeleton label 1 (first solitary T) is bit 0, label 2 is bit 1."""
    bits = []
    seg = c.skeleton.segments[seg_index]
    while seg.parent is not None and len(bits) < n:
        bits.append(seg.bud_label - 1)
        seg = c.skeleton.segments[seg.parent]
    if len(bits) < n:
        return None
    return tuple(bits)


def skeleton_downpaths(c: Cactus, seg_index: int, n: int) -> List[Tuple[int, ...]]:
    if n == 0:
        return [()]
    out = []
    for label, child in c.skeleton.children(seg_index):
        for rest in skeleton_downpaths(c, child, n - 1):
            out.append((label - 1,) + rest)
    return out


def gatherable_inputs(formula: Formula, c: Cactus, seg_index: int) -> Iterator[Tuple[int, ...]]:
    """Every bit vector that can be gathered around the segment according to
    the formula's input tuples."""
    per_tuple: List[List[Tuple[int, ...]]] = []
    for t in formula.input_types:
        if t.kind == "up":
            path = skeleton_uppath(c, seg_index, t.length)
            options = [path] if path is not None else []
        else:
            options = skeleton_downpaths(c, seg_index, t.length)
        if not options:
            return
        per_tuple.append(options)
    for combo in itertools.product(*per_tuple):
        yield tuple(bit for part in combo for bit in part)


def frame_compatible(frame: str, c: Cactus, seg_index: int) -> bool:
    """A type-frame gadget can only trigger where the matching solitary T of
    the segment is still present."""
    if frame == "AA":
        return True
    budded = set(c.skeleton.segments[seg_index].budded)
    return budded == {1} if frame == "AT" else budded == {2}


def expected_triggered(gq: GadgetQuery, c: Cactus, seg_index: int, gadget: int) -> bool:
    """The gathering-semantics side of the triggering biconditional, for
    non-leaf non-root segments."""
    seg = c.skeleton.segments[seg_index]
    if seg.parent is None:
        return False  # the root focus carries F, not A: never triggered
    info = gq.gadgets[gadget]
    if not frame_compatible(info.frame, c, seg_index):
        return False
    return any(
        info.formula.evaluate(bits) == 1
        for bits in gatherable_inputs(info.formula, c, seg_index)
    )
