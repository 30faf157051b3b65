"""Datalog programs attached to a 1-CQ, fixpoint evaluation, and brute-force
certain answers for the disjunctive form.

The program shapes are fixed: the full program has a goal rule, a base rule
``P(x) <- T(x)`` and one recursive rule; the sirup sub-program drops the goal
rule. Fixpoints treat the derived monadic predicate as an extra node label on
a working copy of the data, so rule bodies evaluate with the homomorphism
engine.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Set, Tuple

from .errors import CapExceededError, NameClashError
from .expansion import QuerySignature
from .homs import hom_exists
from .model import LabelledGraph

Atom = Tuple[str, Tuple[str, ...]]


@dataclass(frozen=True)
class Rule:
    head: Atom
    body: Tuple[Atom, ...]

    def render(self) -> str:
        def one(a: Atom) -> str:
            return f"{a[0]}({','.join(a[1])})"

        return f"{one(self.head)} <- {', '.join(one(a) for a in self.body)}"


@dataclass(frozen=True)
class DatalogProgram:
    rules: Tuple[Rule, ...]
    idb: FrozenSet[str]
    goal: Tuple[str, int]  # ("G", 0) or ("P", 1)

    def render(self) -> str:
        return "\n".join(r.render() for r in self.rules)


@dataclass(frozen=True)
class Closure:
    p_facts: FrozenSet[str]
    goal: bool
    rounds: int


def _query_atoms(q: LabelledGraph) -> List[Atom]:
    atoms: List[Atom] = []
    for n in sorted(q.nodes):
        for p in sorted(q.labels(n)):
            atoms.append((p, (n,)))
    for s, t, p in sorted(q.edges):
        atoms.append((p, (s, t)))
    return atoms


def build_programs(q: LabelledGraph) -> Dict[str, DatalogProgram]:
    """The monadic program (goal rule, base rule, recursive rule) and its sirup
    sub-program for a 1-CQ with solitary F(x) and solitary T(y_1..y_n)."""
    sig = QuerySignature.of(q)
    x = sig.focus
    ys = sig.buds
    q_minus = [
        a
        for a in _query_atoms(q)
        if a != ("F", (x,)) and not (a[0] == "T" and len(a[1]) == 1 and a[1][0] in ys)
    ]
    goal_rule = Rule(
        head=("G", ()),
        body=tuple([("F", (x,))] + q_minus + [("P", (y,)) for y in ys]),
    )
    base_rule = Rule(head=("P", (x,)), body=(("T", (x,)),))
    rec_rule = Rule(
        head=("P", (x,)),
        body=tuple([("A", (x,))] + q_minus + [("P", (y,)) for y in ys]),
    )
    pi = DatalogProgram(rules=(goal_rule, base_rule, rec_rule), idb=frozenset({"G", "P"}), goal=("G", 0))
    sigma = DatalogProgram(rules=(base_rule, rec_rule), idb=frozenset({"P"}), goal=("P", 1))
    return {"pi": pi, "sigma": sigma}


def _body_as_graph(body: Sequence[Atom]) -> LabelledGraph:
    unary: Dict[str, set] = {}
    edges = []
    nodes = set()
    for pred, args in body:
        if len(args) == 1:
            unary.setdefault(args[0], set()).add(pred)
            nodes.add(args[0])
        else:
            edges.append((args[0], args[1], pred))
            nodes.update(args)
    return LabelledGraph.build(nodes=nodes, unary=unary, edges=edges)


def _with_p_labels(data: LabelledGraph, p_facts: Set[str]) -> LabelledGraph:
    return data.relabel({n: data.labels(n) | {"P"} for n in p_facts})


def fixpoint(prog: DatalogProgram, data: LabelledGraph, budget: int = 10**6) -> Closure:
    """Least fixpoint by rounds that only re-derive heads not yet known
    (the semi-naive discipline for these single-recursive-rule programs)."""
    base = [r for r in prog.rules if r.head[0] == "P" and r.body == (("T", r.body[0][1]),)]
    rec = [r for r in prog.rules if r.head[0] == "P" and len(r.body) > 1]
    goal_rules = [r for r in prog.rules if r.head[0] == "G"]

    p_facts: Set[str] = set(data.nodes_with_label("T")) if base else set()
    rounds = 0
    changed = True
    rec_graphs = [(_body_as_graph(r.body), r.head[1][0]) for r in rec]
    while changed:
        changed = False
        rounds += 1
        working = _with_p_labels(data, p_facts)
        for body_graph, head_var in rec_graphs:
            for a in data.nodes_with_label("A"):
                if a in p_facts:
                    continue
                if hom_exists(body_graph, working, anchor={head_var: a}, budget=budget) is not None:
                    p_facts.add(a)
                    changed = True
        # new facts only become visible to the next round's working graph
    goal = False
    working = _with_p_labels(data, p_facts)
    for r in goal_rules:
        if hom_exists(_body_as_graph(r.body), working, budget=budget) is not None:
            goal = True
            break
    return Closure(p_facts=frozenset(p_facts), goal=goal, rounds=rounds)


def naive_fixpoint(prog: DatalogProgram, data: LabelledGraph, budget: int = 10**6) -> Closure:
    """Oracle: every round applies every rule to the full current closure."""
    rec = [r for r in prog.rules if r.head[0] == "P" and len(r.body) > 1]
    base = [r for r in prog.rules if r.head[0] == "P" and len(r.body) == 1]
    goal_rules = [r for r in prog.rules if r.head[0] == "G"]
    p_facts: Set[str] = set()
    rounds = 0
    while True:
        rounds += 1
        working = _with_p_labels(data, p_facts)
        new: Set[str] = set()
        for r in base:
            new |= set(data.nodes_with_label("T"))
        for r in rec:
            body_graph = _body_as_graph(r.body)
            head_var = r.head[1][0]
            for a in data.nodes_with_label("A"):
                if hom_exists(body_graph, working, anchor={head_var: a}, budget=budget) is not None:
                    new.add(a)
        if new <= p_facts:
            break
        p_facts |= new
    working = _with_p_labels(data, p_facts)
    goal = any(
        hom_exists(_body_as_graph(r.body), working, budget=budget) is not None for r in goal_rules
    )
    return Closure(p_facts=frozenset(p_facts), goal=goal, rounds=rounds)


# --- brute-force certain answers ----------------------------------------------


@dataclass(frozen=True)
class DeltaEvaluation:
    answer: bool
    assignments_checked: int
    inconsistent_skipped: int
    failing_assignment: Optional[Mapping[str, str]]  # A-node -> "T"/"F"


def _gray_assignments(n: int) -> Iterable[Tuple[int, ...]]:
    for i in range(1 << n):
        code = i ^ (i >> 1)
        yield tuple((code >> j) & 1 for j in range(n))


def evaluate_delta(
    q: LabelledGraph,
    data: LabelledGraph,
    disjointness: bool = False,
    max_a_nodes: int = 22,
    budget: int = 10**6,
) -> DeltaEvaluation:
    """Certain answer of the disjunctive program over the data: for every T/F
    labelling of the A-nodes there must be a homomorphism from q.

    With the disjointness rule, labellings that put T and F on one node are
    inconsistent and make the model set smaller (vacuously yes if none remain).
    """
    a_nodes = data.nodes_with_label("A")
    if len(a_nodes) > max_a_nodes:
        raise CapExceededError(
            f"{len(a_nodes)} A-nodes exceed the brute-force bound {max_a_nodes}"
        )
    if disjointness and any(
        {"T", "F"} <= data.labels(n) for n in data.nodes
    ):
        return DeltaEvaluation(True, 0, 0, None)  # inconsistent data: vacuously yes
    checked = 0
    skipped = 0
    for bits in _gray_assignments(len(a_nodes)):
        changes = {}
        inconsistent = False
        for node, bit in zip(a_nodes, bits):
            add = "T" if bit else "F"
            other = "F" if bit else "T"
            if disjointness and other in data.labels(node):
                inconsistent = True
                break
            changes[node] = data.labels(node) | {add}
        if inconsistent:
            skipped += 1
            continue
        model = data.relabel(changes)
        checked += 1
        if hom_exists(q, model, budget=budget) is None:
            return DeltaEvaluation(
                False,
                checked,
                skipped,
                {node: ("T" if bit else "F") for node, bit in zip(a_nodes, bits)},
            )
    return DeltaEvaluation(True, checked, skipped, None)


def certain_answer_delta(
    q: LabelledGraph,
    data: LabelledGraph,
    disjointness: bool = False,
    max_a_nodes: int = 22,
    budget: int = 10**6,
) -> bool:
    return evaluate_delta(q, data, disjointness, max_a_nodes, budget).answer


# --- covering-by-role transformation (range-covering ontologies) ---------------


@dataclass(frozen=True)
class RangeCoveringTransform:
    """Replaces the unary trigger A(x) by a fresh binary whose range is covered:
    T(y) or F(y) holds for every y with an incoming fresh-predicate edge."""

    query: LabelledGraph
    r_name: str

    def data_to_schema(self, data: LabelledGraph) -> LabelledGraph:
        if self.r_name in data.binary_predicates():
            raise NameClashError(f"data already uses binary predicate {self.r_name!r}")
        changes = {}
        edges = list(data.edges)
        extra_nodes = []
        for b in data.nodes_with_label("A"):
            fresh = f"src_{b}"
            while fresh in data.nodes:
                fresh += "_"
            extra_nodes.append(fresh)
            edges.append((fresh, b, self.r_name))
            changes[b] = data.labels(b) - {"A"}
        out = data.relabel(changes)
        return LabelledGraph.build(
            nodes=set(out.nodes) | set(extra_nodes),
            unary={n: out.labels(n) for n in out.nodes if out.labels(n)},
            edges=edges,
        )

    def schema_to_data(self, data: LabelledGraph) -> LabelledGraph:
        changes = {}
        keep_edges = []
        for s, t, p in data.edges:
            if p == self.r_name:
                changes[t] = data.labels(t) | {"A"} | changes.get(t, set())
            else:
                keep_edges.append((s, t, p))
        relabelled = data.relabel(changes)
        trimmed = LabelledGraph.build(
            nodes=data.nodes,
            unary={n: relabelled.labels(n) for n in relabelled.nodes if relabelled.labels(n)},
            edges=keep_edges,
        )
        # drop nodes that carried nothing but a fresh-source role
        used = {n for n in trimmed.nodes if trimmed.labels(n)}
        for s, t, _ in trimmed.edges:
            used.add(s)
            used.add(t)
        return trimmed.induced(used)


def to_schema_org(q: LabelledGraph, r_name: Optional[str] = None) -> RangeCoveringTransform:
    used = q.binary_predicates() | q.unary_predicates()
    if r_name is None:
        r_name = "Rng"
        i = 0
        while r_name in used:
            i += 1
            r_name = f"Rng{i}"
    elif r_name in used:
        raise NameClashError(f"{r_name!r} already occurs in the query")
    return RangeCoveringTransform(query=q, r_name=r_name)


def certain_answer_schema(
    q: LabelledGraph,
    data: LabelledGraph,
    r_name: str,
    max_a_nodes: int = 22,
    budget: int = 10**6,
) -> bool:
    """Certain answer under the range-covering rule: every node with an
    incoming r_name-edge gets T or F."""
    covered = sorted({t for _, t, p in data.edges if p == r_name})
    if len(covered) > max_a_nodes:
        raise CapExceededError(
            f"{len(covered)} covered nodes exceed the brute-force bound {max_a_nodes}"
        )
    for bits in _gray_assignments(len(covered)):
        changes = {
            node: data.labels(node) | {"T" if bit else "F"}
            for node, bit in zip(covered, bits)
        }
        model = data.relabel(changes)
        if hom_exists(q, model, budget=budget) is None:
            return False
    return True
