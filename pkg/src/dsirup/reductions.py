"""Hardness-reduction instance builders, used as cross-validation harnesses:
every constructor's output satisfies answer-iff-reachability at brute-force
scale, which the test suite checks against the assignment-enumerating
evaluator.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Tuple

from .errors import PairIneligibleError, ShapeViolationError
from .expansion import QuerySignature
from .fo_dichotomy import PeriodicStructure, blow_up, check_h_conditions
from .model import LabelledGraph, shape, is_quasi_symmetric, solitary_pairs


@dataclass(frozen=True)
class GraphInstance:
    vertices: Tuple[str, ...]
    edges: Tuple[Tuple[str, str], ...]
    s: str
    t: str
    directed: bool = True

    def __post_init__(self):
        if self.s not in self.vertices or self.t not in self.vertices:
            raise ValueError("s and t must be vertices")

    def reachable(self) -> bool:
        """s-to-t reachability (directed) or connectivity (undirected)."""
        adj: Dict[str, List[str]] = {v: [] for v in self.vertices}
        for a, b in self.edges:
            adj[a].append(b)
            if not self.directed:
                adj[b].append(a)
        frontier = [self.s]
        seen = {self.s}
        while frontier:
            v = frontier.pop()
            if v == self.t:
                return True
            for w in adj[v]:
                if w not in seen:
                    seen.add(w)
                    frontier.append(w)
        return self.s == self.t


def _copy_with_contacts(
    q: LabelledGraph, t: str, f: str, index: int, u: str, v: str
) -> LabelledGraph:
    """A fresh copy of q with its t-node renamed to u (T replaced by A) and its
    f-node renamed to v (F replaced by A); contacts keep the vertex names."""
    mapping = {n: f"e{index}_{n}" for n in q.nodes}
    mapping[t] = u
    mapping[f] = v
    g = q.rename(mapping)
    return g.relabel(
        {
            u: (g.labels(u) - {"T"}) | {"A"},
            v: (g.labels(v) - {"F"}) | {"A"},
        }
    )


def _pair_or_error(q: LabelledGraph, pair) -> Tuple[str, str]:
    """Structural eligibility: a comparable pair with no solitary node strictly
    between, or an incomparable pair of minimal distance. (Soundness of the
    reachability equivalence additionally needs asymmetry or, for symmetric
    pairs, the undirected variant; construction does not.)"""
    from .model import TreeIndex

    all_pairs = solitary_pairs(q)
    match = [p for p in all_pairs if (p.t, p.f) == (pair.t, pair.f)]
    if not match:
        raise PairIneligibleError(f"({pair.t}, {pair.f}) is not a solitary pair")
    p = match[0]
    if p.comparable:
        idx = TreeIndex(q)
        lo, hi = (p.t, p.f) if idx.leq(p.t, p.f) else (p.f, p.t)
        between = [n for n in idx.ancestors(hi) if n not in (lo, hi) and idx.leq(lo, n)]
        if any(("T" in q.labels(n)) != ("F" in q.labels(n)) for n in between):
            raise PairIneligibleError(
                f"({pair.t}, {pair.f}) has a solitary node strictly between"
            )
    else:
        dmin = min(x.distance for x in all_pairs)
        if p.distance != dmin:
            raise PairIneligibleError(f"({pair.t}, {pair.f}) is not of minimal distance")
    return pair.t, pair.f


def dag_reduction(q: LabelledGraph, pair, g: GraphInstance) -> LabelledGraph:
    """Directed-reachability instance: one fresh copy of q per edge, glued at
    the vertices, plus T on s and F on t."""
    if not g.directed:
        raise ValueError("dag_reduction needs a directed graph")
    t, f = _pair_or_error(q, pair)
    data = LabelledGraph.build(nodes=g.vertices)
    for i, (u, v) in enumerate(g.edges):
        data = data.union(_copy_with_contacts(q, t, f, i, u, v))
    return data.relabel(
        {
            g.s: data.labels(g.s) | {"T"},
            g.t: data.labels(g.t) | {"F"},
        }
    )


def undirected_reduction(q: LabelledGraph, g: GraphInstance) -> LabelledGraph:
    """Undirected-connectivity instance for quasi-symmetric one-F-one-T CQs."""
    rep = shape(q)
    if len(rep.solitary_f) != 1 or len(rep.solitary_t) != 1 or not rep.is_ditree:
        raise ShapeViolationError("undirected reduction needs a ditree CQ with one solitary node of each kind")
    if not is_quasi_symmetric(q):
        raise ShapeViolationError("undirected reduction needs a quasi-symmetric CQ")
    pair = solitary_pairs(q)[0]
    data = LabelledGraph.build(nodes=g.vertices)
    for i, (u, v) in enumerate(g.edges):
        data = data.union(_copy_with_contacts(q, pair.t, pair.f, i, u, v))
    return data.relabel(
        {
            g.s: data.labels(g.s) | {"T"},
            g.t: data.labels(g.t) | {"F"},
        }
    )


def blowup_reduction(ps: PeriodicStructure, q: LabelledGraph, g: GraphInstance) -> LabelledGraph:
    """Undirected-connectivity instance from a periodic structure failing every
    h-condition: one fresh periodic-part blow-up per vertex, every blow-up edge
    duplicated across adjacent vertices in both directions, the pre-periodic
    part attached at s and the post-periodic family at t."""
    if g.directed:
        raise ValueError("blowup_reduction needs an undirected graph")
    conditions = check_h_conditions(ps, q)
    if any(conditions.values()):
        raise PairIneligibleError(
            f"periodic structure does not fail all h-conditions: {conditions}"
        )
    sig = QuerySignature.of(q)
    p_sub = ps.h.induced(ps.p_nodes)
    p_bw = blow_up(p_sub, sig)

    def vertex_copy(v: str) -> Dict[str, str]:
        return {n: f"{v}__{n}" for n in p_bw.graph.nodes}

    data = LabelledGraph.build()
    naming: Dict[str, Dict[str, str]] = {}
    for v in g.vertices:
        naming[v] = vertex_copy(v)
        data = data.union(p_bw.graph.rename(naming[v]))
    for (u, v) in g.edges:
        cross = []
        for (a, b, pred) in p_bw.graph.edges:
            cross.append((naming[u][a], naming[v][b], pred))
            cross.append((naming[v][a], naming[u][b], pred))
        data = data.union(LabelledGraph.build(edges=cross))

    # pre-periodic part at s: glue each boundary contact into s's copy
    full_bw = blow_up(ps.h, sig)
    b_zone = {
        n
        for v in ps.b_nodes
        for n in full_bw.seg_nodes[v].values()
    }
    stem = full_bw.graph.induced(b_zone)
    rename_map = {n: f"pre__{n}" for n in stem.nodes}
    for (u_id, v_id, j), contact in full_bw.contact.items():
        if u_id in ps.b_nodes and v_id in ps.p_nodes and contact in rename_map:
            rename_map[contact] = naming[g.s][p_bw.seg_nodes[v_id][sig.focus]]
    data = data.union(stem.rename(rename_map))

    # post-periodic family at t: glue each source segment onto t's copy
    for v_id, h_v in sorted(ps.e_graphs.items()):
        e_bw = blow_up(h_v, sig)
        names = {n: f"post_{v_id}__{n}" for n in e_bw.graph.nodes}
        for qnode in sig.graph.nodes:
            source_node = e_bw.seg_nodes[v_id][qnode]
            names[source_node] = naming[g.t][p_bw.seg_nodes[v_id][qnode]]
        data = data.union(e_bw.graph.rename(names))
    return data
