"""Cactus expansions of a 1-CQ: budding, canonical enumeration, root
defocusing, empirical boundedness-witness search and UCQ rewriting output.

A cactus is a labelled graph together with its skeleton: the ditree of
segments, each segment a copy of the query with the focus relabelled and the
budded solitary T-nodes relabelled A. Skeleton edges carry the index of the
solitary T that was budded (1-based, in sorted node-id order of the query's
solitary T-nodes).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Iterator, List, Mapping, Optional, Sequence, Tuple

from .errors import NotAOneCQError, ShapeViolationError
from .homs import hom_exists
from .model import LabelledGraph, shape, solitary_f_nodes, solitary_t_nodes


@dataclass(frozen=True)
class QuerySignature:
    """The fixed data of a 1-CQ needed for budding."""

    graph: LabelledGraph
    focus: str                 # the solitary F node
    buds: Tuple[str, ...]      # solitary T nodes, sorted; label i = buds[i-1]

    @staticmethod
    def of(q: LabelledGraph) -> "QuerySignature":
        sf = solitary_f_nodes(q)
        if len(sf) != 1:
            raise NotAOneCQError(f"expected exactly one solitary F, got {len(sf)}")
        return QuerySignature(graph=q, focus=sf[0], buds=tuple(solitary_t_nodes(q)))

    @property
    def span(self) -> int:
        return len(self.buds)


@dataclass(frozen=True)
class Segment:
    index: int
    node_map: Mapping[str, str]       # query node -> cactus node
    parent: Optional[int]
    bud_label: Optional[int]          # label on the edge from the parent
    budded: Tuple[int, ...]           # labels already budded in this segment


@dataclass(frozen=True)
class Skeleton:
    segments: Tuple[Segment, ...]
    edges: Tuple[Tuple[int, int, int], ...]  # (parent segment, child segment, label)

    def depth_of(self, index: int) -> int:
        d = 0
        parent = {c: p for p, c, _ in self.edges}
        while index in parent:
            index = parent[index]
            d += 1
        return d

    @property
    def depth(self) -> int:
        if not self.segments:
            return 0
        return max(self.depth_of(s.index) for s in self.segments)

    def children(self, index: int) -> List[Tuple[int, int]]:
        return sorted((lbl, c) for p, c, lbl in self.edges if p == index)

    def as_dict(self) -> Dict[str, object]:
        return {
            "segments": [
                {
                    "index": s.index,
                    "parent": s.parent,
                    "bud_label": s.bud_label,
                    "budded": list(s.budded),
                    "depth": self.depth_of(s.index),
                }
                for s in self.segments
            ],
            "edges": [list(e) for e in self.edges],
        }


@dataclass(frozen=True)
class Cactus:
    query: QuerySignature
    graph: LabelledGraph
    root_focus: str
    skeleton: Skeleton

    def segment_node(self, seg_index: int, qnode: str) -> str:
        return self.skeleton.segments[seg_index].node_map[qnode]

    def focus_of(self, seg_index: int) -> str:
        return self.segment_node(seg_index, self.query.focus)

    @property
    def depth(self) -> int:
        return self.skeleton.depth

    def buddable(self) -> List[Tuple[int, int, str]]:
        """(segment index, label, cactus node) for every un-budded solitary T."""
        out = []
        for s in self.skeleton.segments:
            for i, qnode in enumerate(self.query.buds, start=1):
                if i not in s.budded:
                    out.append((s.index, i, s.node_map[qnode]))
        return out


def as_cactus(q: LabelledGraph) -> Cactus:
    sig = QuerySignature.of(q)
    node_map = {n: n for n in q.nodes}
    seg = Segment(index=0, node_map=node_map, parent=None, bud_label=None, budded=())
    return Cactus(
        query=sig,
        graph=q,
        root_focus=sig.focus,
        skeleton=Skeleton(segments=(seg,), edges=()),
    )


def bud(c: Cactus, target: str) -> Cactus:
    """Bud the solitary T-node ``target``: relabel it A and attach a fresh copy
    of the query with its focus identified with the target."""
    sig = c.query
    found = None
    for seg in c.skeleton.segments:
        for i, qnode in enumerate(sig.buds, start=1):
            if seg.node_map[qnode] == target and i not in seg.budded:
                found = (seg, i)
                break
        if found:
            break
    if found is None:
        raise ShapeViolationError(f"{target!r} is not an un-budded solitary T of this cactus")
    labels = c.graph.labels(target)
    if "T" not in labels or "F" in labels:
        raise ShapeViolationError(f"{target!r} is not a solitary T node")
    seg, label = found
    new_index = len(c.skeleton.segments)

    def fresh(qnode: str) -> str:
        if qnode == sig.focus:
            return target
        name = f"{new_index}_{qnode}"
        while name in c.graph.nodes:  # guards against user names shaped like ours
            name += "_"
        return name

    node_map = {qnode: fresh(qnode) for qnode in sig.graph.nodes}
    new_unary: Dict[str, set] = {}
    for qnode in sig.graph.nodes:
        if qnode == sig.focus:
            continue  # the focus copy is the budded node; its labels are handled below
        ls = sig.graph.labels(qnode)
        if ls:
            new_unary[fresh(qnode)] = set(ls)
    new_edges = [(fresh(s), fresh(t), p) for s, t, p in sig.graph.edges]
    graph = c.graph.relabel({target: (labels - {"T"}) | {"A"}})
    graph = graph.union(LabelledGraph.build(nodes=node_map.values(), unary=new_unary, edges=new_edges))

    new_seg = Segment(index=new_index, node_map=node_map, parent=seg.index, bud_label=label, budded=())
    segments = list(c.skeleton.segments)
    segments[seg.index] = Segment(
        index=seg.index,
        node_map=seg.node_map,
        parent=seg.parent,
        bud_label=seg.bud_label,
        budded=tuple(sorted(set(seg.budded) | {label})),
    )
    segments.append(new_seg)
    skeleton = Skeleton(
        segments=tuple(segments),
        edges=c.skeleton.edges + ((seg.index, new_index, label),),
    )
    return Cactus(query=sig, graph=graph, root_focus=c.root_focus, skeleton=skeleton)


# --- canonical enumeration ---------------------------------------------------

ShapeTree = Tuple[Tuple[int, "ShapeTree"], ...]  # sorted (label, subtree) pairs


def _shapes_exact(segments: int, depth: int, span: int) -> Iterator[ShapeTree]:
    """All skeleton shapes with the given segment count and depth bound."""
    if segments == 1:
        yield ()
        return
    if depth == 0:
        return
    labels = list(range(1, span + 1))

    def split(rest_labels: List[int], budget: int) -> Iterator[ShapeTree]:
        # distribute `budget` segments over a subset of the remaining labels
        if budget == 0:
            yield ()
            return
        if not rest_labels:
            return
        lbl = rest_labels[0]
        # skip this label entirely
        yield from split(rest_labels[1:], budget)
        # or give it a child subtree with 1..budget segments
        for size in range(1, budget + 1):
            for sub in _shapes_exact(size, depth - 1, span):
                for others in split(rest_labels[1:], budget - size):
                    yield ((lbl, sub),) + others

    for combo in split(labels, segments - 1):
        yield tuple(sorted(combo))


def _max_segments(depth: int, span: int) -> int:
    total = 0
    width = 1
    for _ in range(depth + 1):
        total += width
        width *= span
    return total


def iter_shapes(depth: int, span: int, max_segments: Optional[int] = None) -> Iterator[ShapeTree]:
    """Canonical order: by segment count, then lexicographic."""
    limit = _max_segments(depth, span)
    if max_segments is not None:
        limit = min(limit, max_segments)
    for n in range(1, limit + 1):
        yield from sorted(set(_shapes_exact(n, depth, span)))


def materialize(q: LabelledGraph, tree: ShapeTree) -> Cactus:
    """Build the cactus for a skeleton shape, budding breadth-first in label order."""
    c = as_cactus(q)
    queue: List[Tuple[int, ShapeTree]] = [(0, tree)]
    while queue:
        seg_index, node = queue.pop(0)
        for label, subtree in node:
            qnode = c.query.buds[label - 1]
            target = c.skeleton.segments[seg_index].node_map[qnode]
            c = bud(c, target)
            queue.append((len(c.skeleton.segments) - 1, subtree))
    return c


@dataclass(frozen=True)
class CactusEnumeration:
    cactuses: Tuple[Cactus, ...]
    truncated: bool


def cactuses_up_to(q: LabelledGraph, d: int, cap: int = 10000) -> CactusEnumeration:
    """All cactuses of depth <= d up to skeleton-label isomorphism, canonical
    order, truncated at ``cap`` with an explicit flag."""
    sig = QuerySignature.of(q)
    out: List[Cactus] = []
    truncated = False
    for tree in iter_shapes(d, sig.span):
        if len(out) >= cap:
            truncated = True
            break
        out.append(materialize(q, tree))
    return CactusEnumeration(cactuses=tuple(out), truncated=truncated)


def defocus_root(c: Cactus) -> LabelledGraph:
    """Replace the F-label of the root-focus with A (the C-degree-zero variant)."""
    labels = c.graph.labels(c.root_focus)
    return c.graph.relabel({c.root_focus: (labels - {"F"}) | {"A"}})


# --- boundedness witness -----------------------------------------------------


@dataclass(frozen=True)
class Witness:
    d: int
    probe_depth: int
    truncated: bool
    empirical: bool = True


@dataclass(frozen=True)
class NoWitnessUpTo:
    d_max: int
    probe_depth: int
    truncated: bool


def _has_small_hom(
    c: Cactus, sources: Sequence[Cactus], rooted: bool, budget: int
) -> bool:
    for src in sources:
        anchor = {src.root_focus: c.root_focus} if rooted else None
        if hom_exists(src.graph, c.graph, anchor=anchor, budget=budget) is not None:
            return True
    return False


def boundedness_witness(
    q: LabelledGraph,
    d_max: int,
    probe_depth: int,
    rooted: bool = False,
    cap: int = 10000,
    budget: int = 10**6,
):
    """Empirical semi-decision for Prop-style boundedness: the least d <= d_max
    such that every enumerated cactus of depth <= probe_depth contains a
    hom-image of some cactus of depth <= d (with h(r) = r when rooted).

    A Witness is sound only relative to probe_depth.
    """
    if probe_depth <= d_max:
        raise ValueError("probe_depth must exceed d_max")
    enum = cactuses_up_to(q, probe_depth, cap=cap)
    by_depth: Dict[int, List[Cactus]] = {}
    for c in enum.cactuses:
        by_depth.setdefault(c.depth, []).append(c)
    for d in range(0, d_max + 1):
        sources = [c for c in enum.cactuses if c.depth <= d]
        ok = True
        for c in enum.cactuses:
            if c.depth <= d:
                continue
            if not _has_small_hom(c, sources, rooted, budget):
                ok = False
                break
        if ok:
            return Witness(d=d, probe_depth=probe_depth, truncated=enum.truncated)
    return NoWitnessUpTo(d_max=d_max, probe_depth=probe_depth, truncated=enum.truncated)


# --- UCQ rewriting -----------------------------------------------------------


@dataclass(frozen=True)
class UCQ:
    target: str                       # "delta" | "sigma"
    disjuncts: Tuple[LabelledGraph, ...]
    cactuses: Tuple[Cactus, ...]
    leading_t: bool                   # sigma only: the T(r) disjunct
    truncated: bool


def ucq_rewriting(
    q: LabelledGraph, d: int, target: str = "delta", cap: int = 10000, focus_depth: int = 2
) -> UCQ:
    """Disjunction of all cactuses of depth <= d (delta), or T(r) plus their
    defocused forms (sigma; only valid for focused queries)."""
    if target not in ("delta", "sigma"):
        raise ValueError("target must be 'delta' or 'sigma'")
    enum = cactuses_up_to(q, d, cap=cap)
    if target == "delta":
        return UCQ(
            target=target,
            disjuncts=tuple(c.graph for c in enum.cactuses),
            cactuses=enum.cactuses,
            leading_t=False,
            truncated=enum.truncated,
        )
    from .homs import check_focused

    report = check_focused(q, depth=max(1, focus_depth), cap=cap)
    if not report.holds_up_to_depth:
        raise ShapeViolationError(
            "sigma rewriting requested but a focusedness counterexample exists"
        )
    return UCQ(
        target=target,
        disjuncts=tuple(defocus_root(c) for c in enum.cactuses),
        cactuses=enum.cactuses,
        leading_t=True,
        truncated=enum.truncated,
    )


def ucq_delta_holds(ucq: UCQ, data: LabelledGraph, budget: int = 10**6) -> bool:
    return any(hom_exists(g, data, budget=budget) is not None for g in ucq.disjuncts)


def ucq_sigma_answers(ucq: UCQ, data: LabelledGraph, budget: int = 10**6) -> List[str]:
    """Nodes a with T(a) in the data or some defocused disjunct mapping r to a."""
    answers = set(data.nodes_with_label("T"))
    for g, c in zip(ucq.disjuncts, ucq.cactuses):
        for a in sorted(data.nodes):
            if a in answers:
                continue
            if hom_exists(g, data, anchor={c.root_focus: a}, budget=budget) is not None:
                answers.add(a)
    return sorted(answers)
