"""Sound FO / L-hard decision for fan-shaped 1-CQs (every solitary T-node
incomparable with the F-node).

The machinery abstracts skeletons through a finite type graph whose nodes are
segment-neighbourhood descriptions (parent's child labels, own incoming label,
own child labels). Periodic structures are realisable subgraphs split into
pre-periodic, periodic and post-periodic parts; their blow-ups glue central
segments the way budding does. The decision procedure colours type-graph nodes
(black: a root segment embeds into the single-type blow-up; blue: the
second player wins the pebble game), iterates the cuttable-at-depth-d edge
sets to a fixpoint, and finishes with the depth-1 root-neighbourhood check.
An exhaustive enumeration of periodic structures (small spans only) provides
the independent route through the h-conditions.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Dict, FrozenSet, Iterable, Iterator, List, Mapping, Optional, Sequence, Set, Tuple

from .errors import CapExceededError, ShapeViolationError
from .expansion import QuerySignature, iter_shapes, materialize
from .homs import ditree_hom, hom_exists
from .model import LabelledGraph, shape

DEFAULT_SPAN_LIMIT = 6


# --- segment types and the type graph -----------------------------------------


@dataclass(frozen=True, order=True)
class SegmentType:
    p: Tuple[int, ...]  # labels on the edges from the parent (sorted)
    i: int              # label on the incoming edge; 0 for root types
    c: Tuple[int, ...]  # labels on the edges to the children (sorted)

    def __post_init__(self):
        if self.i == 0:
            if self.p:
                raise ShapeViolationError("root types have an empty parent set")
        elif self.i not in self.p:
            raise ShapeViolationError("incoming label must belong to the parent set")

    @property
    def is_root(self) -> bool:
        return self.i == 0

    @property
    def is_leaf(self) -> bool:
        return not self.c

    def key(self) -> str:
        return f"P{''.join(map(str, self.p))}i{self.i}C{''.join(map(str, self.c))}"


@dataclass(frozen=True)
class TypeGraph:
    span: int
    nodes: Tuple[SegmentType, ...]
    edges: FrozenSet[Tuple[SegmentType, SegmentType, int]]

    def out(self, t: SegmentType, label: int) -> List[SegmentType]:
        return sorted(w for (s, w, j) in self.edges if s == t and j == label)


def _subsets(labels: Sequence[int]) -> List[Tuple[int, ...]]:
    out = []
    for r in range(len(labels) + 1):
        out.extend(itertools.combinations(labels, r))
    return out


def type_graph(span: int, span_limit: int = DEFAULT_SPAN_LIMIT) -> TypeGraph:
    """All segment types for the given span, with the constructive edge
    condition: (t, t') labelled j iff j in C(t), P(t') = C(t) and i(t') = j."""
    if span > span_limit:
        raise CapExceededError(f"span {span} exceeds the configured limit {span_limit}")
    labels = list(range(1, span + 1))
    nodes: List[SegmentType] = []
    for c in _subsets(labels):
        nodes.append(SegmentType(p=(), i=0, c=c))
    for p in _subsets(labels):
        if not p:
            continue
        for i in p:
            for c in _subsets(labels):
                nodes.append(SegmentType(p=p, i=i, c=c))
    edges = set()
    for t in nodes:
        for j in t.c:
            for t2 in nodes:
                if t2.p == t.c and t2.i == j:
                    edges.add((t, t2, j))
    return TypeGraph(span=span, nodes=tuple(sorted(nodes)), edges=frozenset(edges))


# --- segment variants ----------------------------------------------------------


def segment_variant(sig: QuerySignature, budded: Iterable[int], focus_a: bool) -> LabelledGraph:
    q = sig.graph
    changes: Dict[str, FrozenSet[str]] = {}
    if focus_a:
        changes[sig.focus] = (q.labels(sig.focus) - {"F"}) | {"A"}
    for j in budded:
        node = sig.buds[j - 1]
        changes[node] = (q.labels(node) - {"T"}) | {"A"}
    return q.relabel(changes)


def root_segment(sig: QuerySignature, budded: Iterable[int]) -> LabelledGraph:
    return segment_variant(sig, budded, focus_a=False)


def leaf_segment(sig: QuerySignature) -> LabelledGraph:
    return segment_variant(sig, (), focus_a=True)


def central_segment(sig: QuerySignature, t: SegmentType) -> LabelledGraph:
    return segment_variant(sig, t.c, focus_a=not t.is_root)


# --- typed subgraphs and blow-ups ----------------------------------------------


@dataclass(frozen=True)
class TypedSubgraph:
    """A subgraph-like structure over segment types; node ids allow fresh
    copies (acyclic versions) alongside the canonical one-node-per-type case."""

    nodes: Mapping[str, SegmentType]
    edges: FrozenSet[Tuple[str, str, int]]

    def induced(self, keep: Iterable[str]) -> "TypedSubgraph":
        keep = set(keep)
        return TypedSubgraph(
            nodes={v: t for v, t in self.nodes.items() if v in keep},
            edges=frozenset((s, t, j) for s, t, j in self.edges if s in keep and t in keep),
        )

    def out_slot(self, v: str, j: int) -> List[str]:
        return sorted(t for (s, t, jj) in self.edges if s == v and jj == j)

    @staticmethod
    def of_types(pairs: Iterable[Tuple[str, SegmentType]], edges: Iterable[Tuple[str, str, int]]) -> "TypedSubgraph":
        return TypedSubgraph(nodes=dict(pairs), edges=frozenset(edges))


class _UnionFind:
    def __init__(self):
        self.parent: Dict[str, str] = {}

    def find(self, x: str) -> str:
        self.parent.setdefault(x, x)
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a: str, b: str) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            # keep the lexicographically least representative for stable names
            lo, hi = sorted((ra, rb))
            self.parent[hi] = lo


@dataclass(frozen=True)
class BlowUp:
    graph: LabelledGraph
    seg_nodes: Mapping[str, Mapping[str, str]]          # subgraph node -> (qnode -> graph node)
    contact: Mapping[Tuple[str, str, int], str]          # subgraph edge -> glued graph node
    slot: Mapping[Tuple[str, int], str]                  # (subgraph node, label) -> graph node


def blow_up(h: TypedSubgraph, sig: QuerySignature) -> BlowUp:
    """One central segment per node, glued at A-nodes as the edges dictate:
    the parent's budded T-copy is identified with the child's focus copy."""
    for v, t in h.nodes.items():
        for j in t.c:
            if len(h.out_slot(v, j)) > 1:
                raise ShapeViolationError(f"node {v!r} has two outgoing edges labelled {j}")
    uf = _UnionFind()
    for (u, v, j) in h.edges:
        uf.union(f"{u}.{sig.buds[j - 1]}", f"{v}.{sig.focus}")
    raw_unary: Dict[str, Set[str]] = {}
    raw_edges: Set[Tuple[str, str, str]] = set()
    for v, t in h.nodes.items():
        seg = central_segment(sig, t)
        for qnode in seg.nodes:
            name = uf.find(f"{v}.{qnode}")
            raw_unary.setdefault(name, set()).update(seg.labels(qnode))
        for s, tgt, p in seg.edges:
            raw_edges.add((uf.find(f"{v}.{s}"), uf.find(f"{v}.{tgt}"), p))
    graph = LabelledGraph.build(
        nodes=raw_unary.keys() | {n for e in raw_edges for n in (e[0], e[1])},
        unary=raw_unary,
        edges=raw_edges,
    )
    seg_nodes = {
        v: {qnode: uf.find(f"{v}.{qnode}") for qnode in sig.graph.nodes} for v in h.nodes
    }
    contact = {(u, v, j): uf.find(f"{v}.{sig.focus}") for (u, v, j) in h.edges}
    slot = {
        (v, j): uf.find(f"{v}.{sig.buds[j - 1]}")
        for v, t in h.nodes.items()
        for j in t.c
    }
    return BlowUp(graph=graph, seg_nodes=seg_nodes, contact=contact, slot=slot)


def acyclic_version(h: TypedSubgraph) -> TypedSubgraph:
    """Open every cycle: an edge whose source is reachable from its target is
    redirected to a fresh childless copy of the target."""
    reach: Dict[str, Set[str]] = {v: {v} for v in h.nodes}
    changed = True
    while changed:
        changed = False
        for (s, t, _) in h.edges:
            before = len(reach[s])
            reach[s] |= reach[t]
            if len(reach[s]) != before:
                changed = True
    nodes = dict(h.nodes)
    edges = set()
    fresh_i = 0
    for (s, t, j) in sorted(h.edges):
        if s in reach[t]:  # t reaches s: this edge closes a cycle
            fresh = f"{t}#a{fresh_i}"
            fresh_i += 1
            nodes[fresh] = h.nodes[t]
            edges.add((s, fresh, j))
        else:
            edges.add((s, t, j))
    return TypedSubgraph(nodes=nodes, edges=frozenset(edges))


# --- periodic structures --------------------------------------------------------


@dataclass(frozen=True)
class PeriodicStructure:
    h: TypedSubgraph                       # B union P, realisable, single root-type source
    root: str
    b_nodes: FrozenSet[str]
    p_nodes: FrozenSet[str]
    r_nodes: FrozenSet[str]
    e_graphs: Mapping[str, TypedSubgraph]  # v in R -> acyclic realisable graph from v

    def describe(self) -> Dict[str, object]:
        return {
            "nodes": {v: t.key() for v, t in sorted(self.h.nodes.items())},
            "edges": sorted([s, t, j] for s, t, j in self.h.edges),
            "pre_periodic": sorted(self.b_nodes),
            "periodic": sorted(self.p_nodes),
            "post_periodic": {
                v: {
                    "nodes": {w: t.key() for w, t in sorted(g.nodes.items())},
                    "edges": sorted([s, t, j] for s, t, j in g.edges),
                }
                for v, g in sorted(self.e_graphs.items())
            },
        }


def _split_periodic(h: TypedSubgraph, root: str) -> Tuple[FrozenSet[str], FrozenSet[str]]:
    """B = nodes with bounded root-distance, P = nodes reachable from a cycle."""
    on_cycle = set()
    for v in h.nodes:
        stack = [t for (s, t, _) in h.edges if s == v]
        seen = set()
        while stack:
            x = stack.pop()
            if x == v:
                on_cycle.add(v)
                break
            if x in seen:
                continue
            seen.add(x)
            stack.extend(t for (s, t, _) in h.edges if s == x)
    p_nodes = set(on_cycle)
    changed = True
    while changed:
        changed = False
        for (s, t, _) in h.edges:
            if s in p_nodes and t not in p_nodes:
                p_nodes.add(t)
                changed = True
    return frozenset(set(h.nodes) - p_nodes), frozenset(p_nodes)


def _cycle_free(h: TypedSubgraph, nodes: Set[str]) -> bool:
    sub = h.induced(nodes)
    indeg = {v: 0 for v in sub.nodes}
    succ: Dict[str, List[str]] = {v: [] for v in sub.nodes}
    for (s, t, _) in sub.edges:
        succ[s].append(t)
        indeg[t] += 1
    queue = [v for v in sub.nodes if indeg[v] == 0]
    seen = 0
    while queue:
        v = queue.pop()
        seen += 1
        for t in succ[v]:
            indeg[t] -= 1
            if indeg[t] == 0:
                queue.append(t)
    return seen == len(sub.nodes)


def _enumerate_realisable(tg: TypeGraph, cap: int) -> Iterator[Tuple[TypedSubgraph, str]]:
    """All realisable subgraphs: one root-type source, every node reachable,
    every child slot filled by exactly one edge. Node ids are type keys."""
    count = 0
    for r in tg.nodes:
        if not r.is_root:
            continue
        root_id = r.key()

        def rec(nodes: Dict[str, SegmentType], edges: Set[Tuple[str, str, int]], pending: List[Tuple[str, int]]):
            nonlocal count
            if not pending:
                count += 1
                if count > cap:
                    raise CapExceededError("periodic-structure enumeration cap exceeded")
                yield TypedSubgraph(nodes=dict(nodes), edges=frozenset(edges))
                return
            (v, j), rest = pending[0], pending[1:]
            vt = nodes[v]
            for w in tg.out(vt, j):
                wid = w.key()
                if wid in nodes:
                    yield from rec(nodes, edges | {(v, wid, j)}, rest)
                else:
                    nodes2 = dict(nodes)
                    nodes2[wid] = w
                    pend2 = rest + [(wid, jj) for jj in w.c]
                    yield from rec(nodes2, edges | {(v, wid, j)}, pend2)

        for g in rec({root_id: r}, set(), [(root_id, j) for j in r.c]):
            yield g, root_id


def _enumerate_acyclic_from(tg: TypeGraph, start: SegmentType, cap: int) -> Iterator[TypedSubgraph]:
    """Acyclic realisable subgraphs with unique source ``start``."""
    start_id = start.key()
    count = 0

    def rec(nodes: Dict[str, SegmentType], edges: Set[Tuple[str, str, int]], pending: List[Tuple[str, int]]):
        nonlocal count
        if not pending:
            g = TypedSubgraph(nodes=dict(nodes), edges=frozenset(edges))
            if _cycle_free(g, set(g.nodes)):
                count += 1
                if count > cap:
                    raise CapExceededError("post-periodic enumeration cap exceeded")
                yield g
            return
        (v, j), rest = pending[0], pending[1:]
        vt = nodes[v]
        for w in tg.out(vt, j):
            wid = w.key()
            if wid == start_id:
                continue  # would create a second path into the source or a cycle
            if wid in nodes:
                extended = edges | {(v, wid, j)}
                if _cycle_free(TypedSubgraph(nodes=dict(nodes), edges=frozenset(extended)), set(nodes)):
                    yield from rec(nodes, extended, rest)
            else:
                nodes2 = dict(nodes)
                nodes2[wid] = w
                pend2 = rest + [(wid, jj) for jj in w.c]
                yield from rec(nodes2, edges | {(v, wid, j)}, pend2)

    yield from rec({start_id: start}, set(), [(start_id, j) for j in start.c])


def enumerate_periodic_structures(
    sig: QuerySignature, tg: TypeGraph, cap: int = 20000
) -> List[PeriodicStructure]:
    """Every periodic structure with non-empty periodic part, including all
    choices of the cycle-covering node set R and the post-periodic family."""
    if tg.span > 2:
        raise CapExceededError("exhaustive periodic-structure enumeration is limited to span <= 2")
    out: List[PeriodicStructure] = []
    for h, root in _enumerate_realisable(tg, cap):
        b_nodes, p_nodes = _split_periodic(h, root)
        if not p_nodes:
            continue
        candidates = sorted(p_nodes)
        for r_mask in range(1, 1 << len(candidates)):
            r_set = {candidates[i] for i in range(len(candidates)) if (r_mask >> i) & 1}
            if not _cycle_free(h, set(p_nodes) - r_set):
                continue  # R must intersect every directed cycle in P
            per_v_options: List[List[Tuple[str, TypedSubgraph]]] = []
            for v in sorted(r_set):
                opts = [(v, g) for g in _enumerate_acyclic_from(tg, h.nodes[v], cap)]
                per_v_options.append(opts)
            for combo in itertools.product(*per_v_options):
                out.append(
                    PeriodicStructure(
                        h=h,
                        root=root,
                        b_nodes=b_nodes,
                        p_nodes=p_nodes,
                        r_nodes=frozenset(r_set),
                        e_graphs={v: g for v, g in combo},
                    )
                )
                if len(out) > cap:
                    raise CapExceededError("periodic-structure enumeration cap exceeded")
    return out


# --- the h-conditions ------------------------------------------------------------


def _root_segment_embeds(sig: QuerySignature, target: LabelledGraph) -> bool:
    span = sig.span
    for budded in _subsets(range(1, span + 1)):
        if ditree_hom(root_segment(sig, budded), target) is not None:
            return True
    return False


def check_h_conditions(ps: PeriodicStructure, q: LabelledGraph) -> Dict[str, bool]:
    """Direct homomorphism checks of the four conditions:
    (h1) some cactus into the blow-up of the acyclic version of B union P;
    (h2) some root segment into the periodic part's blow-up;
    (h3) some root segment into a post-periodic blow-up;
    (h4) the leaf segment into the blow-up of B union P."""
    sig = QuerySignature.of(q)
    av = acyclic_version(ps.h)
    av_blow = blow_up(av, sig)
    h1 = False
    max_segments = len(av.nodes)
    for tree in iter_shapes(depth=max_segments, span=sig.span, max_segments=max_segments):
        c = materialize(q, tree)
        if hom_exists(c.graph, av_blow.graph) is not None:
            h1 = True
            break
    p_blow = blow_up(ps.h.induced(ps.p_nodes), sig)
    h2 = _root_segment_embeds(sig, p_blow.graph)
    h3 = any(
        _root_segment_embeds(sig, blow_up(g, sig).graph) for g in ps.e_graphs.values()
    )
    bp_blow = blow_up(ps.h, sig)
    h4 = ditree_hom(leaf_segment(sig), bp_blow.graph) is not None
    return {"h1": h1, "h2": h2, "h3": h3, "h4": h4}


# --- colouring: black nodes and the pebble game ----------------------------------


def black_nodes(sig: QuerySignature, tg: TypeGraph) -> Set[SegmentType]:
    out = set()
    for t in tg.nodes:
        single = TypedSubgraph.of_types([(t.key(), t)], [])
        if _root_segment_embeds(sig, blow_up(single, sig).graph):
            out.add(t)
    return out


def game_winners(tg: TypeGraph, black: Set[SegmentType]) -> Tuple[Set[SegmentType], Dict[SegmentType, int]]:
    """Least fixpoint of the first player's attractor: positions from which an
    acyclic all-slots strategy forces non-black leaf types while avoiding
    black nodes. Returns the winning set and a rank for strategy extraction."""
    win: Set[SegmentType] = set()
    rank: Dict[SegmentType, int] = {}
    level = 0
    changed = True
    while changed:
        changed = False
        level += 1
        for t in tg.nodes:
            if t in win or t in black:
                continue
            if all(any(w in win for w in tg.out(t, j)) for j in t.c):
                win.add(t)
                rank[t] = level
                changed = True
    return win, rank


def blue_nodes(tg: TypeGraph, black: Set[SegmentType]) -> Set[SegmentType]:
    win, _ = game_winners(tg, black)
    return {t for t in tg.nodes if t not in win}


def attractor_to_black(tg: TypeGraph, black: Set[SegmentType]) -> Set[SegmentType]:
    """Nodes from which the embedding player forces a black node no matter how
    the structure continues: some child slot has all its targets attracted."""
    attracted = set(black)
    changed = True
    while changed:
        changed = False
        for t in tg.nodes:
            if t in attracted:
                continue
            for j in t.c:
                targets = tg.out(t, j)
                if targets and all(w in attracted for w in targets):
                    attracted.add(t)
                    changed = True
                    break
    return attracted


def strategy_subgraph(tg: TypeGraph, win: Set[SegmentType], rank: Dict[SegmentType, int], start: SegmentType) -> TypedSubgraph:
    """The first player's positional strategy from a winning node, as an
    acyclic realisable subgraph (ranks strictly decrease along chosen edges)."""
    assert start in win
    nodes: Dict[str, SegmentType] = {start.key(): start}
    edges: Set[Tuple[str, str, int]] = set()
    queue = [start]
    seen = {start}
    while queue:
        t = queue.pop(0)
        for j in t.c:
            choices = [w for w in tg.out(t, j) if w in win]
            w = min(choices, key=lambda x: (rank[x], x))
            edges.add((t.key(), w.key(), j))
            if w not in seen:
                seen.add(w)
                nodes[w.key()] = w
                queue.append(w)
    return TypedSubgraph(nodes=nodes, edges=frozenset(edges))


# --- cuttable edges ----------------------------------------------------------------


def _slot_targets(tg: TypeGraph, t: SegmentType, j: int) -> List[SegmentType]:
    return tg.out(t, j)


def _pending_slot_cut(
    tg: TypeGraph,
    owner: SegmentType,
    j: int,
    cut_prev: Set[Tuple[SegmentType, SegmentType, int]],
    coloured: Set[SegmentType],
) -> bool:
    """A slot whose edge is not materialised is cuttable iff every admissible
    continuation edge is; admissible targets avoid coloured nodes unless the
    owner is a root type (whose children may be coloured)."""
    targets = _slot_targets(tg, owner, j)
    if not owner.is_root:
        targets = [w for w in targets if w not in coloured]
    return all((owner, w, j) in cut_prev for w in targets)


def _locale_hom_exists(
    sig: QuerySignature,
    anchor_contact: Optional[Tuple[str, str]],
    exclude_node: Optional[str],
    a_node_cut: Mapping[str, bool],
    bw: BlowUp,
) -> bool:
    """Is there a segment variant mapping into the locale blow-up with its
    focus on the contact, avoiding the excluded node, and with every budded
    A-image on a cuttable A-node?"""
    graph = bw.graph
    if exclude_node is not None:
        graph = graph.induced(set(graph.nodes) - {exclude_node})
    allowed_a = sorted(n for n, ok in a_node_cut.items() if ok and n in graph.nodes)
    span = sig.span
    for budded in _subsets(range(1, span + 1)):
        if anchor_contact is not None:
            seg = segment_variant(sig, budded, focus_a=True)
            anchor = {anchor_contact[0]: anchor_contact[1]}
        else:
            seg = root_segment(sig, budded)
            anchor = None
        domains = {sig.buds[j - 1]: allowed_a for j in budded}
        if ditree_hom(seg, graph, anchor=anchor, domains=domains) is not None:
            return True
    return False


def _a_node_statuses(
    sig: QuerySignature,
    tg: TypeGraph,
    bw: BlowUp,
    locale: TypedSubgraph,
    cut_prev: Set[Tuple[SegmentType, SegmentType, int]],
    coloured: Set[SegmentType],
) -> Dict[str, bool]:
    """Cut-status of every A-carrying node of a locale blow-up: materialised
    contacts consult the previous cut set directly; dangling slots require all
    admissible continuations cut."""
    status: Dict[str, bool] = {}
    for (u, v, j), node in bw.contact.items():
        tu, tv = locale.nodes[u], locale.nodes[v]
        status[node] = (tu, tv, j) in cut_prev
    for (v, j), node in bw.slot.items():
        if node in status:
            continue  # materialised contact
        status[node] = _pending_slot_cut(tg, locale.nodes[v], j, cut_prev, coloured)
    # an unglued non-root focus (the top of the locale) stays uncuttable
    return status


def _extensions(
    tg: TypeGraph, t: SegmentType, coloured: Set[SegmentType], allow_coloured: bool
) -> Optional[List[Dict[int, SegmentType]]]:
    """All one-step realisable completions of a node; None when some slot has
    no admissible target (no adversarial continuation exists)."""
    per_slot: List[List[Tuple[int, SegmentType]]] = []
    for j in t.c:
        targets = _slot_targets(tg, t, j)
        if not allow_coloured:
            targets = [w for w in targets if w not in coloured]
        if not targets:
            return None
        per_slot.append([(j, w) for w in targets])
    out = []
    for combo in itertools.product(*per_slot):
        out.append({j: w for j, w in combo})
    return out


def _edge_cuttable(
    sig: QuerySignature,
    tg: TypeGraph,
    edge: Tuple[SegmentType, SegmentType, int],
    cut_prev: Set[Tuple[SegmentType, SegmentType, int]],
    coloured: Set[SegmentType],
) -> bool:
    u, v, j0 = edge
    exts = _extensions(tg, v, coloured, allow_coloured=False)
    if exts is None:
        return True  # every continuation below v is forced through coloured nodes
    # The certificate may climb through the contact above u into the parent's
    # tail (the q8-style hom), so the parent segment is materialised. Its shape
    # only depends on P(u), so a single stand-in covers every ambient parent;
    # its focus is the recursion boundary and is excluded from images.
    parent_nodes: List[Tuple[str, SegmentType]] = []
    parent_edges: List[Tuple[str, str, int]] = []
    if not u.is_root:
        parent_nodes = [("p0", SegmentType(p=(), i=0, c=u.p))]
        parent_edges = [("p0", "u0", u.i)]
    for ext in exts:
        locale_nodes = parent_nodes + [("u0", u), ("v0", v)] + [
            (f"w{j}", w) for j, w in sorted(ext.items())
        ]
        locale_edges = parent_edges + [("u0", "v0", j0)] + [
            ("v0", f"w{j}", j) for j in sorted(ext)
        ]
        locale = TypedSubgraph.of_types(locale_nodes, locale_edges)
        bw = blow_up(locale, sig)
        contact = bw.contact[("u0", "v0", j0)]
        exclude = bw.seg_nodes["p0"][sig.focus] if parent_nodes else None
        statuses = _a_node_statuses(sig, tg, bw, locale, cut_prev, coloured)
        if parent_nodes:
            # the contact above u belongs to an unknown real parent: cuttable
            # only when every possible incoming edge is
            above = bw.contact[("p0", "u0", u.i)]
            statuses[above] = all(
                (p2, u, u.i) in cut_prev
                for (p2, uu, jj) in tg.edges
                if uu == u and jj == u.i
            )
        if not _locale_hom_exists(
            sig,
            anchor_contact=(sig.focus, contact),
            exclude_node=exclude,
            a_node_cut=statuses,
            bw=bw,
        ):
            return False
    return True


def cuttable_fixpoint(
    sig: QuerySignature, tg: TypeGraph, coloured: Set[SegmentType]
) -> Tuple[Set[Tuple[SegmentType, SegmentType, int]], int, List[Set[Tuple[SegmentType, SegmentType, int]]]]:
    """Iterate the cuttable-at-depth-d sets until no new edges appear.
    Returns the stable set, the stabilisation depth and the per-depth history."""
    cut_prev: Set[Tuple[SegmentType, SegmentType, int]] = set()
    history: List[Set[Tuple[SegmentType, SegmentType, int]]] = []
    d = 0
    while True:
        d += 1
        cut_new = {
            e for e in tg.edges if _edge_cuttable(sig, tg, e, cut_prev, coloured)
        }
        history.append(cut_new)
        if cut_new == cut_prev:
            return cut_prev, d - 1, history
        cut_prev = cut_new


# --- the decision -------------------------------------------------------------------


@dataclass(frozen=True)
class FoVerdict:
    fo: bool = True
    empirical_bound: Optional[int] = None
    empirical_truncated: bool = False

    def as_dict(self) -> Dict[str, object]:
        return {
            "verdict": "FO",
            "empirical_bound": self.empirical_bound,
            "empirical_truncated": self.empirical_truncated,
        }


@dataclass(frozen=True)
class LHardVerdict:
    fo: bool = False
    witness: Optional[PeriodicStructure] = None

    def as_dict(self) -> Dict[str, object]:
        return {
            "verdict": "L-hard",
            "witness": self.witness.describe() if self.witness else None,
        }


def _require_fan_shape(q: LabelledGraph) -> QuerySignature:
    rep = shape(q)
    if not rep.is_ditree or not rep.is_1cq or rep.lambda_span is None:
        raise ShapeViolationError(
            "the FO/L dichotomy requires a ditree 1-CQ whose solitary T-nodes "
            "are all incomparable with the F-node"
        )
    if any("A" in q.labels(n) for n in q.nodes):
        raise ShapeViolationError("queries must not use the reserved label A")
    return QuerySignature.of(q)


def _final_check(
    sig: QuerySignature,
    tg: TypeGraph,
    coloured: Set[SegmentType],
    cut: Set[Tuple[SegmentType, SegmentType, int]],
) -> List[Tuple[SegmentType, Dict[int, SegmentType]]]:
    """The depth-1 root-neighbourhood check; returns the failing completions
    (empty when every completion admits a root-segment hom over cuttable
    A-nodes, which certifies FO outright)."""
    failures: List[Tuple[SegmentType, Dict[int, SegmentType]]] = []
    for r in tg.nodes:
        if not r.is_root or not r.c:
            continue
        exts = _extensions(tg, r, coloured, allow_coloured=True)
        for ext in exts or []:
            locale_nodes = [("r0", r)] + [(f"w{j}", w) for j, w in sorted(ext.items())]
            locale_edges = [("r0", f"w{j}", j) for j in sorted(ext)]
            locale = TypedSubgraph.of_types(locale_nodes, locale_edges)
            bw = blow_up(locale, sig)
            statuses = _a_node_statuses(sig, tg, bw, locale, cut, coloured)
            ok = _locale_hom_exists(
                sig,
                anchor_contact=None,
                exclude_node=None,
                a_node_cut=statuses,
                bw=bw,
            )
            if not ok:
                failures.append((r, ext))
    return failures


def _simple_cycles(
    tg: TypeGraph, allowed: Sequence[SegmentType], cap: int
) -> List[Tuple[Tuple[SegmentType, SegmentType, int], ...]]:
    """Simple directed cycles over the allowed nodes, canonical start node."""
    order = {t: i for i, t in enumerate(sorted(allowed))}
    cycles: List[Tuple[Tuple[SegmentType, SegmentType, int], ...]] = []

    def dfs(start, node, on_path, path_edges):
        if len(cycles) > cap:
            raise CapExceededError("cycle enumeration cap exceeded")
        for j in node.c:
            for w in tg.out(node, j):
                if w not in order:
                    continue
                if w == start:
                    cycles.append(tuple(path_edges + [(node, w, j)]))
                elif w not in on_path and order[w] > order[start]:
                    dfs(start, w, on_path | {w}, path_edges + [(node, w, j)])

    for s in sorted(allowed):
        dfs(s, s, {s}, [])
    cycles.sort(key=lambda c: (len(c), c))
    return cycles


def _leafward_fill(
    tg: TypeGraph,
    nodes: Dict[str, SegmentType],
    edges: Set[Tuple[str, str, int]],
    into: Optional[Set[str]] = None,
) -> None:
    """Fill every open slot, preferring an edge into `into`, else a fresh leaf
    type (which always exists and keeps the addition acyclic). In place."""
    filled = {(s, j) for (s, _, j) in edges}
    queue = sorted(nodes)
    while queue:
        v = queue.pop(0)
        t = nodes[v]
        for j in t.c:
            if (v, j) in filled:
                continue
            filled.add((v, j))
            targets = _slot_targets(tg, t, j)
            chosen = None
            if into:
                for w in sorted(targets):
                    if w.key() in into:
                        chosen = w
                        break
            if chosen is None:
                chosen = SegmentType(p=t.c, i=j, c=())
            wid = chosen.key()
            edges.add((v, wid, j))
            if wid not in nodes:
                nodes[wid] = chosen
                queue.append(wid)


class _WitnessSearch:
    """Search for a periodic structure violating every h-condition.

    Any violating structure's periodic part contains a simple cycle over
    uncoloured non-root types whose blow-up does not absorb a root segment
    (the condition on the periodic part is monotone under growing it), so the
    search seeds on those cycles, grows their downward closures with the
    monotone prune, and attaches pre-/post-periodic parts.
    """

    def __init__(
        self,
        sig: QuerySignature,
        tg: TypeGraph,
        coloured: Set[SegmentType],
        win: Set[SegmentType],
        rank: Dict[SegmentType, int],
        cap: int,
    ):
        self.sig = sig
        self.tg = tg
        self.coloured = coloured
        self.win = win
        self.rank = rank
        self.cap = cap
        self.visited = 0
        self.admissible = [t for t in tg.nodes if not t.is_root and t not in coloured]

    def _tick(self) -> None:
        self.visited += 1
        if self.visited > self.cap:
            raise CapExceededError("witness search cap exceeded; verdict would be inconclusive")

    def _embeds(self, sub: TypedSubgraph) -> bool:
        return _root_segment_embeds(self.sig, blow_up(sub, self.sig).graph)

    def search(self) -> Optional[PeriodicStructure]:
        cycles = _simple_cycles(self.tg, self.admissible, self.cap)
        for cyc in cycles:
            self._tick()
            nodes = {}
            for (u, w, _) in cyc:
                nodes[u.key()] = u
                nodes[w.key()] = w
            edges = {(u.key(), w.key(), j) for (u, w, j) in cyc}
            seed = TypedSubgraph(nodes=nodes, edges=frozenset(edges))
            if self._embeds(seed):
                continue  # black cycle: any periodic part containing it is safe
            pending = sorted(
                (v, j)
                for v, t in nodes.items()
                for j in t.c
                if (v, j) not in {(s, jj) for (s, _, jj) in edges}
            )
            found = self._grow_closure(dict(nodes), set(edges), pending)
            if found is not None:
                return found
        return None

    def _grow_closure(
        self,
        nodes: Dict[str, SegmentType],
        edges: Set[Tuple[str, str, int]],
        pending: List[Tuple[str, int]],
    ) -> Optional[PeriodicStructure]:
        self._tick()
        if not pending:
            return self._assemble(TypedSubgraph(nodes=dict(nodes), edges=frozenset(edges)))
        (v, j), rest = pending[0], pending[1:]
        vt = nodes[v]
        targets = sorted(
            (w for w in _slot_targets(self.tg, vt, j) if w in set(self.admissible)),
            key=lambda w: (w.key() not in nodes, w),
        )
        for w in targets:
            wid = w.key()
            new_edge = (v, wid, j)
            if wid in nodes:
                candidate = TypedSubgraph(nodes=dict(nodes), edges=frozenset(edges | {new_edge}))
                if self._embeds(candidate):
                    continue  # monotone: every completion of this choice has h2
                found = self._grow_closure(nodes, edges | {new_edge}, rest)
            else:
                nodes2 = dict(nodes)
                nodes2[wid] = w
                candidate = TypedSubgraph(nodes=nodes2, edges=frozenset(edges | {new_edge}))
                if self._embeds(candidate):
                    continue
                found = self._grow_closure(
                    nodes2, edges | {new_edge}, rest + [(wid, jj) for jj in w.c]
                )
            if found is not None:
                return found
        return None

    def _assemble(self, p_graph: TypedSubgraph) -> Optional[PeriodicStructure]:
        """Attach a pre-periodic stem and the post-periodic strategy family to a
        closed periodic part, then validate every h-condition."""
        p_ids = set(p_graph.nodes)
        non_win = {v for v, t in p_graph.nodes.items() if t not in self.win}
        if not _cycle_free(p_graph, non_win):
            return None  # no cycle cover by game-winning nodes exists
        for stem in self._stems(p_graph):
            self._tick()
            nodes = dict(p_graph.nodes)
            edges = set(p_graph.edges)
            for (u, w, j) in stem:
                nodes[u.key()] = u
                nodes[w.key()] = w
                edges.add((u.key(), w.key(), j))
            root_id = stem[0][0].key()
            _leafward_fill(self.tg, nodes, edges, into=p_ids)
            h = TypedSubgraph(nodes=nodes, edges=frozenset(edges))
            b_nodes, p_nodes = _split_periodic(h, root_id)
            if p_nodes != p_ids:
                continue  # the stem fill accidentally enlarged the periodic part
            r_set = {v for v in p_nodes if h.nodes[v] in self.win}
            if not _cycle_free(h, set(p_nodes) - r_set):
                continue
            e_graphs = {
                v: strategy_subgraph(self.tg, self.win, self.rank, h.nodes[v])
                for v in sorted(r_set)
            }
            ps = PeriodicStructure(
                h=h,
                root=root_id,
                b_nodes=b_nodes,
                p_nodes=p_nodes,
                r_nodes=frozenset(r_set),
                e_graphs=e_graphs,
            )
            conditions = check_h_conditions(ps, self.sig.graph)
            if not (conditions["h1"] or conditions["h2"] or conditions["h3"]):
                return ps
        return None

    def _stems(self, p_graph: TypedSubgraph) -> Iterator[List[Tuple[SegmentType, SegmentType, int]]]:
        """Edge paths from a root type into the periodic part, shortest first."""
        p_ids = set(p_graph.nodes)
        for r in sorted(t for t in self.tg.nodes if t.is_root and t.c):
            frontier: List[Tuple[SegmentType, List[Tuple[SegmentType, SegmentType, int]]]] = [(r, [])]
            seen = {r}
            while frontier:
                node, path = frontier.pop(0)
                for j in node.c:
                    for w in sorted(self.tg.out(node, j)):
                        step = path + [(node, w, j)]
                        if w.key() in p_ids:
                            yield step
                        elif w not in seen and not w.is_root and len(step) < 6:
                            seen.add(w)
                            frontier.append((w, step))


def _fo_with_empirical_bound(q: LabelledGraph, empirical_d_max: int, empirical_cap: int) -> FoVerdict:
    from .expansion import NoWitnessUpTo, boundedness_witness

    result = boundedness_witness(
        q, d_max=empirical_d_max, probe_depth=empirical_d_max + 2, cap=empirical_cap
    )
    if isinstance(result, NoWitnessUpTo):
        return FoVerdict(empirical_bound=None, empirical_truncated=result.truncated)
    return FoVerdict(empirical_bound=result.d, empirical_truncated=result.truncated)


def decide_fo(
    q: LabelledGraph,
    max_span: int = DEFAULT_SPAN_LIMIT,
    empirical_d_max: int = 3,
    empirical_cap: int = 400,
    witness_cap: int = 200000,
):
    """FO-rewritability of the disjunctive program for a fan-shaped 1-CQ.

    The fixed-parameter pipeline (black/blue colouring, pebble game,
    cuttable-depth fixpoint, root-neighbourhood check) certifies FO directly.
    A failing completion is only trusted after an exhaustive adversarial
    search below it produces a periodic structure violating every
    h-condition; completions whose search comes up empty are spurious (the
    certifying homomorphism lay outside the check's locale).
    """
    sig = _require_fan_shape(q)
    if sig.span == 0:
        return FoVerdict(empirical_bound=0)
    tg = type_graph(sig.span, span_limit=max_span)
    black = black_nodes(sig, tg)
    coloured = attractor_to_black(tg, black)
    cut, _d_star, _history = cuttable_fixpoint(sig, tg, coloured)
    failing = _final_check(sig, tg, coloured, cut)
    if failing:
        win, rank = game_winners(tg, black)
        search = _WitnessSearch(sig, tg, coloured, win, rank, cap=witness_cap)
        witness = search.search()
        if witness is not None:
            return LHardVerdict(witness=witness)
    return _fo_with_empirical_bound(q, empirical_d_max, empirical_cap)
