"""Homomorphism search between labelled graphs.

Two engines share one contract: a polynomial bottom-up dynamic program for
ditree sources and general backtracking with forward checking. Both support
anchor constraints (required images), forbidden images and externally
restricted domains, and both are deterministic: variables are ordered by
descending degree with identifier tie-breaks, and candidate targets are tried
in sorted order.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Set, Tuple

from .errors import BudgetExceededError, NotADitreeError
from .model import LabelledGraph, TreeIndex, try_tree_index

DEFAULT_BUDGET = 10**6


@dataclass(frozen=True)
class Hom:
    mapping: Mapping[str, str]

    def serialize(self) -> str:
        return "\n".join(f"{k}={v}" for k, v in sorted(self.mapping.items())) + "\n"


AnchorConstraint = Mapping[str, str]


def verify_hom(source: LabelledGraph, target: LabelledGraph, mapping: Mapping[str, str]) -> bool:
    for n in source.nodes:
        if n not in mapping or mapping[n] not in target.nodes:
            return False
        if not source.labels(n) <= target.labels(mapping[n]):
            return False
    for s, t, p in source.edges:
        if (mapping[s], mapping[t], p) not in target.edges:
            return False
    return True


def compose(inner: Hom, outer: Hom) -> Hom:
    """outer after inner: a verified A->B hom composed with B->C gives A->C."""
    return Hom({k: outer.mapping[v] for k, v in inner.mapping.items()})


class _TargetIndex:
    def __init__(self, g: LabelledGraph):
        self.g = g
        self.out_edges: Dict[Tuple[str, str], Set[str]] = {}
        self.in_edges: Dict[Tuple[str, str], Set[str]] = {}
        self.out_preds: Dict[str, Set[str]] = {n: set() for n in g.nodes}
        self.in_preds: Dict[str, Set[str]] = {n: set() for n in g.nodes}
        for s, t, p in g.edges:
            self.out_edges.setdefault((s, p), set()).add(t)
            self.in_edges.setdefault((t, p), set()).add(s)
            self.out_preds[s].add(p)
            self.in_preds[t].add(p)
        self._outs_cache: Dict[Tuple[str, FrozenSet[str]], FrozenSet[str]] = {}
        self._ins_cache: Dict[Tuple[str, FrozenSet[str]], FrozenSet[str]] = {}

    def outs(self, node: str, preds: FrozenSet[str]) -> FrozenSet[str]:
        """Targets reachable from the node along every predicate in the set."""
        key = (node, preds)
        got = self._outs_cache.get(key)
        if got is None:
            sets = [self.out_edges.get((node, p), set()) for p in preds]
            got = frozenset(set.intersection(*sets)) if sets else frozenset()
            self._outs_cache[key] = got
        return got

    def ins(self, node: str, preds: FrozenSet[str]) -> FrozenSet[str]:
        key = (node, preds)
        got = self._ins_cache.get(key)
        if got is None:
            sets = [self.in_edges.get((node, p), set()) for p in preds]
            got = frozenset(set.intersection(*sets)) if sets else frozenset()
            self._ins_cache[key] = got
        return got


def _initial_domains(
    source: LabelledGraph,
    tix: _TargetIndex,
    anchor: Optional[AnchorConstraint],
    forbid: Optional[Mapping[str, Iterable[str]]],
    domains: Optional[Mapping[str, Iterable[str]]],
) -> Optional[Dict[str, List[str]]]:
    src_out: Dict[str, Set[str]] = {n: set() for n in source.nodes}
    src_in: Dict[str, Set[str]] = {n: set() for n in source.nodes}
    for s, t, p in source.edges:
        src_out[s].add(p)
        src_in[t].add(p)
    out: Dict[str, List[str]] = {}
    for n in sorted(source.nodes):
        cands = [
            c
            for c in sorted(tix.g.nodes)
            if source.labels(n) <= tix.g.labels(c)
            and src_out[n] <= tix.out_preds[c]
            and src_in[n] <= tix.in_preds[c]
        ]
        if anchor and n in anchor:
            cands = [c for c in cands if c == anchor[n]]
        if forbid and n in forbid:
            banned = set(forbid[n])
            cands = [c for c in cands if c not in banned]
        if domains and n in domains:
            allowed = set(domains[n])
            cands = [c for c in cands if c in allowed]
        if not cands:
            return None
        out[n] = cands
    return out


def _arc_consistency(
    source: LabelledGraph, tix: _TargetIndex, doms: Dict[str, List[str]]
) -> bool:
    """AC-3 style pruning over the binary edge constraints; returns False on wipeout."""
    constraints: Dict[Tuple[str, str], Set[str]] = {}
    for s, t, p in source.edges:
        constraints.setdefault((s, t), set()).add(p)
    neighbours: Dict[str, Set[Tuple[str, str]]] = {n: set() for n in source.nodes}
    for (s, t) in constraints:
        neighbours[s].add((s, t))
        neighbours[t].add((s, t))

    queue = list(constraints.keys())
    in_queue = set(queue)
    while queue:
        s, t = queue.pop()
        in_queue.discard((s, t))
        preds = frozenset(constraints[(s, t)])
        dom_t = set(doms[t])
        keep_s = [a for a in doms[s] if not tix.outs(a, preds).isdisjoint(dom_t)]
        changed_nodes = []
        if len(keep_s) != len(doms[s]):
            if not keep_s:
                return False
            doms[s] = keep_s
            changed_nodes.append(s)
        dom_s = set(doms[s])
        keep_t = [b for b in doms[t] if not tix.ins(b, preds).isdisjoint(dom_s)]
        if len(keep_t) != len(doms[t]):
            if not keep_t:
                return False
            doms[t] = keep_t
            changed_nodes.append(t)
        for n in changed_nodes:
            for arc in neighbours[n]:
                if arc not in in_queue:
                    queue.append(arc)
                    in_queue.add(arc)
    return True


def backtracking_hom(
    source: LabelledGraph,
    target: LabelledGraph,
    anchor: Optional[AnchorConstraint] = None,
    forbid: Optional[Mapping[str, Iterable[str]]] = None,
    domains: Optional[Mapping[str, Iterable[str]]] = None,
    injective: bool = False,
    require_surjective: bool = False,
    budget: int = DEFAULT_BUDGET,
) -> Optional[Hom]:
    """General backtracking with forward checking.

    Raises BudgetExceededError when the candidate-extension budget runs out;
    that verdict is distinct from "no homomorphism".
    """
    if anchor:
        for n, c in anchor.items():
            if n not in source.nodes or c not in target.nodes:
                return None
    if require_surjective and len(source.nodes) < len(target.nodes):
        return None
    tix = _TargetIndex(target)
    doms = _initial_domains(source, tix, anchor, forbid, domains)
    if doms is None:
        return None
    if not _arc_consistency(source, tix, doms):
        return None

    degree = {n: 0 for n in source.nodes}
    for s, t, _ in source.edges:
        degree[s] += 1
        if t != s:
            degree[t] += 1
    order = sorted(source.nodes, key=lambda n: (-degree[n], n))
    pos = {n: i for i, n in enumerate(order)}
    constraints: Dict[Tuple[str, str], Set[str]] = {}
    for s, t, p in source.edges:
        constraints.setdefault((s, t), set()).add(p)
    # adjacency grouped by whether the partner comes earlier or later
    fwd: Dict[str, List[Tuple[str, FrozenSet[str], bool]]] = {n: [] for n in order}
    for (s, t), preds in constraints.items():
        pf = frozenset(preds)
        if pos[s] < pos[t]:
            fwd[s].append((t, pf, True))   # s assigned first; prune t's domain
        else:
            fwd[t].append((s, pf, False))  # t assigned first; prune s's domain

    assignment: Dict[str, str] = {}
    used: Set[str] = set()
    budget_left = [budget]

    def consistent_pair(a_src: str, a_img: str, b_src: str, b_img: str) -> bool:
        preds = constraints.get((a_src, b_src))
        if preds and not all(b_img in tix.out_edges.get((a_img, p), frozenset()) for p in preds):
            return False
        preds = constraints.get((b_src, a_src))
        if preds and not all(a_img in tix.out_edges.get((b_img, p), frozenset()) for p in preds):
            return False
        return True

    def search(i: int, live: Dict[str, List[str]]) -> Optional[Dict[str, str]]:
        if i == len(order):
            if require_surjective and len(set(assignment.values())) != len(target.nodes):
                return None
            return dict(assignment)
        n = order[i]
        for c in live[n]:
            if injective and c in used:
                continue
            if budget_left[0] <= 0:
                raise BudgetExceededError("homomorphism search budget exceeded")
            budget_left[0] -= 1
            assignment[n] = c
            used.add(c)
            pruned: Dict[str, List[str]] = {}
            ok = True
            for partner, preds, n_is_src in fwd[n]:
                if partner in assignment:
                    continue
                allowed = tix.outs(c, preds) if n_is_src else tix.ins(c, preds)
                newdom = [x for x in live[partner] if x in allowed]
                if not newdom:
                    ok = False
                    break
                pruned[partner] = newdom
            if ok:
                # check against already-assigned partners (covers both directions)
                for m, img in assignment.items():
                    if m == n:
                        continue
                    if not consistent_pair(n, c, m, img):
                        ok = False
                        break
            if ok:
                nxt = dict(live)
                nxt.update(pruned)
                result = search(i + 1, nxt)
                if result is not None:
                    return result
            del assignment[n]
            used.discard(c)
        return None

    found = search(0, doms)
    if found is None:
        return None
    hom = Hom(found)
    assert verify_hom(source, target, hom.mapping)
    return hom


def ditree_hom(
    source: LabelledGraph,
    target: LabelledGraph,
    anchor: Optional[AnchorConstraint] = None,
    forbid: Optional[Mapping[str, Iterable[str]]] = None,
    domains: Optional[Mapping[str, Iterable[str]]] = None,
) -> Optional[Hom]:
    """Bottom-up candidate propagation for ditree sources; O(|src| * |tgt|^2)."""
    idx = TreeIndex(source)  # raises NotADitreeError for non-trees
    tix = _TargetIndex(target)
    init = _initial_domains(source, tix, anchor, forbid, domains)
    if init is None:
        return None
    cand: Dict[str, List[str]] = {}
    for n in reversed(idx.order):  # children before parents
        ok_targets = []
        for c in init[n]:
            good = True
            for child in idx.children[n]:
                preds = source.pair_preds(n, child)
                if not any(
                    all(cc in tix.out_edges.get((c, p), frozenset()) for p in preds)
                    for cc in cand[child]
                ):
                    good = False
                    break
            if good:
                ok_targets.append(c)
        if not ok_targets:
            return None
        cand[n] = ok_targets
    mapping: Dict[str, str] = {idx.root: cand[idx.root][0]}
    for n in idx.order:
        img = mapping[n]
        for child in idx.children[n]:
            preds = source.pair_preds(n, child)
            for cc in cand[child]:
                if all(cc in tix.out_edges.get((img, p), frozenset()) for p in preds):
                    mapping[child] = cc
                    break
    hom = Hom(mapping)
    assert verify_hom(source, target, hom.mapping)
    return hom


def hom_exists(
    source: LabelledGraph,
    target: LabelledGraph,
    anchor: Optional[AnchorConstraint] = None,
    forbid: Optional[Mapping[str, Iterable[str]]] = None,
    domains: Optional[Mapping[str, Iterable[str]]] = None,
    budget: int = DEFAULT_BUDGET,
) -> Optional[Hom]:
    """Witness mapping or None; ditree sources dispatch to the dynamic program."""
    if try_tree_index(source) is not None:
        return ditree_hom(source, target, anchor=anchor, forbid=forbid, domains=domains)
    return backtracking_hom(
        source, target, anchor=anchor, forbid=forbid, domains=domains, budget=budget
    )


@dataclass(frozen=True)
class FocusReport:
    holds_up_to_depth: bool
    depth: int
    counterexample: Optional[Tuple[object, object, Hom]]
    truncated: bool


def check_focused(q: LabelledGraph, depth: int, cap: int = 10000, budget: int = DEFAULT_BUDGET) -> FocusReport:
    """Search for a cactus-to-cactus homomorphism moving the root-focus.

    Enumerates all cactus pairs up to the given depth (subject to the
    enumeration cap) and reports the first hom with h(r) != r, else holds.
    """
    from .expansion import cactuses_up_to  # cycle: expansion builds on homs

    if depth < 1:
        raise ValueError("depth must be >= 1")
    enum = cactuses_up_to(q, depth, cap=cap)
    for c in enum.cactuses:
        for c2 in enum.cactuses:
            focus_targets = [
                n
                for n in c2.graph.nodes
                if "F" in c2.graph.labels(n) and n != c2.root_focus
            ]
            if not focus_targets:
                continue
            h = backtracking_hom(
                c.graph,
                c2.graph,
                forbid={c.root_focus: [c2.root_focus]},
                budget=budget,
            )
            if h is not None:
                return FocusReport(
                    holds_up_to_depth=False,
                    depth=depth,
                    counterexample=(c, c2, h),
                    truncated=enum.truncated,
                )
    return FocusReport(holds_up_to_depth=True, depth=depth, counterexample=None, truncated=enum.truncated)
