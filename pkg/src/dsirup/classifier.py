"""Data-complexity classification of disjunctive sirups with ditree CQs.

The prechecks apply the general rewritability facts (no solitary F: FO; one
solitary F: datalog / P; one of each: linear datalog / NL; quasi-symmetric:
symmetric linear datalog / L). On top of those, minimal ditree CQs get the
NL-hardness criterion (a comparable solitary pair, or twin-free and not
quasi-symmetric), one-F-one-T queries get the full FO / L-complete /
NL-complete trichotomy via the three-copy contact structure, and fan-shaped
queries with more solitary T-nodes dispatch to the FO / L-hard dichotomy.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

from .errors import ShapeViolationError
from .homs import hom_exists
from .model import (
    LabelledGraph,
    TreeIndex,
    core_ditree,
    is_quasi_symmetric,
    shape,
    solitary_pairs,
    SolitaryPair,
)

EXACT_FO = "FO"
EXACT_L = "L-complete"
EXACT_NL = "NL-complete"


@dataclass(frozen=True)
class Classification:
    exact: Optional[str]
    lower_bounds: Tuple[str, ...]
    upper_bounds: Tuple[str, ...]
    provenance: Tuple[Tuple[str, str], ...]
    witnesses: Tuple[Dict[str, object], ...] = ()
    warnings: Tuple[str, ...] = ()

    def __post_init__(self):
        if self.exact == EXACT_FO:
            assert "NL-hard" not in self.lower_bounds and "L-hard" not in self.lower_bounds
        if self.exact == EXACT_L:
            assert "NL-hard" not in self.lower_bounds

    def as_dict(self) -> Dict[str, object]:
        return {
            "exact": self.exact,
            "lower_bounds": sorted(self.lower_bounds),
            "upper_bounds": sorted(self.upper_bounds),
            "provenance": [list(p) for p in self.provenance],
            "witnesses": list(self.witnesses),
            "warnings": list(self.warnings),
        }


@dataclass(frozen=True)
class NLHardnessWitness:
    pair: SolitaryPair
    rationale: str  # "comparable" | "asymmetric"

    def as_dict(self) -> Dict[str, object]:
        return {
            "t": self.pair.t,
            "f": self.pair.f,
            "rationale": self.rationale,
        }


def precheck(q: LabelledGraph) -> Classification:
    """The rewritability ladder read off the solitary-node counts."""
    rep = shape(q)
    n_f = len(rep.solitary_f)
    n_t = len(rep.solitary_t)
    if n_f == 0:
        return Classification(
            exact=EXACT_FO,
            lower_bounds=(),
            upper_bounds=(EXACT_FO,),
            provenance=(("no-solitary-f", "covering side is vacuous"),),
        )
    if n_f >= 2:
        return Classification(
            exact=None,
            lower_bounds=(),
            upper_bounds=("coNP",),
            provenance=(("conp-ceiling", "certain answers of a covering program"),),
        )
    upper = ["P"]
    provenance = [("datalog-rewritable", "single solitary F")]
    if n_t == 1:
        upper.append("NL")
        provenance.append(("linear-datalog-rewritable", "single solitary T"))
        if rep.is_ditree and is_quasi_symmetric(q):
            upper.append("L")
            provenance.append(("symmetric-linear-datalog", "quasi-symmetric"))
    return Classification(
        exact=None,
        lower_bounds=(),
        upper_bounds=tuple(upper),
        provenance=tuple(provenance),
    )


def _eligible_comparable(q: LabelledGraph, idx: TreeIndex, pairs: List[SolitaryPair]) -> Optional[SolitaryPair]:
    """A comparable pair with no solitary T- or F-node strictly between."""
    eligible = []
    for p in pairs:
        if not p.comparable:
            continue
        lo, hi = (p.t, p.f) if idx.leq(p.t, p.f) else (p.f, p.t)
        between = [
            n
            for n in idx.ancestors(hi)
            if n not in (lo, hi) and idx.leq(lo, n)
        ]
        if any(
            ("T" in q.labels(n)) != ("F" in q.labels(n))  # solitary of either kind
            for n in between
        ):
            continue
        eligible.append(p)
    if not eligible:
        return None
    return min(eligible, key=lambda p: (p.t, p.f))


def nl_hardness(q: LabelledGraph) -> Optional[NLHardnessWitness]:
    """The NL-hardness criterion for minimal ditree CQs with solitary nodes of
    both kinds: a comparable solitary pair, or, for twin-free queries that are
    not quasi-symmetric, a minimal-distance asymmetric incomparable pair."""
    rep = shape(q)
    if not rep.is_ditree:
        raise ShapeViolationError("NL-hardness criterion requires a ditree CQ")
    if not rep.solitary_f or not rep.solitary_t:
        raise ShapeViolationError("need at least one solitary node of each kind")
    _, minimal = core_ditree(q)
    if not minimal:
        raise ShapeViolationError("query must be minimal; core it first")
    idx = TreeIndex(q)
    pairs = solitary_pairs(q)
    comparable = _eligible_comparable(q, idx, pairs)
    if comparable is not None:
        return NLHardnessWitness(pair=comparable, rationale="comparable")
    if not rep.ft_twins and not is_quasi_symmetric(q):
        dmin = min(p.distance for p in pairs)
        cands = [p for p in pairs if p.distance == dmin and not p.symmetric]
        if cands:
            return NLHardnessWitness(
                pair=min(cands, key=lambda p: (p.t, p.f)), rationale="asymmetric"
            )
    return None


@dataclass(frozen=True)
class ContactStructure:
    """Three glued copies of the query around a solitary pair, plus the two
    uniform total models (all contacts T, or all contacts F)."""

    graph: LabelledGraph
    contacts: Tuple[str, ...]

    def model(self, kind: str) -> LabelledGraph:
        if kind not in ("FF", "TT"):
            raise ValueError("kind must be 'FF' or 'TT'")
        label = "F" if kind == "FF" else "T"
        return self.graph.relabel(
            {c: self.graph.labels(c) | {label} for c in self.contacts}
        )


def contact_structure(q: LabelledGraph, t: str, f: str) -> ContactStructure:
    """Copies q^-1, q^0, q^+1 glued at t^0 = f^-1 and f^0 = t^+1; every copy's
    designated t/f node is relabelled A as in the hardness reductions."""
    copies = []
    for idx_copy in range(3):
        mapping = {n: f"c{idx_copy}_{n}" for n in q.nodes}
        g = q.rename(mapping)
        g = g.relabel(
            {
                mapping[t]: (g.labels(mapping[t]) - {"T"}) | {"A"},
                mapping[f]: (g.labels(mapping[f]) - {"F"}) | {"A"},
            }
        )
        copies.append((g, mapping))
    glue = {
        copies[0][1][f]: "left_contact",
        copies[1][1][t]: "left_contact",
        copies[1][1][f]: "right_contact",
        copies[2][1][t]: "right_contact",
    }
    graph = copies[0][0].union(copies[1][0]).union(copies[2][0]).rename(glue)
    contacts = (
        copies[0][1][t],      # outer left
        "left_contact",
        "right_contact",
        copies[2][1][f],      # outer right
    )
    return ContactStructure(graph=graph, contacts=contacts)


def trichotomy_1f1t(q: LabelledGraph) -> Classification:
    """FO / L-complete / NL-complete for a minimal ditree CQ with exactly one
    solitary F and one solitary T."""
    rep = shape(q)
    if not rep.is_ditree or len(rep.solitary_f) != 1 or len(rep.solitary_t) != 1:
        raise ShapeViolationError("trichotomy requires a ditree CQ with one solitary F and one solitary T")
    _, minimal = core_ditree(q)
    if not minimal:
        raise ShapeViolationError("query must be minimal; core it first")
    pair = solitary_pairs(q)[0]
    if pair.comparable:
        return Classification(
            exact=EXACT_NL,
            lower_bounds=("NL-hard",),
            upper_bounds=("NL",),
            provenance=(
                ("linear-datalog-rewritable", "single solitary T"),
                ("nl-hardness", "comparable solitary pair"),
            ),
            witnesses=(NLHardnessWitness(pair, "comparable").as_dict(),),
        )
    if is_quasi_symmetric(q):
        return Classification(
            exact=EXACT_L,
            lower_bounds=("L-hard",),
            upper_bounds=("L",),
            provenance=(
                ("symmetric-linear-datalog", "quasi-symmetric"),
                ("l-hardness", "undirected-reachability reduction"),
            ),
        )
    cs = contact_structure(q, pair.t, pair.f)
    hom_ff = hom_exists(q, cs.model("FF"))
    hom_tt = hom_exists(q, cs.model("TT"))
    if hom_ff is not None or hom_tt is not None:
        which = "FF" if hom_ff is not None else "TT"
        witness = hom_ff if hom_ff is not None else hom_tt
        return Classification(
            exact=EXACT_FO,
            lower_bounds=(),
            upper_bounds=(EXACT_FO,),
            provenance=(("contact-model", f"query maps into the {which} model"),),
            witnesses=({"model": which, "hom": dict(witness.mapping)},),
        )
    return Classification(
        exact=EXACT_NL,
        lower_bounds=("NL-hard",),
        upper_bounds=("NL",),
        provenance=(
            ("linear-datalog-rewritable", "single solitary T"),
            ("contact-model", "query maps into neither uniform model"),
        ),
        witnesses=(NLHardnessWitness(pair, "asymmetric").as_dict(),),
    )


def classify(q: LabelledGraph, max_span: int = 6) -> Classification:
    """Full dispatch; non-minimal ditree inputs are cored with a warning."""
    warnings: List[str] = []
    rep = shape(q)
    if rep.is_ditree:
        core, minimal = core_ditree(q)
        if not minimal:
            warnings.append("input was not minimal; classified its core")
            q = core
            rep = shape(q)

    base = precheck(q)
    if base.exact is not None:
        return _with_warnings(base, warnings)
    n_f, n_t = len(rep.solitary_f), len(rep.solitary_t)
    if n_f >= 2 or not rep.is_ditree:
        out = Classification(
            exact=None,
            lower_bounds=(),
            upper_bounds=base.upper_bounds,
            provenance=base.provenance + (("no-criterion", "shape outside the decided fragments"),),
        )
        return _with_warnings(out, warnings)

    # ditree with exactly one solitary F from here on
    if n_t == 0:
        out = Classification(
            exact=EXACT_FO,
            lower_bounds=(),
            upper_bounds=(EXACT_FO,),
            provenance=(("single-expansion", "no solitary T: the query is its own rewriting"),),
        )
        return _with_warnings(out, warnings)
    if n_t == 1:
        return _with_warnings(trichotomy_1f1t(q), warnings)

    if rep.lambda_span is not None:
        from .fo_dichotomy import decide_fo

        verdict = decide_fo(q, max_span=max_span)
        if verdict.fo:
            out = Classification(
                exact=EXACT_FO,
                lower_bounds=(),
                upper_bounds=(EXACT_FO,),
                provenance=(("fan-dichotomy", "FO side of the FO/L-hardness dichotomy"),),
                witnesses=(verdict.as_dict(),),
            )
            return _with_warnings(out, warnings)
        lower = ["L-hard"]
        provenance = [
            ("fan-dichotomy", "L-hard side of the FO/L-hardness dichotomy"),
            ("datalog-rewritable", "single solitary F"),
        ]
        witnesses: List[Dict[str, object]] = [verdict.as_dict()]
        if not rep.ft_twins:
            nl = nl_hardness(q)
            if nl is not None:
                lower.append("NL-hard")
                provenance.append(("nl-hardness", nl.rationale))
                witnesses.append(nl.as_dict())
        out = Classification(
            exact=None,
            lower_bounds=tuple(lower),
            upper_bounds=("P",),
            provenance=tuple(provenance),
            witnesses=tuple(witnesses),
        )
        return _with_warnings(out, warnings)

    # one solitary F, several solitary T, some comparable with F
    nl = nl_hardness(q)
    if nl is not None and _uniform_t_chain_path(q, rep):
        out = Classification(
            exact=EXACT_NL,
            lower_bounds=("NL-hard",),
            upper_bounds=("NL",),
            provenance=(
                ("path-classification", "uniform-predicate solitary-T chain into F"),
                ("nl-hardness", nl.rationale),
            ),
            witnesses=(nl.as_dict(),),
        )
        return _with_warnings(out, warnings)
    lower = ()
    provenance = list(base.provenance)
    witnesses = ()
    if nl is not None:
        lower = ("NL-hard",)
        provenance.append(("nl-hardness", nl.rationale))
        witnesses = (nl.as_dict(),)
    out = Classification(
        exact=None,
        lower_bounds=lower,
        upper_bounds=("P",),
        provenance=tuple(provenance),
        witnesses=witnesses,
    )
    return _with_warnings(out, warnings)


def _uniform_t_chain_path(q: LabelledGraph, rep) -> bool:
    """A twin-free path over one binary predicate whose nodes are the solitary
    T-chain followed by the solitary F (the reported NL-complete path family)."""
    if not rep.is_path or rep.ft_twins or len(rep.solitary_f) != 1:
        return False
    if len(q.binary_predicates()) != 1:
        return False
    idx = TreeIndex(q)
    ordered = idx.order  # root downwards along the path
    if len(ordered) != len(rep.solitary_t) + 1:
        return False
    return (
        all(q.labels(n) == frozenset({"T"}) for n in ordered[:-1])
        and q.labels(ordered[-1]) == frozenset({"F"})
    )


def _with_warnings(c: Classification, warnings: List[str]) -> Classification:
    if not warnings:
        return c
    return Classification(
        exact=c.exact,
        lower_bounds=c.lower_bounds,
        upper_bounds=c.upper_bounds,
        provenance=c.provenance,
        witnesses=c.witnesses,
        warnings=tuple(warnings),
    )
