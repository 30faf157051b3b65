"""Command-line front end: JSON reports over every subsystem.

Exit codes: 0 when a verdict was produced (even a negative one), 1 on input
errors, 2 when a cap or budget was exceeded. Reports are byte-identical for
identical inputs and flags, apart from the timing field.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from pathlib import Path
from typing import Dict, List, Optional

from . import classifier, datalog, expansion, fo_dichotomy, gadgets, model, reductions
from .errors import BudgetExceededError, CapExceededError, DsirupError, ParseError


def _sha256(path: str) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _load_graph(path: str) -> model.LabelledGraph:
    return model.parse(Path(path).read_text())


def _report(command: str, inputs: Dict[str, str], verdict, witnesses=None, caps_hit=False, started=None) -> Dict:
    hashes = {}
    for p in inputs.values():
        if p and Path(p).is_file():
            hashes[p] = _sha256(p)
    return {
        "command": command,
        "inputs": hashes,
        "verdict": verdict,
        "witnesses": witnesses or [],
        "caps_hit": caps_hit,
        "timing": round(time.time() - started, 6) if started else None,
    }


def _emit(report: Dict) -> None:
    print(json.dumps(report, sort_keys=True, indent=2))


def _cmd_validate(args) -> Dict:
    g = _load_graph(args.query)
    rep = model.shape(g)
    return {
        "shape": rep.as_dict(),
        "atoms": g.atom_count(),
        "nodes": len(g.nodes),
    }


def _cmd_classify(args) -> Dict:
    g = _load_graph(args.query)
    c = classifier.classify(g, max_span=args.max_span)
    out = c.as_dict()
    out["shape"] = model.shape(g).as_dict()
    return out


def _cmd_bounded(args, outdir: Optional[Path]) -> Dict:
    g = _load_graph(args.query)
    verdict = fo_dichotomy.decide_fo(g, max_span=args.max_span)
    out = verdict.as_dict()
    if args.emit_witness and not verdict.fo and outdir is not None:
        outdir.mkdir(parents=True, exist_ok=True)
        sig = expansion.QuerySignature.of(g)
        ps = verdict.witness
        files = {}
        pieces = {
            "periodic": ps.h.induced(ps.p_nodes),
            "pre_and_periodic": ps.h,
        }
        for v, hv in ps.e_graphs.items():
            pieces[f"post_{v}"] = hv
        for name, sub in pieces.items():
            bw = fo_dichotomy.blow_up(sub, sig)
            path = outdir / f"witness_{name}.data"
            path.write_text(model.serialize(bw.graph))
            files[name] = str(path)
        out["witness_files"] = files
    return out


def _cmd_evaluate(args) -> Dict:
    q = _load_graph(args.query)
    d = _load_graph(args.data)
    if args.program in ("delta", "delta+"):
        result = datalog.evaluate_delta(
            q, d, disjointness=(args.program == "delta+"), max_a_nodes=args.max_a_nodes
        )
        return {
            "answer": result.answer,
            "assignments_checked": result.assignments_checked,
            "inconsistent_skipped": result.inconsistent_skipped,
            "failing_assignment": dict(result.failing_assignment)
            if result.failing_assignment
            else None,
        }
    progs = datalog.build_programs(q)
    closure = datalog.fixpoint(progs[args.program], d)
    return {
        "answer": closure.goal if args.program == "pi" else None,
        "derived": sorted(closure.p_facts),
        "rounds": closure.rounds,
    }


def _cmd_rewrite(args, outdir: Optional[Path]) -> Dict:
    q = _load_graph(args.query)
    ucq = expansion.ucq_rewriting(q, d=args.depth, target=args.target, cap=args.cap)
    disjuncts = [model.serialize(g) for g in ucq.disjuncts]
    out = {
        "target": ucq.target,
        "leading_t": ucq.leading_t,
        "count": len(disjuncts),
        "truncated": ucq.truncated,
        "disjuncts": disjuncts,
    }
    if outdir is not None:
        outdir.mkdir(parents=True, exist_ok=True)
        files = []
        for i, text in enumerate(disjuncts):
            path = outdir / f"disjunct_{i}.cq"
            path.write_text(text)
            files.append(str(path))
        out["files"] = files
    return out


def _cmd_cactus(args, outdir: Optional[Path]) -> Dict:
    q = _load_graph(args.query)
    enum = expansion.cactuses_up_to(q, args.depth, cap=args.cap)
    out = {
        "count": len(enum.cactuses),
        "truncated": enum.truncated,
        "skeletons": [c.skeleton.as_dict() for c in enum.cactuses],
    }
    if outdir is not None:
        outdir.mkdir(parents=True, exist_ok=True)
        files = []
        for i, c in enumerate(enum.cactuses):
            path = outdir / f"cactus_{i}.cq"
            path.write_text(model.serialize(c.graph))
            files.append(str(path))
        out["files"] = files
    return out


def _load_graph_instance(path: str, directed: bool) -> reductions.GraphInstance:
    payload = json.loads(Path(path).read_text())
    return reductions.GraphInstance(
        vertices=tuple(payload["vertices"]),
        edges=tuple((a, b) for a, b in payload["edges"]),
        s=payload["s"],
        t=payload["t"],
        directed=directed,
    )


def _cmd_reduce(args, outdir: Optional[Path]) -> Dict:
    q = _load_graph(args.query)
    if args.kind == "dag":
        g = _load_graph_instance(args.graph, directed=True)
        witness = classifier.nl_hardness(q)
        if witness is not None:
            data = reductions.dag_reduction(q, witness.pair, g)
        else:
            for pair in sorted(model.solitary_pairs(q), key=lambda p: (p.t, p.f)):
                try:
                    data = reductions.dag_reduction(q, pair, g)
                    break
                except DsirupError:
                    continue
            else:
                raise DsirupError("no eligible solitary pair for the dag reduction")
    elif args.kind == "undirected":
        g = _load_graph_instance(args.graph, directed=False)
        data = reductions.undirected_reduction(q, g)
    else:
        g = _load_graph_instance(args.graph, directed=False)
        verdict = fo_dichotomy.decide_fo(q, max_span=args.max_span)
        if verdict.fo:
            raise DsirupError("blow-up reduction needs an L-hard query")
        data = reductions.blowup_reduction(verdict.witness, q, g)
    text = model.serialize(data)
    out = {"kind": args.kind, "nodes": len(data.nodes), "atoms": data.atom_count()}
    if outdir is not None:
        outdir.mkdir(parents=True, exist_ok=True)
        path = outdir / "reduction.data"
        path.write_text(text)
        out["file"] = str(path)
    else:
        out["data"] = text
    return out


def _parse_gate(text: str) -> gadgets.Gate:
    text = text.strip()
    if text.startswith("AND(") and text.endswith(")"):
        inner = text[4:-1]
        depth = 0
        for i, ch in enumerate(inner):
            if ch == "(":
                depth += 1
            elif ch == ")":
                depth -= 1
            elif ch == "," and depth == 0:
                return gadgets.AndGate(_parse_gate(inner[:i]), _parse_gate(inner[i + 1 :]))
        raise ParseError("AND needs two arguments", 1)
    if text.startswith("OR(") and text.endswith(")"):
        inner = text[3:-1]
        depth = 0
        for i, ch in enumerate(inner):
            if ch == "(":
                depth += 1
            elif ch == ")":
                depth -= 1
            elif ch == "," and depth == 0:
                return gadgets.or_gate(_parse_gate(inner[:i]), _parse_gate(inner[i + 1 :]))
        raise ParseError("OR needs two arguments", 1)
    if text.startswith("NOT(") and text.endswith(")"):
        return gadgets.NotGate(_parse_gate(text[4:-1]))
    if text.startswith("y"):
        return gadgets.Leaf(int(text[1:]))
    raise ParseError(f"cannot parse gate expression {text!r}", 1)


def _load_formula(path: str) -> gadgets.Formula:
    payload = json.loads(Path(path).read_text())
    return gadgets.Formula(
        root=_parse_gate(payload["gates"]),
        n_vars=payload["n_vars"],
        input_types=tuple(
            gadgets.InputTuple(kind, length) for kind, length in payload["input_types"]
        ),
        name=payload.get("name", Path(path).stem),
    )


def _cmd_gadget(args, outdir: Optional[Path]) -> Dict:
    formula = _load_formula(args.formula)
    gq = gadgets.build_query([(formula, args.frame)])
    if args.action == "compile":
        text = model.serialize(gq.graph)
        out = {"nodes": len(gq.graph.nodes), "frame": args.frame}
        if outdir is not None:
            outdir.mkdir(parents=True, exist_ok=True)
            path = outdir / "gadget.cq"
            path.write_text(text)
            out["file"] = str(path)
        else:
            out["query"] = text
        return out
    violations: List = []
    checks = 0
    enum = expansion.cactuses_up_to(gq.graph, args.depth, cap=args.cap)
    for c in enum.cactuses:
        for seg in c.skeleton.segments:
            if not c.skeleton.children(seg.index):
                continue
            got = gadgets.triggered(gq, c, seg.index, 0)
            want = (
                False
                if seg.parent is None
                else gadgets.expected_triggered(gq, c, seg.index, 0)
            )
            checks += 1
            if got != want:
                violations.append({"segment": seg.index, "got": got, "want": want})
    return {
        "checks": checks,
        "violations": violations,
        "holds": not violations,
        "truncated": enum.truncated,
    }


def _cmd_schema_org(args, outdir: Optional[Path]) -> Dict:
    q = _load_graph(args.query)
    transform = datalog.to_schema_org(q, r_name=args.r_name)
    d = _load_graph(args.data)
    if args.direction == "to":
        converted = transform.data_to_schema(d)
        before = datalog.certain_answer_delta(q, d, max_a_nodes=args.max_a_nodes)
        after = datalog.certain_answer_schema(
            q, converted, transform.r_name, max_a_nodes=args.max_a_nodes
        )
    else:
        converted = transform.schema_to_data(d)
        before = datalog.certain_answer_schema(
            q, d, transform.r_name, max_a_nodes=args.max_a_nodes
        )
        after = datalog.certain_answer_delta(q, converted, max_a_nodes=args.max_a_nodes)
    text = model.serialize(converted)
    out = {
        "r_name": transform.r_name,
        "answer_before": before,
        "answer_after": after,
        "preserved": before == after,
    }
    if outdir is not None:
        outdir.mkdir(parents=True, exist_ok=True)
        path = outdir / "converted.data"
        path.write_text(text)
        out["file"] = str(path)
    else:
        out["data"] = text
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dsirup",
        description="Evaluation, expansion and complexity classification of "
        "covering-mediated Boolean CQs.",
    )
    parser.add_argument("--seed", type=int, default=0, help="seed for randomized suites")
    parser.add_argument("--json", action="store_true", help="(default) JSON report output")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="parse a .cq/.data file and report its shape")
    p.add_argument("query")

    p = sub.add_parser("classify", help="complexity classification of the d-sirup")
    p.add_argument("query")
    p.add_argument("--max-span", type=int, default=6)

    p = sub.add_parser("bounded", help="FO/L-hardness dichotomy for fan-shaped 1-CQs")
    p.add_argument("--query", required=True)
    p.add_argument("--max-span", type=int, default=6)
    p.add_argument("--emit-witness", action="store_true")
    p.add_argument("--out")

    p = sub.add_parser("evaluate", help="certain answers over a data instance")
    p.add_argument("--query", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--program", choices=["delta", "delta+", "pi", "sigma"], default="delta")
    p.add_argument("--max-a-nodes", type=int, default=22)

    p = sub.add_parser("rewrite", help="UCQ rewriting from cactuses up to a depth")
    p.add_argument("--query", required=True)
    p.add_argument("--depth", type=int, required=True)
    p.add_argument("--target", choices=["delta", "sigma"], default="delta")
    p.add_argument("--cap", type=int, default=10000)
    p.add_argument("--out")

    p = sub.add_parser("cactus", help="enumerate cactuses and their skeletons")
    p.add_argument("--query", required=True)
    p.add_argument("--depth", type=int, required=True)
    p.add_argument("--cap", type=int, default=10000)
    p.add_argument("--out")

    p = sub.add_parser("reduce", help="hardness-reduction data instances")
    p.add_argument("--query", required=True)
    p.add_argument("--kind", choices=["dag", "undirected", "blowup"], required=True)
    p.add_argument("--graph", required=True, help="JSON file: vertices, edges, s, t")
    p.add_argument("--max-span", type=int, default=6)
    p.add_argument("--out")

    p = sub.add_parser("gadget", help="compile or verify a formula gadget query")
    p.add_argument("action", choices=["compile", "verify"])
    p.add_argument("--formula", required=True, help="JSON file: gates, n_vars, input_types")
    p.add_argument("--frame", choices=["AT", "TA", "AA"], default="AA")
    p.add_argument("--depth", type=int, default=2)
    p.add_argument("--cap", type=int, default=30)
    p.add_argument("--out")

    p = sub.add_parser("schema-org", help="range-covering transformation of data")
    p.add_argument("--query", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--direction", choices=["to", "from"], default="to")
    p.add_argument("--r-name", default=None)
    p.add_argument("--max-a-nodes", type=int, default=22)
    p.add_argument("--out")

    return parser


def run(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code not in (0, None) else 0
    started = time.time()
    outdir = Path(args.out) if getattr(args, "out", None) else None
    inputs = {
        key: getattr(args, key)
        for key in ("query", "data", "graph", "formula")
        if getattr(args, key, None)
    }
    try:
        if args.command == "validate":
            verdict = _cmd_validate(args)
        elif args.command == "classify":
            verdict = _cmd_classify(args)
        elif args.command == "bounded":
            verdict = _cmd_bounded(args, outdir)
        elif args.command == "evaluate":
            verdict = _cmd_evaluate(args)
        elif args.command == "rewrite":
            verdict = _cmd_rewrite(args, outdir)
        elif args.command == "cactus":
            verdict = _cmd_cactus(args, outdir)
        elif args.command == "reduce":
            verdict = _cmd_reduce(args, outdir)
        elif args.command == "gadget":
            verdict = _cmd_gadget(args, outdir)
        else:
            verdict = _cmd_schema_org(args, outdir)
    except (CapExceededError, BudgetExceededError) as exc:
        _emit(_report(args.command, inputs, {"error": str(exc)}, caps_hit=True, started=started))
        return 2
    except (OSError, json.JSONDecodeError, DsirupError, ValueError) as exc:
        _emit(_report(args.command, inputs, {"error": str(exc)}, started=started))
        return 1
    _emit(_report(args.command, inputs, verdict, started=started))
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
