"""Command-line front end.

Subcommands: ``check`` (replay a refinement script), ``verify`` (decide a
correctness triple for a concrete program), ``simulate`` (run a program on a
state), ``derive`` (emit a replayable script from a program and
postcondition), ``examples`` (bundled corpus), ``serve`` (HTTP API).

Exit codes: 0 success; 1 an obligation or verdict failed; 2 unreadable or
unparsable input (including bad rule arguments); 3 a loop failed to converge
within the iteration cap, so the verdict is inconclusive.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from itertools import product
from pathlib import Path

import numpy as np

from .examples import example_names, run_example
from .hoare import check as check_triple
from .matrixcore import DEFAULT_TOL, Tolerances, VariableRegistry, herm_eig, hermitize, min_eig
from .qlang import ast as A
from .qlang import exprs as E
from .qlang.parse import (
    QbcSyntaxError,
    RefineStep,
    Script,
    parse_expr,
    parse_program_file,
    parse_script,
)
from .qlang.pretty import program_source
from .refine import DeriveError, RuleArgumentError, Session
from .refine.derive import derive_into, derive_program, matrix_expr
from .semantics import ConvergenceNote, apply_program

OK, FAIL, PARSE, CONV = 0, 1, 2, 3

_DIRAC_RANK_CAP = 4


# ---------------------------------------------------------------------------
# Rendering


def _fmt(x: complex, prec: int = 6) -> str:
    re, im = float(np.real(x)), float(np.imag(x))
    if abs(im) < 10.0 ** (-prec - 6) * max(1.0, abs(re)):
        return f"{re:.{prec}g}"
    if abs(re) < 10.0 ** (-prec - 6) * abs(im):
        return f"{im:.{prec}g}i"
    sign = "+" if im >= 0 else "-"
    return f"({re:.{prec}g} {sign} {abs(im):.{prec}g}i)"


def _basis_labels(reg: VariableRegistry) -> list[str]:
    ranges = [range(reg.card(v)) for v in reg.names]
    return ["".join(str(d) for d in digits) for digits in product(*ranges)]


def render_vector(v: np.ndarray, reg: VariableRegistry, prec: int = 6) -> str:
    labels = _basis_labels(reg)
    norm = float(np.linalg.norm(v))
    cutoff = 10.0 ** (-prec - 2) * max(norm, 1e-300)
    terms = [
        f"{_fmt(c, prec)}|{lab}>" for c, lab in zip(np.asarray(v).ravel(), labels) if abs(c) > cutoff
    ]
    return " + ".join(terms) if terms else "0"


def render_matrix(m: np.ndarray, reg: VariableRegistry, prec: int = 6) -> str:
    """Spectral Dirac form for low-rank Hermitian matrices, else a grid."""
    m = np.asarray(m, dtype=complex)
    dim = m.shape[0]
    if np.linalg.norm(m - m.conj().T) <= 1e-10 * max(1.0, np.linalg.norm(m)):
        vals, vecs = herm_eig(hermitize(m))
        scale = max(float(np.max(np.abs(vals))), 1e-300)
        keep = [i for i in range(dim) if abs(vals[i]) > 1e-9 * scale]
        if len(keep) <= _DIRAC_RANK_CAP:
            keep.sort(key=lambda i: -abs(vals[i]))
            lines = []
            for i in keep:
                lines.append(f"{_fmt(vals[i], prec)} * |v><v|,  |v> = "
                             f"{render_vector(vecs[:, i], reg, prec)}")
            return "\n".join(lines) if lines else "0"
    if dim > 16:
        diag = ", ".join(_fmt(m[i, i], prec) for i in range(8))
        return f"dense {dim}x{dim} matrix, trace {_fmt(np.trace(m), prec)}, diag [{diag}, ...]"
    labels = _basis_labels(reg)
    width = max(len(_fmt(x, prec)) for x in m.ravel())
    rows = [
        f"|{lab}>  [" + "  ".join(_fmt(x, prec).rjust(width) for x in row) + "]"
        for lab, row in zip(labels, m)
    ]
    return "\n".join(rows)


def _matrix_json(m: np.ndarray) -> list:
    return [[[float(np.real(x)), float(np.imag(x))] for x in row] for row in np.asarray(m)]


# ---------------------------------------------------------------------------
# Report plumbing


def _obligation_dict(ob) -> dict:
    d = {
        "kind": ob.kind,
        "description": ob.description,
        "binding": dict(ob.binding),
        "verdict": ob.verdict,
        "margin": ob.margin,
    }
    if ob.witness is not None:
        d["witness"] = _matrix_json(ob.witness.reshape(-1, 1))
    return d


def _print_report_human(rep: dict, reg: VariableRegistry) -> None:
    head = f"step {rep['step']}"
    if rep.get("rule"):
        head += f": {rep['rule']}"
        if rep.get("hole"):
            head += f" on {rep['hole']}"
    obs = rep["obligations"]
    n_ok = sum(1 for o in obs if o["verdict"] == "holds")
    print(f"{head} - {n_ok}/{len(obs)} obligations hold")
    for o in obs:
        mark = "ok  " if o["verdict"] == "holds" else o["verdict"][:4].ljust(4)
        line = f"  [{mark}] {o['description']}"
        if o["binding"]:
            line += f"  {o['binding']}"
        line += f"  (margin {o['margin']:.3e})"
        print(line)
        if o["verdict"] != "holds" and "witness" in o:
            vec = np.array([[re + 1j * im for re, im in row] for row in o["witness"]])
            print(f"        witness state: {render_vector(vec.ravel(), reg)}")
    if rep.get("final_program"):
        print("final program:")
        print("  " + "\n  ".join(rep["final_program"].rstrip().splitlines()))


def _emit(payload: dict, fmt: str, reg: VariableRegistry | None) -> None:
    if fmt == "json":
        print(json.dumps(payload, indent=2, sort_keys=True))
        return
    for rep in payload.get("reports", ()):
        _print_report_human(rep, reg)
    for note in payload.get("notes", ()):
        print(f"note: {note}")
    if "ok" in payload:
        print("result:", "ok" if payload["ok"] else "failed")


def _tolerances(args) -> Tolerances:
    tol = DEFAULT_TOL
    env = os.environ.get("QBC_TOL")
    if env is not None:
        tol = dataclasses.replace(tol, psd_eps=float(env))
    if getattr(args, "tol", None) is not None:
        tol = dataclasses.replace(tol, psd_eps=args.tol)
    if getattr(args, "loop_tail_eps", None) is not None:
        tol = dataclasses.replace(tol, loop_tail_eps=args.loop_tail_eps)
    return tol


def _read(path: str) -> str:
    return Path(path).read_text("utf-8")


def _parse_program_arg(path: str) -> tuple[VariableRegistry, A.Program]:
    reg, prog = parse_program_file(_read(path))
    if reg is None:
        raise QbcSyntaxError("program file needs a 'vars name:card, ...;' header")
    return reg, prog


# ---------------------------------------------------------------------------
# Subcommands


def cmd_check(args) -> int:
    tol = _tolerances(args)
    try:
        sc = parse_script(_read(args.script))
    except (OSError, QbcSyntaxError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return PARSE
    sess = Session(sc, tol=tol, strict_rules=args.strict_rules)
    reports: list[dict] = []
    exit_code = OK
    for idx, st in enumerate(sc.steps):
        try:
            out = sess.apply(st)
        except RuleArgumentError as exc:
            print(f"error in step {idx} ({st.rule} on {st.hole}): {exc}", file=sys.stderr)
            return PARSE
        reports.append(
            {
                "step": idx,
                "hole": st.hole,
                "rule": st.rule,
                "obligations": [_obligation_dict(o) for o in out.obligations],
            }
        )
        if not out.accepted:
            exit_code = FAIL
    summary: dict = {"step": "verify", "rule": None, "obligations": []}
    if exit_code == OK and sess.is_complete():
        for binding, verdict in sess.verify_constructed():
            ob = {
                "kind": "triple",
                "description": "constructed program satisfies the specification",
                "binding": dict(binding),
                "verdict": verdict.status,
                "margin": verdict.margin,
            }
            if verdict.witness is not None:
                ob["witness"] = _matrix_json(np.asarray(verdict.witness).reshape(-1, 1))
            summary["obligations"].append(ob)
            if verdict.status == "fails":
                exit_code = FAIL
            elif verdict.status == "inconclusive" and exit_code == OK:
                exit_code = CONV
        summary["final_program"] = program_source(sess.program)
    else:
        summary["final_program"] = program_source(sess.program)
    reports.append(summary)
    payload = {
        "command": "check",
        "file": args.script,
        "ok": exit_code == OK,
        "reports": reports,
    }
    _emit(payload, args.format, sess.reg)
    return exit_code


def cmd_verify(args) -> int:
    tol = _tolerances(args)
    try:
        reg, prog = _parse_program_arg(args.program)
        pre = E.eval_predicate(parse_expr(args.pre), reg, tol=tol)
        post = E.eval_predicate(parse_expr(args.post), reg, tol=tol)
    except (OSError, QbcSyntaxError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return PARSE
    verdict = check_triple(prog, reg, pre, post, args.mode, tol=tol)
    ob = {
        "kind": "triple",
        "description": f"{args.mode} correctness of the program for the given pre/post",
        "binding": {},
        "verdict": verdict.status,
        "margin": verdict.margin,
    }
    if verdict.witness is not None:
        ob["witness"] = _matrix_json(np.asarray(verdict.witness).reshape(-1, 1))
    payload = {
        "command": "verify",
        "file": args.program,
        "ok": verdict.status == "holds",
        "reports": [{"step": "verify", "rule": args.mode, "obligations": [ob]}],
        "notes": [verdict.detail] if verdict.detail else [],
    }
    _emit(payload, args.format, reg)
    if verdict.status == "holds":
        return OK
    return CONV if verdict.status == "inconclusive" else FAIL


def cmd_simulate(args) -> int:
    tol = _tolerances(args)
    try:
        reg, prog = _parse_program_arg(args.program)
        state = hermitize(E.eval_operator(parse_expr(args.state), reg, tol=tol))
    except (OSError, QbcSyntaxError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return PARSE
    lo = min_eig(state)
    if lo < -tol.psd_eps:
        print(f"error: state is not PSD (min eigenvalue {lo:.3e})", file=sys.stderr)
        return PARSE
    tr = float(np.real(np.trace(state)))
    notes: list[str] = []
    if tr <= 0:
        print("error: state has no mass", file=sys.stderr)
        return PARSE
    if abs(tr - 1.0) > tol.trace_eps:
        state = state / tr
        notes.append(f"input normalized from trace {tr:.6g} to 1")
    sem_notes: list = []
    out = apply_program(prog, reg, state, tol=tol, notes=sem_notes)
    conv = [str(n) for n in sem_notes if isinstance(n, ConvergenceNote)]
    termination = float(np.real(np.trace(out)))
    payload = {
        "command": "simulate",
        "file": args.program,
        "ok": not conv,
        "termination": termination,
        "state": _matrix_json(out) if args.format == "json" else render_matrix(out, reg),
        "notes": notes + conv,
    }
    if args.format == "json":
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        print(payload["state"])
        print(f"termination probability: {termination:.10g}")
        for n in payload["notes"]:
            print(f"note: {n}")
    return CONV if conv else OK


def cmd_derive(args) -> int:
    tol = _tolerances(args)
    try:
        reg, prog = _parse_program_arg(args.program)
        post_expr = parse_expr(args.post)
        pre_expr = parse_expr(args.pre) if args.pre else None
    except (OSError, QbcSyntaxError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return PARSE
    name = args.name or Path(args.program).stem
    try:
        if pre_expr is None:
            sess = derive_program(prog, reg, args.mode, post_expr, name=name, tol=tol)
        else:
            norm = A.flatten(A.desugar(prog, reg.card))
            from .hoare import wp

            post_m = E.eval_predicate(post_expr, reg, tol=tol)
            wp_m = wp(norm, reg, post_m, args.mode, tol=tol)
            sc = Script(name, reg, args.mode, (), "h0", (A.SpecClause(pre_expr, post_expr),))
            sess = Session(sc, tol=tol)
            out = sess.apply(
                RefineStep("h0", "H.sw", (("P", matrix_expr(wp_m)), ("Q", post_expr)))
            )
            if not out.accepted:
                for ob in out.obligations:
                    if not ob.holds:
                        print(
                            f"triple does not hold: {ob.description} "
                            f"(margin {ob.margin:.3e})",
                            file=sys.stderr,
                        )
                        if ob.witness is not None:
                            print(
                                "witness state: "
                                f"{render_vector(np.asarray(ob.witness).ravel(), reg)}",
                                file=sys.stderr,
                            )
                return FAIL
            derive_into(sess, out.new_holes[0], prog)
    except (DeriveError, ValueError) as exc:
        print(f"derivation refused: {exc}", file=sys.stderr)
        return FAIL
    text = sess.export_script()
    if args.out:
        Path(args.out).write_text(text, "utf-8")
        print(f"wrote {args.out}")
    else:
        print(text, end="")
    return OK


def cmd_examples(args) -> int:
    if not args.names:
        if args.format == "json":
            print(json.dumps({"examples": list(example_names())}, indent=2))
        else:
            for n in example_names():
                print(n)
        return OK
    worst = OK
    cases = []
    for name in args.names:
        try:
            rep = run_example(name)
        except KeyError as exc:
            print(f"error: {exc.args[0]}", file=sys.stderr)
            return PARSE
        cases.append(
            {
                "name": rep.name,
                "ok": rep.ok,
                "steps": rep.steps,
                "rejected": rep.rejected,
                "matches_listing": rep.matches_listing,
                "verified": rep.holds,
                "measurements": rep.measurements,
                "notes": list(rep.notes),
            }
        )
        if not rep.ok:
            worst = FAIL
    if args.format == "json":
        print(json.dumps({"command": "examples", "cases": cases}, indent=2, sort_keys=True))
    else:
        for c in cases:
            status = "ok  " if c["ok"] else "FAIL"
            meas = ", ".join(f"{k}={v:.6g}" for k, v in sorted(c["measurements"].items()))
            print(f"{status} {c['name']}: {c['steps']} steps, {meas}")
            for n in c["notes"]:
                print(f"      {n}")
    return worst


def cmd_serve(args) -> int:
    import uvicorn

    from .server import create_app

    static = getattr(args, "static", None)
    if static is not None and not Path(static).is_dir():
        print(f"error: --static {static} is not a directory", file=sys.stderr)
        return PARSE
    uvicorn.run(create_app(static_dir=static), host=args.host, port=args.port)
    return OK


# ---------------------------------------------------------------------------
# Argument parsing


def _port(text: str) -> int:
    port = int(text)
    if not 1 <= port <= 65535:
        raise argparse.ArgumentTypeError("port must be in 1..65535")
    return port


def _nonneg(text: str) -> float:
    x = float(text)
    if x < 0:
        raise argparse.ArgumentTypeError("tolerance must be nonnegative")
    return x


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="qbc",
        description="Workbench for constructing verified quantum while-programs.",
    )
    sub = p.add_subparsers(dest="cmd", required=True)

    def common(sp):
        sp.add_argument("--format", choices=("human", "json"), default="human")
        sp.add_argument("--tol", type=_nonneg, default=None, help="PSD slack (overrides QBC_TOL)")
        sp.add_argument("--loop-tail-eps", type=_nonneg, default=None, dest="loop_tail_eps")

    sp = sub.add_parser("check", help="replay a refinement script and verify the result")
    sp.add_argument("script")
    sp.add_argument("--strict-rules", action="store_true", dest="strict_rules")
    common(sp)
    sp.set_defaults(fn=cmd_check)

    sp = sub.add_parser("verify", help="decide a correctness triple for a program")
    sp.add_argument("program")
    sp.add_argument("--pre", required=True)
    sp.add_argument("--post", required=True)
    sp.add_argument("--mode", choices=("total", "partial"), default="total")
    common(sp)
    sp.set_defaults(fn=cmd_verify)

    sp = sub.add_parser("simulate", help="run a program on a state")
    sp.add_argument("program")
    sp.add_argument("--state", default="I", help="input state expression (normalized)")
    common(sp)
    sp.set_defaults(fn=cmd_simulate)

    sp = sub.add_parser("derive", help="derive a replayable script from a program")
    sp.add_argument("program")
    sp.add_argument("--post", required=True)
    sp.add_argument("--pre", default=None, help="default: the weakest precondition")
    sp.add_argument("--mode", choices=("total", "partial"), default="total")
    sp.add_argument("--out", default=None)
    sp.add_argument("--name", default=None)
    common(sp)
    sp.set_defaults(fn=cmd_derive)

    sp = sub.add_parser("examples", help="list or replay the bundled corpus")
    sp.add_argument("names", nargs="*")
    sp.add_argument("--format", choices=("human", "json"), default="human")
    sp.set_defaults(fn=cmd_examples)

    sp = sub.add_parser("serve", help="start the HTTP session service")
    sp.add_argument("--port", type=_port, default=8787)
    sp.add_argument("--host", default="127.0.0.1")
    sp.add_argument("--static", metavar="DIR", help="also serve a UI bundle from DIR at /")
    sp.set_defaults(fn=cmd_serve)

    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
