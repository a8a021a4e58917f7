"""Script derivation for finished programs.

Given a concrete program and a postcondition, this walks the program shape
and emits one refinement step per node, choosing midpoints and invariants by
weakest precondition. The resulting script replays to the same program
(modulo sequence flattening and sugar removal), with every obligation
discharged up to loop-tail truncation slack.

Arguments that vary across a hole's parameter bindings are rendered as exact
expressions: binding-keyed maps where a rule accepts them, and Lagrange
interpolation polynomials over the family index where a single expression is
required. Interpolation is evaluated only at integer nodes, where the basis
factors are exactly 0 or 1 in floating point, so replay reproduces the stored
matrices bit for bit.
"""

from __future__ import annotations

from itertools import product

import numpy as np

from ..hoare import wp
from ..matrixcore import DEFAULT_TOL, Tolerances, VariableRegistry
from ..qlang import ast as A
from ..qlang import exprs as E
from ..qlang.parse import MapArg, RefineStep, Script, SeqLambdaArg, VarListArg
from .base import N_CHECK, HoleState, ParamSpace, binding_key
from .rules import effect_pair
from .session import ApplyOutcome, Session


class DeriveError(ValueError):
    pass


def matrix_expr(m: np.ndarray) -> E.Expr:
    m = np.asarray(m, dtype=complex)
    return E.MatLit(tuple(tuple(E.Num(complex(x)) for x in row) for row in m))


def _lagrange_factor(sym: str, dom: tuple[int, ...], k: int) -> E.Expr | None:
    fac: E.Expr | None = None
    for m in dom:
        if m == k:
            continue
        term = E.BinOp(
            "/", E.BinOp("-", E.Sym(sym), E.Num(complex(m))), E.Num(complex(k - m))
        )
        fac = term if fac is None else E.BinOp("*", fac, term)
    return fac


def lagrange_expr(dims: ParamSpace, table: dict[tuple[int, ...], np.ndarray]) -> E.Expr:
    """An expression over the dim symbols whose value at every binding node
    equals the tabulated matrix."""
    keys = list(table)
    active: list[int] = []
    for i in range(len(dims)):
        seen: dict[tuple[int, ...], tuple[int, ...]] = {}
        varies = False
        for key in keys:
            rk = key[:i] + key[i + 1 :]
            if rk in seen:
                if not np.array_equal(table[seen[rk]], table[key]):
                    varies = True
                    break
            else:
                seen[rk] = key
        if varies:
            active.append(i)
    if not active:
        return matrix_expr(table[keys[0]])
    terms: list[E.Expr] = []
    for combo in product(*(dims[i][1] for i in active)):
        key = tuple(
            combo[active.index(i)] if i in active else dims[i][1][0]
            for i in range(len(dims))
        )
        coeff: E.Expr | None = None
        for i, k in zip(active, combo):
            fac = _lagrange_factor(dims[i][0], dims[i][1], k)
            if fac is not None:
                coeff = fac if coeff is None else E.BinOp("*", coeff, fac)
        lit = matrix_expr(table[key])
        terms.append(lit if coeff is None else E.BinOp("*", coeff, lit))
    out = terms[0]
    for t in terms[1:]:
        out = E.BinOp("+", out, t)
    return out


def _pred_arg(hole: HoleState, table: dict[tuple[int, ...], np.ndarray]):
    """A predicate argument: a single matrix literal when constant, otherwise
    a binding-keyed map."""
    keys = list(table)
    first = table[keys[0]]
    if all(np.array_equal(table[k], first) for k in keys):
        return matrix_expr(first)
    entries = []
    for b in hole.bindings():
        key = binding_key(hole.params, b)
        pairs = tuple((name, b[name]) for name, _ in hole.params)
        entries.append((pairs, matrix_expr(table[key])))
    return MapArg(tuple(entries))


def _apply(sess: Session, step: RefineStep) -> ApplyOutcome:
    out = sess.apply(step)
    if not out.accepted:
        bad = [o for o in out.obligations if not o.holds]
        detail = "; ".join(f"{o.description} (margin {o.margin:.3e})" for o in bad[:3])
        raise DeriveError(f"derived step {step.rule} on {step.hole} was rejected: {detail}")
    return out


def _wp_table(
    sess: Session, hole: HoleState, prog: A.Program
) -> dict[tuple[int, ...], np.ndarray]:
    out = {}
    for b in hole.bindings():
        key = binding_key(hole.params, b)
        out[key] = wp(prog, sess.reg, hole.post(b), sess.mode, b, sess.tol)
    return out


def derive_into(sess: Session, hole_id: str, prog: A.Program) -> None:
    """Refine ``hole_id`` into ``prog``, emitting and applying one step per
    program node. Raises DeriveError if any step is rejected."""
    prog = A.flatten(A.desugar(prog, sess.reg.card))
    _derive(sess, hole_id, prog)


def _derive(sess: Session, hid: str, prog: A.Program) -> None:
    hole = sess.holes[hid]

    if isinstance(prog, A.Skip):
        _apply(sess, RefineStep(hid, "H.skip", ()))
        return

    if isinstance(prog, A.Init):
        _apply(sess, RefineStep(hid, "H.init", (("vars", VarListArg(prog.vars)),)))
        return

    if isinstance(prog, A.Unitary):
        _apply(
            sess,
            RefineStep(hid, "H.unit", (("U", prog.op), ("vars", VarListArg(prog.vars)))),
        )
        return

    if isinstance(prog, A.Seq):
        parts = prog.parts
        rest: A.Program = parts[1] if len(parts) == 2 else A.Seq(parts[1:])
        mid = _wp_table(sess, hole, rest)
        out = _apply(sess, RefineStep(hid, "H.seq", (("R", _pred_arg(hole, mid)),)))
        first_id, rest_id = out.new_holes
        _derive(sess, first_id, parts[0])
        _derive(sess, rest_id, rest)
        return

    if isinstance(prog, A.Repeat):
        if prog.count == 0:
            if prog.body != A.Skip():
                raise DeriveError("a zero-count loop body is unreachable and cannot be derived")
            post_tab = {
                binding_key(hole.params, b): hole.post(b) for b in hole.bindings()
            }
            var = sess.fresh_symbol("j")
            body_expr = lagrange_expr(hole.params, post_tab)
            _apply(
                sess,
                RefineStep(
                    hid,
                    "H.repeat",
                    (("N", E.Num(0j)), ("R", SeqLambdaArg(var, body_expr))),
                ),
            )
            return
        var = sess.fresh_symbol("j")
        dims: ParamSpace = hole.params + ((var, tuple(range(prog.count + 1))),)
        table: dict[tuple[int, ...], np.ndarray] = {}
        for b in hole.bindings():
            key = binding_key(hole.params, b)
            vals = [hole.post(b)]
            for _ in range(prog.count):
                vals.append(wp(prog.body, sess.reg, vals[-1], sess.mode, b, sess.tol))
            vals.reverse()  # vals[j] is now the invariant after j iterations
            for j in range(prog.count + 1):
                table[key + (j,)] = vals[j]
        body_expr = lagrange_expr(dims, table)
        out = _apply(
            sess,
            RefineStep(
                hid,
                "H.repeat",
                (("N", E.Num(complex(prog.count))), ("R", SeqLambdaArg(var, body_expr))),
            ),
        )
        _derive(sess, out.new_holes[0], prog.body)
        return

    if isinstance(prog, A.Case):
        if not isinstance(prog.meas, A.General):
            raise DeriveError("case must be desugared before derivation")
        outcomes = prog.meas.outcomes
        m_arg = MapArg(tuple((A.label_text(lab), e) for lab, e in outcomes))
        pre_entries = []
        for lab, _ in outcomes:
            tab = _wp_table(sess, hole, prog.branch(lab))
            pre_entries.append((A.label_text(lab), lagrange_expr(hole.params, tab)))
        step = RefineStep(
            hid,
            "H.case",
            (("M", m_arg), ("vars", VarListArg(prog.vars)), ("pre", MapArg(tuple(pre_entries)))),
        )
        out = _apply(sess, step)
        for (lab, _), kid in zip(outcomes, out.new_holes):
            _derive(sess, kid, prog.branch(lab))
        return

    if isinstance(prog, A.While):
        if prog.guard is None:
            raise DeriveError("while must be desugared before derivation")
        if sess.mode == "partial":
            table = {}
            for b in hole.bindings():
                key = binding_key(hole.params, b)
                w_loop = wp(prog, sess.reg, hole.post(b), "partial", b, sess.tol)
                table[key] = wp(prog.body, sess.reg, w_loop, "partial", b, sess.tol)
            step = RefineStep(
                hid,
                "HP.while",
                (
                    ("B", prog.guard),
                    ("vars", VarListArg(prog.vars)),
                    ("R", _pred_arg(hole, table)),
                ),
            )
            out = _apply(sess, step)
            _derive(sess, out.new_holes[0], prog.body)
            return
        if not hole.params:
            # parameter-free: tabulate the certificate directly — exact at
            # every node and far cheaper to evaluate than an interpolation
            k0, k1 = effect_pair(sess.reg, sess.tol, prog.guard, prog.vars, {})
            post = hole.post({})
            r = np.zeros((sess.reg.dim, sess.reg.dim), dtype=complex)
            entries = []
            for n in range(N_CHECK + 1):
                mix = k0 @ post @ k0 + k1 @ r @ k1
                r = wp(prog.body, sess.reg, mix, "total", {}, sess.tol)
                entries.append((str(n), matrix_expr(r)))
            r_arg: MapArg | SeqLambdaArg = MapArg(tuple(entries))
        else:
            var = sess.fresh_symbol("n")
            dims = hole.params + ((var, tuple(range(N_CHECK + 1))),)
            table = {}
            for b in hole.bindings():
                key = binding_key(hole.params, b)
                k0, k1 = effect_pair(sess.reg, sess.tol, prog.guard, prog.vars, b)
                post = hole.post(b)
                r = np.zeros((sess.reg.dim, sess.reg.dim), dtype=complex)
                for n in range(N_CHECK + 1):
                    mix = k0 @ post @ k0 + k1 @ r @ k1
                    r = wp(prog.body, sess.reg, mix, "total", b, sess.tol)
                    table[key + (n,)] = r
            r_arg = SeqLambdaArg(var, lagrange_expr(dims, table))
        step = RefineStep(
            hid,
            "HT.while",
            (
                ("B", prog.guard),
                ("vars", VarListArg(prog.vars)),
                ("R", r_arg),
            ),
        )
        out = _apply(sess, step)
        _derive(sess, out.new_holes[0], prog.body)
        return

    if isinstance(prog, A.Hole):
        raise DeriveError("cannot derive a script for a program that still has holes")
    raise DeriveError(f"cannot derive {type(prog).__name__}")  # pragma: no cover


def derive_program(
    prog: A.Program,
    reg: VariableRegistry,
    mode: str,
    post: E.Expr,
    name: str = "derived",
    tol: Tolerances = DEFAULT_TOL,
) -> Session:
    """Build a session whose spec is (wp(prog, post) => post) and derive the
    full refinement script for ``prog`` into it."""
    norm = A.flatten(A.desugar(prog, reg.card))
    post_m = E.eval_predicate(post, reg, None, tol)
    pre_m = wp(norm, reg, post_m, mode, None, tol)
    clause = A.SpecClause(matrix_expr(pre_m), post)
    script = Script(name, reg, mode, (), "h0", (clause,))
    sess = Session(script, tol=tol)
    _derive(sess, "h0", norm)
    return sess
