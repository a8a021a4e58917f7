"""The refinement rule catalog.

Each rule consumes a hole (a family of pre/post obligations indexed by
parameter bindings), checks its side conditions numerically, and — when every
obligation holds — produces a replacement program fragment plus the child
holes left to fill. Rules never mutate the session; the session commits the
outcome only after all obligations pass.

Rule families
-------------
``H.*``   structural rules sound in both total and partial mode
``HP.*``  rules whose justification needs partial correctness
``HT.*``  rules whose justification needs total correctness (``HT.split``
          remains usable in partial mode unless strict checking is on)
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ..matrixcore import (
    Tolerances,
    VariableRegistry,
    cylindrical_extension,
    frob,
    hermitize,
    min_eig,
    psd_sqrt,
)
from ..qlang import ast as A
from ..qlang import exprs as E
from ..qlang.parse import MapArg, SeqLambdaArg, StdArg, VarListArg
from ..qlang.pretty import expr_source
from ..semantics import adjoint_apply
from .base import (
    N_CHECK,
    SEQ_CONV_EPS,
    WEIGHT_SUM_EPS,
    HoleState,
    Obligation,
    ParamSpace,
    RuleArgumentError,
    binding_key,
    implication_obligation,
    iter_bindings,
    scalar_obligation,
)


@dataclass
class RuleCtx:
    reg: VariableRegistry
    tol: Tolerances
    mode: str
    hole: HoleState
    args: dict[str, object]
    alloc: Callable[[int], tuple[str, ...]]


@dataclass
class RuleOutcome:
    replacement: A.Program
    children: list[HoleState]
    obligations: list[Obligation]
    note: str | None = None

    @property
    def accepted(self) -> bool:
        return all(o.holds for o in self.obligations)


@dataclass(frozen=True)
class Rule:
    name: str
    modes: frozenset[str]
    summary: str
    args_doc: dict[str, str]
    children_doc: str
    fn: Callable[[RuleCtx], RuleOutcome]
    partial_needs_lenient: bool = False  # shut off in partial mode by --strict-rules


# ---------------------------------------------------------------------------
# Argument decoding


def _decode_args(ctx: RuleCtx, required: tuple[str, ...], optional: tuple[str, ...] = ()) -> None:
    have = set(ctx.args)
    missing = [n for n in required if n not in have]
    if missing:
        raise RuleArgumentError(f"missing argument(s): {', '.join(missing)}")
    extra = have - set(required) - set(optional)
    if extra:
        raise RuleArgumentError(f"unexpected argument(s): {', '.join(sorted(extra))}")


def _expr_arg(ctx: RuleCtx, name: str) -> E.Expr:
    v = ctx.args[name]
    if not isinstance(v, E.Expr):
        raise RuleArgumentError(f"argument {name!r} must be an expression")
    return v


def _varlist_arg(ctx: RuleCtx, name: str) -> tuple[str, ...]:
    v = ctx.args[name]
    if not isinstance(v, VarListArg):
        raise RuleArgumentError(f"argument {name!r} must be a variable list like [q, r]")
    ctx.reg.check_subset(v.names)
    return v.names


def _int_arg(ctx: RuleCtx, name: str) -> int:
    v = ctx.args[name]
    if not isinstance(v, E.Num) or v.value.imag != 0 or v.value.real != int(v.value.real):
        raise RuleArgumentError(f"argument {name!r} must be an integer literal")
    n = int(v.value.real)
    if n < 0:
        raise RuleArgumentError(f"argument {name!r} must be nonnegative")
    return n


def _scalar_fn(ctx: RuleCtx, name: str) -> Callable[[dict], float]:
    e = _expr_arg(ctx, name)

    def run(binding: dict) -> float:
        val = E.eval_scalar(e, ctx.reg, binding)
        if abs(val.imag) > 1e-12:
            raise RuleArgumentError(f"argument {name!r} must be real, got {val}")
        return float(val.real)

    return run


def _map_select(entries, binding: dict, name: str) -> E.Expr:
    default = None
    for key, val in entries:
        if key == "_":
            default = val
        elif isinstance(key, tuple):
            if all(binding.get(k) == v for k, v in key):
                return val
        else:
            raise RuleArgumentError(
                f"argument {name!r}: binding-dependent maps need name=value keys"
            )
    if default is not None:
        return default
    raise RuleArgumentError(f"argument {name!r}: no entry matches binding {binding}")


def _pred_fn(
    ctx: RuleCtx, name: str
) -> tuple[Callable[[dict], np.ndarray], Callable[[dict], str]]:
    """A predicate argument: one expression, or a binding-keyed map of them."""
    v = ctx.args[name]
    if isinstance(v, E.Expr):
        return (
            lambda b: E.eval_predicate(v, ctx.reg, b, ctx.tol),
            lambda b: expr_source(v),
        )
    if isinstance(v, MapArg):

        def run(b: dict) -> np.ndarray:
            return E.eval_predicate(_map_select(v.entries, b, name), ctx.reg, b, ctx.tol)

        return run, lambda b: expr_source(_map_select(v.entries, b, name))
    raise RuleArgumentError(f"argument {name!r} must be a predicate expression or map")


def _seq_arg(ctx: RuleCtx, name: str) -> tuple[str, E.Expr]:
    v = ctx.args[name]
    if not isinstance(v, SeqLambdaArg):
        raise RuleArgumentError(f"argument {name!r} must be a sequence like n => expr")
    if any(v.var == p for p, _ in ctx.hole.params):
        raise RuleArgumentError(f"sequence index {v.var!r} collides with a hole parameter")
    return v.var, v.body


def _seq_family(
    ctx: RuleCtx, name: str, depth: int
) -> tuple[str, Callable[[dict], np.ndarray], Callable[[int], str]]:
    """A certificate family R(n) for n = 0..depth: either ``lambda n: expr``
    or, for parameter-free holes, a plain-integer table ``{0: ...; 1: ...}``
    (cheap to evaluate and exact at every node)."""
    v = ctx.args[name]
    if isinstance(v, SeqLambdaArg):
        if any(v.var == p for p, _ in ctx.hole.params):
            raise RuleArgumentError(
                f"sequence index {v.var!r} collides with a hole parameter"
            )
        body_src = expr_source(v.body)
        return v.var, lambda b: _eval_pred(ctx, v.body, b), lambda n: body_src
    if isinstance(v, MapArg):
        if ctx.hole.params:
            raise RuleArgumentError(
                f"argument {name!r}: the tabulated form needs a parameter-free "
                f"hole; use a lambda over the parameters instead"
            )
        entries = dict(_raw_int_map(ctx, name))
        missing = [n for n in range(depth + 1) if n not in entries]
        if missing:
            raise RuleArgumentError(
                f"argument {name!r} must tabulate 0..{depth} (missing {missing[0]})"
            )
        taken = set(ctx.reg.names) | {"clause"}
        i = 0
        while f"n{i}" in taken:
            i += 1
        var = f"n{i}"
        return (
            var,
            lambda b: _eval_pred(ctx, entries[b[var]], b),
            lambda n: expr_source(entries[n]),
        )
    raise RuleArgumentError(
        f"argument {name!r} must be a sequence like n => expr or an integer map"
    )


def _raw_int_map(ctx: RuleCtx, name: str) -> list[tuple[int, E.Expr]]:
    """A map keyed by plain integers ({0: ...; 1: ...}), no default entry."""
    v = ctx.args[name]
    if not isinstance(v, MapArg):
        raise RuleArgumentError(f"argument {name!r} must be a map like {{0: ...; 1: ...}}")
    out = []
    for key, val in v.entries:
        if not isinstance(key, str) or key == "_" or not key.isdigit():
            raise RuleArgumentError(f"argument {name!r} must use plain integer keys")
        out.append((int(key), val))
    if len({k for k, _ in out}) != len(out):
        raise RuleArgumentError(f"argument {name!r} has duplicate keys")
    return out


def _eval_pred(ctx: RuleCtx, e: E.Expr, binding: dict) -> np.ndarray:
    try:
        return E.eval_predicate(e, ctx.reg, binding, ctx.tol)
    except E.ExprError as exc:
        raise RuleArgumentError(str(exc)) from exc


# ---------------------------------------------------------------------------
# Guard/measurement helpers


def effect_pair(
    reg, tol, guard: E.Expr, vars_: tuple[str, ...], binding: dict
) -> tuple[np.ndarray, np.ndarray]:
    """sqrt(I - B) and sqrt(B), extended to the full register."""
    sub = reg.subset_dim(vars_)
    try:
        b = E.eval_operator(guard, reg, binding, vars_, tol)
    except E.ExprError as exc:
        raise RuleArgumentError(f"guard: {exc}") from exc
    b = hermitize(b)
    if min_eig(b) < -tol.psd_eps:
        raise RuleArgumentError("guard effect is not PSD")
    if min_eig(np.eye(sub) - b) < -tol.psd_eps:
        raise RuleArgumentError("guard effect exceeds the identity")
    k0 = cylindrical_extension(psd_sqrt(np.eye(sub) - b), vars_, reg)
    k1 = cylindrical_extension(psd_sqrt(b), vars_, reg)
    return k0, k1


def _branch_mix(k0: np.ndarray, k1: np.ndarray, q_exit: np.ndarray, r: np.ndarray) -> np.ndarray:
    return k0 @ q_exit @ k0 + k1 @ r @ k1


def _identity_minus(e: E.Expr) -> E.Expr:
    return E.BinOp("-", E.Identity(), e)


def _no_clause(ctx: RuleCtx, what: str) -> None:
    if any(p == "clause" for p, _ in ctx.hole.params):
        raise RuleArgumentError(f"{what} needs a single-clause hole")


# ---------------------------------------------------------------------------
# Structural rules


def _rule_skip(ctx: RuleCtx) -> RuleOutcome:
    _decode_args(ctx, ())
    obs = [
        implication_obligation("pre => post", b, ctx.hole.pre(b), ctx.hole.post(b), ctx.tol)
        for b in ctx.hole.bindings()
    ]
    return RuleOutcome(A.Skip(), [], obs)


def _rule_init(ctx: RuleCtx) -> RuleOutcome:
    _decode_args(ctx, ("vars",))
    vars_ = _varlist_arg(ctx, "vars")
    prog = A.Init(vars_)
    obs = []
    for b in ctx.hole.bindings():
        target = adjoint_apply(prog, ctx.reg, ctx.hole.post(b), b, ctx.tol)
        obs.append(
            implication_obligation("pre => wp(init, post)", b, ctx.hole.pre(b), target, ctx.tol)
        )
    return RuleOutcome(prog, [], obs)


def _rule_unit(ctx: RuleCtx) -> RuleOutcome:
    _decode_args(ctx, ("U", "vars"))
    u_expr = _expr_arg(ctx, "U")
    vars_ = _varlist_arg(ctx, "vars")
    prog = A.Unitary(vars_, u_expr)
    obs = []
    for b in ctx.hole.bindings():
        try:
            target = adjoint_apply(prog, ctx.reg, ctx.hole.post(b), b, ctx.tol)
        except E.ExprError as exc:
            raise RuleArgumentError(f"U: {exc}") from exc
        obs.append(
            implication_obligation(
                "pre => U'·post·U", b, ctx.hole.pre(b), target, ctx.tol
            )
        )
    return RuleOutcome(prog, [], obs)


def _rule_seq(ctx: RuleCtx) -> RuleOutcome:
    _decode_args(ctx, ("R",))
    rfn, rsrc = _pred_fn(ctx, "R")
    ids = ctx.alloc(2)
    params = ctx.hole.params
    ta, sa, tb, sb = {}, {}, {}, {}
    for b in ctx.hole.bindings():
        key = binding_key(params, b)
        r = rfn(b)
        pre_s, post_s = ctx.hole.src(b)
        ta[key] = (ctx.hole.pre(b), r)
        sa[key] = (pre_s, rsrc(b))
        tb[key] = (r, ctx.hole.post(b))
        sb[key] = (rsrc(b), post_s)
    kids = [HoleState(ids[0], params, ta, sa), HoleState(ids[1], params, tb, sb)]
    prog = A.Seq((A.Hole(ids[0]), A.Hole(ids[1])))
    return RuleOutcome(prog, kids, [])


def _rule_sw(ctx: RuleCtx) -> RuleOutcome:
    _decode_args(ctx, ("P", "Q"))
    pfn, psrc = _pred_fn(ctx, "P")
    qfn, qsrc = _pred_fn(ctx, "Q")
    (hid,) = ctx.alloc(1)
    table, srcs, obs = {}, {}, []
    for b in ctx.hole.bindings():
        key = binding_key(ctx.hole.params, b)
        p2, q2 = pfn(b), qfn(b)
        obs.append(implication_obligation("pre => P'", b, ctx.hole.pre(b), p2, ctx.tol))
        obs.append(implication_obligation("Q' => post", b, q2, ctx.hole.post(b), ctx.tol))
        table[key] = (p2, q2)
        srcs[key] = (psrc(b), qsrc(b))
    kid = HoleState(hid, ctx.hole.params, table, srcs)
    return RuleOutcome(A.Hole(hid), [kid], obs)


def _rule_repeat(ctx: RuleCtx) -> RuleOutcome:
    _decode_args(ctx, ("N", "R"))
    n = _int_arg(ctx, "N")
    var, body = _seq_arg(ctx, "R")

    def r_at(j: int, binding: dict) -> np.ndarray:
        return _eval_pred(ctx, body, {**binding, var: j})

    obs = []
    table, srcs = {}, {}
    child_params: ParamSpace = ctx.hole.params + ((var, tuple(range(n))),)
    for b in ctx.hole.bindings():
        obs.append(
            implication_obligation(f"pre => R({var}=0)", b, ctx.hole.pre(b), r_at(0, b), ctx.tol)
        )
        obs.append(
            implication_obligation(f"R({var}={n}) => post", b, r_at(n, b), ctx.hole.post(b), ctx.tol)
        )
        for j in range(n):
            bj = {**b, var: j}
            key = binding_key(child_params, bj)
            table[key] = (r_at(j, b), r_at(j + 1, b))
            srcs[key] = (
                expr_source(E.substitute(body, {var: E.Num(j)})),
                expr_source(E.substitute(body, {var: E.Num(j + 1)})),
            )
    if n == 0:
        return RuleOutcome(A.Repeat(0, A.Skip()), [], obs)
    (hid,) = ctx.alloc(1)
    kid = HoleState(hid, child_params, table, srcs)
    return RuleOutcome(A.Repeat(n, A.Hole(hid)), [kid], obs)


# ---------------------------------------------------------------------------
# Measurement rules


def _case_like(
    ctx: RuleCtx,
    outcomes: tuple[tuple[A.Label, E.Expr], ...],
    vars_: tuple[str, ...],
    branch_pres: Callable[[A.Label, dict], np.ndarray],
    branch_src: Callable[[A.Label, dict], str],
) -> tuple[list[HoleState], list[Obligation], dict[A.Label, str]]:
    """Shared engine for case-style rules: one child hole per outcome, plus the
    pre => sum_w sqrt(M_w)·pre_w·sqrt(M_w) side condition."""
    sub = ctx.reg.subset_dim(vars_)
    ids = ctx.alloc(len(outcomes))
    id_of = {lab: ids[i] for i, (lab, _) in enumerate(outcomes)}
    tables = {lab: ({}, {}) for lab, _ in outcomes}
    obs: list[Obligation] = []
    for b in ctx.hole.bindings():
        key = binding_key(ctx.hole.params, b)
        roots = []
        total = np.zeros((sub, sub), dtype=complex)
        for lab, me in outcomes:
            try:
                m_sub = E.eval_operator(me, ctx.reg, b, vars_, ctx.tol)
            except E.ExprError as exc:
                raise RuleArgumentError(f"measurement: {exc}") from exc
            m_sub = hermitize(m_sub)
            if min_eig(m_sub) < -ctx.tol.psd_eps:
                raise RuleArgumentError(f"outcome {A.label_text(lab)} is not PSD")
            total += m_sub
            roots.append((lab, cylindrical_extension(psd_sqrt(m_sub), vars_, ctx.reg)))
        if frob(total - np.eye(sub)) > 1e-6:
            raise RuleArgumentError("measurement outcomes must sum to the identity")
        mixed = np.zeros((ctx.reg.dim, ctx.reg.dim), dtype=complex)
        _, post_s = ctx.hole.src(b)
        for lab, root in roots:
            p_lab = branch_pres(lab, b)
            mixed += root @ p_lab @ root
            tables[lab][0][key] = (p_lab, ctx.hole.post(b))
            tables[lab][1][key] = (branch_src(lab, b), post_s)
        obs.append(
            implication_obligation(
                "pre => sum of measured branch pres",
                b,
                ctx.hole.pre(b),
                mixed,
                ctx.tol,
                kind="sum-implication",
            )
        )
    kids = [
        HoleState(id_of[lab], ctx.hole.params, tables[lab][0], tables[lab][1])
        for lab, _ in outcomes
    ]
    return kids, obs, id_of


def _rule_case(ctx: RuleCtx) -> RuleOutcome:
    _decode_args(ctx, ("M", "vars", "pre"))
    vars_ = _varlist_arg(ctx, "vars")
    m_arg = ctx.args["M"]
    if isinstance(m_arg, StdArg):
        cards = tuple(ctx.reg.card(v) for v in vars_)
        outcomes = A._std_outcomes(vars_, cards)
        meas: A.Measurement = A.General(outcomes)
    elif isinstance(m_arg, MapArg):
        pairs = []
        for key, val in m_arg.entries:
            if not isinstance(key, str) or key == "_":
                raise RuleArgumentError("M must map outcome labels to effect expressions")
            lab = A.parse_label(key)
            if len(lab) != len(vars_):
                raise RuleArgumentError(
                    f"outcome label {key} does not match {len(vars_)} measured variable(s)"
                )
            pairs.append((lab, val))
        outcomes = tuple(pairs)
        meas = A.General(outcomes)
    else:
        raise RuleArgumentError("M must be std or a map of outcome labels")

    pre_arg = ctx.args["pre"]
    if not isinstance(pre_arg, MapArg):
        raise RuleArgumentError("pre must be a map keyed by outcome labels")
    by_label: dict[A.Label, E.Expr] = {}
    default = None
    for key, val in pre_arg.entries:
        if key == "_":
            default = val
        elif isinstance(key, str):
            by_label[A.parse_label(key)] = val
        else:
            raise RuleArgumentError("pre map keys must be outcome labels or _")

    def pre_of(lab: A.Label, b: dict) -> E.Expr:
        e = by_label.get(lab, default)
        if e is None:
            raise RuleArgumentError(f"pre map has no entry for outcome {A.label_text(lab)}")
        return e

    kids, obs, id_of = _case_like(
        ctx,
        outcomes,
        vars_,
        lambda lab, b: _eval_pred(ctx, pre_of(lab, b), b),
        lambda lab, b: expr_source(pre_of(lab, b)),
    )
    branches = tuple((lab, A.Hole(id_of[lab])) for lab, _ in outcomes)
    return RuleOutcome(A.Case(vars_, meas, branches), kids, obs)


def _rule_if_else(ctx: RuleCtx) -> RuleOutcome:
    _decode_args(ctx, ("B", "vars", "R1", "R0"))
    guard = _expr_arg(ctx, "B")
    vars_ = _varlist_arg(ctx, "vars")
    r1fn, r1src = _pred_fn(ctx, "R1")
    r0fn, r0src = _pred_fn(ctx, "R0")
    outcomes = (((1,), guard), ((0,), _identity_minus(guard)))
    pres = {(1,): r1fn, (0,): r0fn}
    srcs = {(1,): r1src, (0,): r0src}
    kids, obs, id_of = _case_like(
        ctx, outcomes, vars_, lambda lab, b: pres[lab](b), lambda lab, b: srcs[lab](b)
    )
    branches = (((1,), A.Hole(id_of[(1,)])), ((0,), A.Hole(id_of[(0,)])))
    return RuleOutcome(A.Case(vars_, A.Binary(guard), branches), kids, obs)


def _rule_if(ctx: RuleCtx) -> RuleOutcome:
    _decode_args(ctx, ("B", "vars", "R"))
    guard = _expr_arg(ctx, "B")
    vars_ = _varlist_arg(ctx, "vars")
    rfn, rsrc = _pred_fn(ctx, "R")
    (hid,) = ctx.alloc(1)
    table, srcs, obs = {}, {}, []
    for b in ctx.hole.bindings():
        key = binding_key(ctx.hole.params, b)
        k0, k1 = effect_pair(ctx.reg, ctx.tol, guard, vars_, b)
        r = rfn(b)
        post = ctx.hole.post(b)
        obs.append(
            implication_obligation(
                "pre => B0(post) + B1(R)",
                b,
                ctx.hole.pre(b),
                _branch_mix(k0, k1, post, r),
                ctx.tol,
                kind="sum-implication",
            )
        )
        table[key] = (r, post)
        srcs[key] = (rsrc(b), ctx.hole.src(b)[1])
    kid = HoleState(hid, ctx.hole.params, table, srcs)
    branches = (((1,), A.Hole(hid)), ((0,), A.Skip()))
    return RuleOutcome(A.Case(vars_, A.Binary(guard), branches), [kid], obs)


# ---------------------------------------------------------------------------
# Split rules


def _rule_split(ctx: RuleCtx, stochastic: bool) -> RuleOutcome:
    _decode_args(ctx, ("w", "pre", "post"))
    _no_clause(ctx, "split")
    weights = _raw_int_map(ctx, "w")
    pre_map = dict(_raw_int_map(ctx, "pre"))
    post_map = dict(_raw_int_map(ctx, "post"))
    gammas = [k for k, _ in weights]
    if sorted(gammas) != list(range(len(gammas))):
        raise RuleArgumentError("w keys must be 0..k-1")
    if set(pre_map) != set(gammas) or set(post_map) != set(gammas):
        raise RuleArgumentError("pre/post maps must cover the same keys as w")

    (hid,) = ctx.alloc(1)
    child_params: ParamSpace = (("clause", tuple(range(len(gammas)))),) + ctx.hole.params
    table, srcs, obs = {}, {}, []
    for b in ctx.hole.bindings():
        ws = []
        for g, we in weights:
            val = E.eval_scalar(we, ctx.reg, b)
            if abs(val.imag) > 1e-12:
                raise RuleArgumentError(f"weight {g} must be real")
            w = float(val.real)
            ws.append(w)
            obs.append(
                scalar_obligation(
                    "weight-sum", f"w[{g}] >= 0", b, min(w, 0.0), 1e-12
                )
            )
        if stochastic:
            obs.append(
                scalar_obligation(
                    "weight-sum", "weights sum to 1", b, sum(ws) - 1.0, WEIGHT_SUM_EPS
                )
            )
        sum_p = np.zeros((ctx.reg.dim, ctx.reg.dim), dtype=complex)
        sum_q = np.zeros((ctx.reg.dim, ctx.reg.dim), dtype=complex)
        for (g, _), w in zip(weights, ws):
            p_g = _eval_pred(ctx, pre_map[g], b)
            q_g = _eval_pred(ctx, post_map[g], b)
            sum_p += w * p_g
            sum_q += w * q_g
            key = binding_key(child_params, {**b, "clause": g})
            table[key] = (p_g, q_g)
            srcs[key] = (expr_source(pre_map[g]), expr_source(post_map[g]))
        obs.append(
            implication_obligation(
                "pre => sum of weighted pres", b, ctx.hole.pre(b), sum_p, ctx.tol,
                kind="sum-implication",
            )
        )
        obs.append(
            implication_obligation(
                "sum of weighted posts => post", b, sum_q, ctx.hole.post(b), ctx.tol,
                kind="sum-implication",
            )
        )
    kid = HoleState(hid, child_params, table, srcs)
    return RuleOutcome(A.Hole(hid), [kid], obs)


# ---------------------------------------------------------------------------
# Loop rules


def _rule_while_partial(ctx: RuleCtx) -> RuleOutcome:
    _decode_args(ctx, ("B", "vars", "R"))
    guard = _expr_arg(ctx, "B")
    vars_ = _varlist_arg(ctx, "vars")
    rfn, rsrc = _pred_fn(ctx, "R")
    (hid,) = ctx.alloc(1)
    table, srcs, obs = {}, {}, []
    for b in ctx.hole.bindings():
        key = binding_key(ctx.hole.params, b)
        k0, k1 = effect_pair(ctx.reg, ctx.tol, guard, vars_, b)
        r = rfn(b)
        mix = _branch_mix(k0, k1, ctx.hole.post(b), r)
        obs.append(
            implication_obligation(
                "pre => B0(post) + B1(R)", b, ctx.hole.pre(b), mix, ctx.tol,
                kind="sum-implication",
            )
        )
        table[key] = (r, mix)
        srcs[key] = (rsrc(b), f"B0({ctx.hole.src(b)[1]}) + B1({rsrc(b)})")
    kid = HoleState(hid, ctx.hole.params, table, srcs)
    return RuleOutcome(A.While(vars_, guard, A.Hole(hid)), [kid], obs)


def _rule_while_total(ctx: RuleCtx) -> RuleOutcome:
    _decode_args(ctx, ("B", "vars", "R"))
    guard = _expr_arg(ctx, "B")
    vars_ = _varlist_arg(ctx, "vars")
    var, rfn, rsrc = _seq_family(ctx, "R", N_CHECK)
    (hid,) = ctx.alloc(1)
    child_params: ParamSpace = ctx.hole.params + ((var, tuple(range(N_CHECK + 1))),)
    table, srcs, obs = {}, {}, []
    dim = ctx.reg.dim
    for b in ctx.hole.bindings():
        k0, k1 = effect_pair(ctx.reg, ctx.tol, guard, vars_, b)
        seq = [np.zeros((dim, dim), dtype=complex)]
        for n in range(N_CHECK + 1):
            seq.append(rfn({**b, var: n}))
        for n in range(N_CHECK + 1):
            obs.append(
                implication_obligation(
                    f"R({var}={n}) => R({var}={n + 1})",
                    b,
                    seq[n],
                    seq[n + 1],
                    ctx.tol,
                    kind="sequence-monotone",
                )
            )
        drift = frob(seq[N_CHECK + 1] - seq[N_CHECK])
        obs.append(
            scalar_obligation(
                "sequence-limit",
                f"R stabilizes within {N_CHECK} steps",
                b,
                drift,
                SEQ_CONV_EPS,
            )
        )
        limit = seq[N_CHECK + 1]
        obs.append(
            implication_obligation(
                "pre => B0(post) + B1(R_limit)",
                b,
                ctx.hole.pre(b),
                _branch_mix(k0, k1, ctx.hole.post(b), limit),
                ctx.tol,
                kind="sum-implication",
            )
        )
        post_s = ctx.hole.src(b)[1]
        for n in range(N_CHECK + 1):
            key = binding_key(child_params, {**b, var: n})
            table[key] = (seq[n + 1], _branch_mix(k0, k1, ctx.hole.post(b), seq[n]))
            srcs[key] = (rsrc(n), f"B0({post_s}) + B1(R({var}={n}))")
    note = (
        f"total-correctness loop certificate checked to depth {N_CHECK}; "
        f"the invariant sequence stabilized within {SEQ_CONV_EPS:g}"
    )
    kid = HoleState(hid, child_params, table, srcs, note=note)
    return RuleOutcome(A.While(vars_, guard, A.Hole(hid)), [kid], obs, note=note)


# ---------------------------------------------------------------------------
# Boosting rules


def _projection_obligations(
    ctx: RuleCtx, q_sub: np.ndarray, binding: dict
) -> list[Obligation]:
    qq = q_sub @ q_sub
    return [
        implication_obligation("Q·Q => Q (projection)", binding, qq, q_sub, ctx.tol),
        implication_obligation("Q => Q·Q (projection)", binding, q_sub, qq, ctx.tol),
    ]


def _boost_common(
    ctx: RuleCtx, q_expr: E.Expr, vars_: tuple[str, ...], eps: float
) -> tuple[str, HoleState, ParamSpace, list[Obligation], str]:
    """Build the inner two-clause amplifier hole: (eps·Q⊥ => Q), (Q⊥ => I)."""
    rest = tuple(p for p in ctx.hole.params if p[0] != "clause")
    child_params: ParamSpace = (("clause", (0, 1)),) + rest
    table, srcs, obs = {}, {}, []
    q_src = expr_source(q_expr)
    for b in iter_bindings(rest):
        try:
            q_on = E.eval_operator(q_expr, ctx.reg, b, vars_, ctx.tol)
        except E.ExprError as exc:
            raise RuleArgumentError(f"Q: {exc}") from exc
        q_on = hermitize(q_on)
        obs.extend(_projection_obligations(ctx, q_on, b))
        q_ext = cylindrical_extension(q_on, vars_, ctx.reg)
        perp = np.eye(ctx.reg.dim) - q_ext
        k0 = binding_key(child_params, {**b, "clause": 0})
        k1 = binding_key(child_params, {**b, "clause": 1})
        table[k0] = (eps * perp, q_ext)
        srcs[k0] = (f"{eps!r}*(I - {q_src})", q_src)
        table[k1] = (perp, np.eye(ctx.reg.dim))
        srcs[k1] = (f"I - {q_src}", "I")
    (hid,) = ctx.alloc(1)
    kid = HoleState(hid, child_params, table, srcs)
    return hid, kid, rest, obs, q_src


def _constant_scalar(ctx: RuleCtx, name: str, rest: ParamSpace) -> float:
    fn = _scalar_fn(ctx, name)
    vals = {round(fn(b), 15) for b in iter_bindings(rest)}
    if len(vals) != 1:
        raise RuleArgumentError(f"argument {name!r} must not vary with parameters")
    return vals.pop()


def _rule_boost_rep(ctx: RuleCtx) -> RuleOutcome:
    _decode_args(ctx, ("Q", "vars", "p", "eps"))
    q_expr = _expr_arg(ctx, "Q")
    vars_ = _varlist_arg(ctx, "vars")
    if ctx.hole.clause_count != 2:
        raise RuleArgumentError("boostRep applies to a two-clause hole: (p·I => Q), (I => I)")
    rest = tuple(p for p in ctx.hole.params if p[0] != "clause")
    p = _constant_scalar(ctx, "p", rest)
    eps = _constant_scalar(ctx, "eps", rest)
    if not (0.0 < p < 1.0):
        raise RuleArgumentError(f"p must lie in (0, 1), got {p}")
    if not (0.0 < eps < p):
        raise RuleArgumentError(f"eps must lie in (0, p), got {eps}")
    n = math.ceil(math.log(1.0 - p) / math.log(1.0 - eps))

    hid, kid, rest, obs, q_src = _boost_common(ctx, q_expr, vars_, eps)
    eye = np.eye(ctx.reg.dim)
    for b in iter_bindings(rest):
        q_on = E.eval_operator(q_expr, ctx.reg, b, vars_, ctx.tol)
        q_ext = cylindrical_extension(q_on, vars_, ctx.reg)
        b0 = {**b, "clause": 0}
        b1 = {**b, "clause": 1}
        obs.append(
            implication_obligation("clause-0 pre => p·I", b0, ctx.hole.pre(b0), p * eye, ctx.tol)
        )
        obs.append(
            implication_obligation("Q => clause-0 post", b0, q_ext, ctx.hole.post(b0), ctx.tol)
        )
        obs.append(
            implication_obligation("I => clause-1 post", b1, eye, ctx.hole.post(b1), ctx.tol)
        )
    body = A.Case(
        vars_,
        A.Binary(_identity_minus(q_expr)),
        (((1,), A.Hole(hid)), ((0,), A.Skip())),
    )
    note = (
        f"after {n} = ceil(log(1-{p})/log(1-{eps})) amplification rounds the failure "
        f"probability is at most (1-{eps})^{n} <= {1 - p:g}"
    )
    return RuleOutcome(A.Repeat(n, body), [kid], obs, note=note)


def _rule_boost_while(ctx: RuleCtx) -> RuleOutcome:
    _decode_args(ctx, ("Q", "vars", "eps"))
    q_expr = _expr_arg(ctx, "Q")
    vars_ = _varlist_arg(ctx, "vars")
    if ctx.hole.clause_count != 1:
        raise RuleArgumentError("boostWhile applies to a single-clause hole")
    rest = ctx.hole.params
    eps = _constant_scalar(ctx, "eps", rest)
    if not (0.0 < eps < 1.0):
        raise RuleArgumentError(f"eps must lie in (0, 1), got {eps}")

    hid, kid, rest, obs, q_src = _boost_common(ctx, q_expr, vars_, eps)
    for b in iter_bindings(rest):
        q_on = E.eval_operator(q_expr, ctx.reg, b, vars_, ctx.tol)
        q_ext = cylindrical_extension(q_on, vars_, ctx.reg)
        obs.append(implication_obligation("Q => post", b, q_ext, ctx.hole.post(b), ctx.tol))
    note = (
        "loop termination is almost-sure: each round leaves the target with "
        f"probability at most {1 - eps:g}"
    )
    return RuleOutcome(A.While(vars_, _identity_minus(q_expr), A.Hole(hid)), [kid], obs, note=note)


# ---------------------------------------------------------------------------
# Registry

BOTH = frozenset({"total", "partial"})

RULES: dict[str, Rule] = {}


def _register(rule: Rule) -> None:
    RULES[rule.name] = rule


_register(Rule("H.skip", BOTH, "fill with skip when pre implies post", {}, "none", _rule_skip))
_register(
    Rule(
        "H.init",
        BOTH,
        "fill with initialization of the listed variables",
        {"vars": "variable list"},
        "none",
        _rule_init,
    )
)
_register(
    Rule(
        "H.unit",
        BOTH,
        "fill with a unitary application",
        {"U": "unitary expression", "vars": "variable list"},
        "none",
        _rule_unit,
    )
)
_register(
    Rule(
        "H.seq",
        BOTH,
        "split into two sequenced holes through a midpoint predicate",
        {"R": "predicate (expression or binding map)"},
        "first; second",
        _rule_seq,
    )
)
_register(
    Rule(
        "H.sw",
        BOTH,
        "strengthen the pre / weaken the post",
        {"P": "new precondition", "Q": "new postcondition"},
        "one hole with the new spec",
        _rule_sw,
    )
)
_register(
    Rule(
        "H.repeat",
        BOTH,
        "fill with a counted loop over an indexed invariant family",
        {"N": "iteration count", "R": "sequence j => predicate"},
        "body hole indexed by the counter",
        _rule_repeat,
    )
)
_register(
    Rule(
        "H.case",
        BOTH,
        "fill with a measurement case over labelled outcomes",
        {"M": "std or {label: effect}", "vars": "measured variables", "pre": "{label: predicate}"},
        "one hole per outcome, in outcome order",
        _rule_case,
    )
)
_register(
    Rule(
        "H.ifElse",
        BOTH,
        "fill with a binary measurement and two branches",
        {"B": "guard effect", "vars": "measured variables", "R1": "then pre", "R0": "else pre"},
        "then hole; else hole",
        _rule_if_else,
    )
)
_register(
    Rule(
        "H.if",
        BOTH,
        "fill with a binary measurement whose else branch skips",
        {"B": "guard effect", "vars": "measured variables", "R": "then pre"},
        "then hole",
        _rule_if,
    )
)
_register(
    Rule(
        "HP.split",
        frozenset({"partial"}),
        "split the spec into a convex combination of clauses",
        {"w": "{k: weight}", "pre": "{k: predicate}", "post": "{k: predicate}"},
        "one multi-clause hole",
        lambda ctx: _rule_split(ctx, stochastic=True),
    )
)
_register(
    Rule(
        "HT.split",
        BOTH,
        "split the spec into a nonnegative combination of clauses",
        {"w": "{k: weight}", "pre": "{k: predicate}", "post": "{k: predicate}"},
        "one multi-clause hole",
        lambda ctx: _rule_split(ctx, stochastic=False),
        partial_needs_lenient=True,
    )
)
_register(
    Rule(
        "HP.while",
        frozenset({"partial"}),
        "fill with a guarded loop justified by an invariant",
        {"B": "guard effect", "vars": "guard variables", "R": "invariant predicate"},
        "body hole",
        _rule_while_partial,
    )
)
_register(
    Rule(
        "HT.while",
        frozenset({"total"}),
        "fill with a guarded loop justified by a converging invariant sequence",
        {
            "B": "guard effect",
            "vars": "guard variables",
            "R": "sequence n => predicate (R_0 = 0), or a table {0: ...; 1: ...}",
        },
        "body hole indexed by the sequence position",
        _rule_while_total,
    )
)
_register(
    Rule(
        "H.boostRep",
        BOTH,
        "amplify a probabilistic subroutine by bounded repetition",
        {
            "Q": "target projection",
            "vars": "projection variables",
            "p": "target success bound",
            "eps": "per-round success bound",
        },
        "inner amplifier hole (two clauses)",
        _rule_boost_rep,
    )
)
_register(
    Rule(
        "H.boostWhile",
        frozenset({"total"}),
        "amplify a probabilistic subroutine by an until-success loop",
        {"Q": "target projection", "vars": "projection variables", "eps": "per-round success bound"},
        "inner amplifier hole (two clauses)",
        _rule_boost_while,
    )
)


def rule_available(rule: Rule, mode: str, strict: bool) -> bool:
    if mode not in rule.modes:
        return False
    if strict and mode == "partial" and rule.partial_needs_lenient:
        return False
    return True
