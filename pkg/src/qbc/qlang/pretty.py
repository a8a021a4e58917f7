"""Source printers. ``parse(print(x))`` reproduces x for expressions, programs
with syntactic hole specs, and refine scripts."""

from __future__ import annotations

from . import ast as A
from . import exprs as E
from . import parse as P

_LEVEL_ADD, _LEVEL_MUL, _LEVEL_POW, _LEVEL_ATOM = 1, 2, 3, 4


def _num_text(v: complex) -> str:
    def real_text(x: float) -> str:
        if x == int(x) and abs(x) < 1e15:
            return str(int(x))
        return repr(x)

    if v.imag == 0:
        return real_text(v.real)
    if v.real == 0:
        return real_text(v.imag) + "i"
    return f"({real_text(v.real)} + {real_text(v.imag)}i)"


def expr_source(e: E.Expr) -> str:
    text, _ = _render(e)
    return text


def _render(e: E.Expr) -> tuple[str, int]:
    if isinstance(e, E.Num):
        v = e.value
        if v.imag == 0 and v.real < 0:
            return f"-{_num_text(-v)}", _LEVEL_POW  # prints like a negated atom
        if v.imag < 0 and v.real == 0:
            return f"-{_num_text(-v)}", _LEVEL_POW
        return _num_text(v), _LEVEL_ATOM
    if isinstance(e, E.Str):
        return f'"{e.text}"', _LEVEL_ATOM
    if isinstance(e, E.Sym):
        return e.name, _LEVEL_ATOM
    if isinstance(e, E.Pi):
        return "pi", _LEVEL_ATOM
    if isinstance(e, E.Identity):
        return "I", _LEVEL_ATOM
    if isinstance(e, E.Gate):
        if e.arg is None:
            return e.name, _LEVEL_ATOM
        return f"{e.name}({expr_source(e.arg)})", _LEVEL_ATOM
    if isinstance(e, E.On):
        if isinstance(e.body, E.Identity):
            return f"identity[{', '.join(e.vars)}]", _LEVEL_ATOM
        return f"on[{', '.join(e.vars)}]({expr_source(e.body)})", _LEVEL_ATOM
    if isinstance(e, E.MatLit):
        rows = ", ".join("[" + ", ".join(expr_source(x) for x in row) + "]" for row in e.rows)
        return f"mat[{rows}]", _LEVEL_ATOM
    if isinstance(e, E.Fn):
        if e.name in ("ket", "bra"):
            args = ", ".join(_ket_atom_text(a) for a in e.args)
        else:
            args = ", ".join(expr_source(a) for a in e.args)
        return f"{e.name}({args})", _LEVEL_ATOM
    if isinstance(e, E.Neg):
        inner, lvl = _render(e.a)
        if lvl < _LEVEL_POW:
            return f"-({inner})", _LEVEL_POW
        return f"-{inner}", _LEVEL_POW
    if isinstance(e, E.BinOp):
        return _render_binop(e)
    raise TypeError(f"cannot print {type(e).__name__}")


def _ket_atom_text(a: E.Expr) -> str:
    if isinstance(a, E.Str):
        return a.text
    if isinstance(a, E.Sym):
        return a.name
    if isinstance(a, E.Num):
        return _num_text(a.value)
    return expr_source(a)


def _render_binop(e: E.BinOp) -> tuple[str, int]:
    if e.op in ("+", "-", "*", "/", "kron"):
        # left-associative: the right operand must re-parenthesize at equal level
        lvl = _LEVEL_ADD if e.op in ("+", "-") else _LEVEL_MUL
        a, la = _render(e.a)
        b, lb = _render(e.b)
        if la < lvl:
            a = f"({a})"
        if lb <= lvl:
            b = f"({b})"
        if e.op in ("+", "-"):
            return f"{a} {e.op} {b}", lvl
        joiner = " kron " if e.op == "kron" else e.op
        return f"{a}{joiner}{b}", lvl
    if e.op == "^":
        lvl = _LEVEL_POW
        a, la = _render(e.a)
        b, lb = _render(e.b)
        if la < _LEVEL_ATOM:
            a = f"({a})"
        if lb < _LEVEL_POW:
            b = f"({b})"
        return f"{a}^{b}", lvl
    raise TypeError(f"unknown operator {e.op!r}")


# ---------------------------------------------------------------------------
# Programs


def program_source(p: A.Program, indent: int = 0) -> str:
    pad = "  " * indent
    if isinstance(p, A.Seq):
        return ";\n".join(program_source(s, indent) for s in p.parts)
    if isinstance(p, A.Skip):
        return pad + "skip"
    if isinstance(p, A.Init):
        return pad + f"{', '.join(p.vars)} := |0>"
    if isinstance(p, A.Unitary):
        return pad + f"{', '.join(p.vars)} *= {expr_source(p.op)}"
    if isinstance(p, A.Repeat):
        return pad + f"repeat {p.count} {{\n{program_source(p.body, indent + 1)}\n{pad}}}"
    if isinstance(p, A.Case):
        meas = _meas_source(p.meas)
        head = f"case {meas}[{', '.join(p.vars)}]" if meas else f"case [{', '.join(p.vars)}]"
        lines = [pad + head + " {"]
        for lab, body in p.branches:
            text = A.label_text(lab)
            if _is_short(body):
                lines.append(pad + f"  {text}: {program_source(body, 0)};")
            else:
                lines.append(pad + f"  {text}:")
                lines.append(program_source(body, indent + 2) + ";")
        lines.append(pad + "}")
        return "\n".join(lines)
    if isinstance(p, A.While):
        guard = "" if p.guard is None else expr_source(p.guard) + " "
        return (
            pad
            + f"while {guard}[{', '.join(p.vars)}] {{\n"
            + program_source(p.body, indent + 1)
            + f"\n{pad}}}"
        )
    if isinstance(p, A.If):
        guard = "" if p.guard is None else expr_source(p.guard) + " "
        out = (
            pad
            + f"if {guard}[{', '.join(p.vars)}] {{\n"
            + program_source(p.then, indent + 1)
            + f"\n{pad}}}"
        )
        if p.orelse is not None:
            out += f" else {{\n{program_source(p.orelse, indent + 1)}\n{pad}}}"
        return out
    if isinstance(p, A.Hole):
        if p.spec is None:
            return pad + f"hole {p.hid} (...)"
        clauses = ", ".join(
            f"{expr_source(c.pre)} => {expr_source(c.post)}" for c in p.spec.clauses
        )
        return pad + f"hole {p.hid} ({clauses})"
    raise TypeError(f"cannot print {type(p).__name__}")


def _meas_source(m: A.Measurement) -> str:
    if isinstance(m, A.StdBasis):
        return "std"
    if isinstance(m, A.Binary):
        return expr_source(m.op) + " "
    parts = "; ".join(f"{A.label_text(lab)}: {expr_source(op)}" for lab, op in m.outcomes)
    return f"({parts}) "


def _is_short(p: A.Program) -> bool:
    return isinstance(p, (A.Skip, A.Init, A.Unitary, A.Hole))


# ---------------------------------------------------------------------------
# Scripts


def arg_source(v: object) -> str:
    if isinstance(v, P.VarListArg):
        return f"[{', '.join(v.names)}]"
    if isinstance(v, P.SeqLambdaArg):
        return f"{v.var} => {expr_source(v.body)}"
    if isinstance(v, P.StdArg):
        return "std"
    if isinstance(v, P.MapArg):
        parts = []
        for key, ex in v.entries:
            if key == "_":
                ktext = "_"
            elif isinstance(key, str):
                ktext = key
            else:
                ktext = ", ".join(f"{s}={val}" for s, val in key)
            parts.append(f"{ktext}: {expr_source(ex)}")
        return "{" + "; ".join(parts) + "}"
    if isinstance(v, E.Expr):
        return expr_source(v)
    raise TypeError(f"cannot print argument {type(v).__name__}")


def step_source(step: P.RefineStep) -> str:
    args = ", ".join(f"{name} = {arg_source(val)}" for name, val in step.args)
    out = f"refine {step.hole} with {step.rule}({args})"
    if step.names:
        out += " -> " + ", ".join(step.names)
    return out + ";"


def script_source(sc: P.Script) -> str:
    lines = [f"spec {sc.name} {{"]
    decls = ", ".join(f"{n}:{c}" for n, c in zip(sc.reg.names, sc.reg.cards))
    lines.append(f"  vars {decls};")
    for sym, dom in sc.params:
        lines.append(f"  param {sym} in {{{', '.join(str(v) for v in dom)}}};")
    lines.append(f"  mode {sc.mode};")
    clauses = ", ".join(
        f"{expr_source(c.pre)} => {expr_source(c.post)}" for c in sc.clauses
    )
    lines.append(f"  hole {sc.hole_id} : {clauses};")
    lines.append("}")
    for step in sc.steps:
        lines.append(step_source(step))
    return "\n".join(lines) + "\n"
