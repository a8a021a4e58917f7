"""Recursive-descent parsers for expressions, programs, and refine scripts.

One tokenizer serves all three layers. The surface syntax is line-agnostic;
``#`` starts a comment. Outcome labels are digit strings (one digit per
measured variable), so each measured variable must have at most ten levels.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from ..matrixcore import VariableRegistry
from . import ast as A
from . import exprs as E


class QbcSyntaxError(ValueError):
    def __init__(self, msg: str, line: int = 0, col: int = 0):
        super().__init__(f"line {line}, column {col}: {msg}" if line else msg)
        self.line = line
        self.col = col


@dataclass(frozen=True)
class Tok:
    kind: str
    text: str
    line: int
    col: int


_TOKEN_RE = re.compile(
    r"""
    (?P<WS>\s+|\#[^\n]*)
  | (?P<NUM>\d+(\.\d+)?([eE][+-]?\d+)?i?)
  | (?P<STR>"[^"\n]*")
  | (?P<ID>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<OP>:=|\*=|=>|->|\|0>|[()\[\]{},;:=+\-*/^.|<>])
    """,
    re.VERBOSE,
)


def tokenize(text: str) -> list[Tok]:
    toks: list[Tok] = []
    pos = 0
    line, col = 1, 1
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise QbcSyntaxError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        lexeme = m.group()
        if kind != "WS":
            toks.append(Tok(kind, lexeme, line, col))
        nl = lexeme.count("\n")
        if nl:
            line += nl
            col = len(lexeme) - lexeme.rfind("\n")
        else:
            col += len(lexeme)
        pos = m.end()
    toks.append(Tok("EOF", "", line, col))
    return toks


KEYWORDS = {"skip", "repeat", "case", "if", "else", "while", "hole"}
FN_NAMES = {
    "sqrt", "arcsin", "sin", "cos", "proj", "adj", "kron", "kpow",
    "ket", "bra", "marked", "sol_state", "phase_oracle", "xor_oracle",
}


class Parser:
    def __init__(self, text: str):
        self.toks = tokenize(text)
        self.i = 0
        self._auto_hole = 0

    # -- plumbing ----------------------------------------------------------

    def peek(self, k: int = 0) -> Tok:
        j = min(self.i + k, len(self.toks) - 1)
        return self.toks[j]

    def next(self) -> Tok:
        t = self.toks[self.i]
        if t.kind != "EOF":
            self.i += 1
        return t

    def at(self, text: str) -> bool:
        return self.peek().text == text and self.peek().kind in ("OP", "ID")

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.next()
            return True
        return False

    def expect(self, text: str) -> Tok:
        t = self.peek()
        if not self.at(text):
            raise QbcSyntaxError(f"expected {text!r}, found {t.text or 'end of input'!r}", t.line, t.col)
        return self.next()

    def expect_kind(self, kind: str, what: str) -> Tok:
        t = self.peek()
        if t.kind != kind:
            raise QbcSyntaxError(f"expected {what}, found {t.text or 'end of input'!r}", t.line, t.col)
        return self.next()

    def err(self, msg: str):
        t = self.peek()
        raise QbcSyntaxError(msg, t.line, t.col)

    def done(self) -> bool:
        return self.peek().kind == "EOF"

    # -- expressions -------------------------------------------------------

    def expr(self) -> E.Expr:
        node = self.term()
        while self.peek().text in ("+", "-") and self.peek().kind == "OP":
            op = self.next().text
            node = E.BinOp(op, node, self.term())
        return node

    def term(self) -> E.Expr:
        node = self.unary()
        while True:
            t = self.peek()
            if t.kind == "OP" and t.text in ("*", "/"):
                self.next()
                node = E.BinOp(t.text, node, self.unary())
            elif t.kind == "ID" and t.text == "kron":
                self.next()
                node = E.BinOp("kron", node, self.unary())
            else:
                return node

    def unary(self) -> E.Expr:
        if self.accept("-"):
            inner = self.unary()
            if isinstance(inner, E.Num):
                return E.Num(-inner.value)
            return E.Neg(inner)
        return self.power()

    def power(self) -> E.Expr:
        base = self.primary()
        if self.accept("^"):
            return E.BinOp("^", base, self.unary())
        return base

    def primary(self) -> E.Expr:
        t = self.peek()
        if t.kind == "NUM":
            self.next()
            return E.Num(self._num_value(t.text))
        if t.kind == "STR":
            self.next()
            return E.Str(t.text[1:-1])
        if t.kind == "OP" and t.text == "(":
            self.next()
            node = self.expr()
            self.expect(")")
            return node
        if t.kind != "ID":
            self.err(f"expected an expression, found {t.text or 'end of input'!r}")
        name = self.next().text
        if name == "pi":
            return E.Pi()
        if name == "mat":
            return self._mat_literal()
        if name == "on":
            self.expect("[")
            vars_ = self._var_list()
            self.expect("]")
            self.expect("(")
            body = self.expr()
            self.expect(")")
            return E.On(vars_, body)
        if name in ("I", "identity"):
            if self.accept("["):
                vars_ = self._var_list()
                self.expect("]")
                return E.On(vars_, E.Identity())
            return E.Identity()
        if name in E.GATE_NAMES:
            return E.Gate(name)
        if name in E.PARAM_GATES:
            self.expect("(")
            arg = self.expr()
            self.expect(")")
            return E.Gate(name, arg)
        if name in ("ket", "bra"):
            self.expect("(")
            args = [self._ket_atom()]
            while self.accept(","):
                args.append(self._ket_atom())
            self.expect(")")
            return E.Fn(name, tuple(args))
        if name in FN_NAMES:
            self.expect("(")
            args = [self.expr()]
            while self.accept(","):
                args.append(self.expr())
            self.expect(")")
            return E.Fn(name, tuple(args))
        return E.Sym(name)

    def _ket_atom(self) -> E.Expr:
        t = self.peek()
        if t.kind == "NUM":
            if any(c not in "0123456789" for c in t.text):
                self.err("ket labels must be plain digits")
            self.next()
            return E.Str(t.text)
        if t.kind == "ID":
            self.next()
            return E.Sym(t.text)
        self.err("expected a label or symbol in ket(...)")

    def _num_value(self, text: str) -> complex:
        if text.endswith("i"):
            return complex(0.0, float(text[:-1]))
        return complex(float(text))

    def _mat_literal(self) -> E.Expr:
        self.expect("[")
        rows = []
        while True:
            self.expect("[")
            row = [self.expr()]
            while self.accept(","):
                row.append(self.expr())
            self.expect("]")
            rows.append(tuple(row))
            if not self.accept(","):
                break
        self.expect("]")
        return E.MatLit(tuple(rows))

    def _var_list(self) -> tuple[str, ...]:
        names = [self.expect_kind("ID", "a variable name").text]
        while self.accept(","):
            names.append(self.expect_kind("ID", "a variable name").text)
        return tuple(names)

    # -- programs ----------------------------------------------------------

    def program(self, stop=("}",)) -> A.Program:
        stmts = [self.statement()]
        while self.accept(";"):
            if self.done() or self.peek().text in stop or self._at_branch_label():
                break
            stmts.append(self.statement())
        if len(stmts) == 1:
            return stmts[0]
        return A.Seq(tuple(stmts))

    def _at_branch_label(self) -> bool:
        return self.peek().kind == "NUM" and self.peek(1).text == ":"

    def statement(self) -> A.Program:
        t = self.peek()
        if t.kind != "ID":
            self.err(f"expected a statement, found {t.text or 'end of input'!r}")
        if t.text == "skip":
            self.next()
            return A.Skip()
        if t.text == "repeat":
            self.next()
            n_tok = self.expect_kind("NUM", "a repeat count")
            if any(c not in "0123456789" for c in n_tok.text):
                self.err("repeat count must be a nonnegative integer")
            self.expect("{")
            body = self.program()
            self.expect("}")
            return A.Repeat(int(n_tok.text), body)
        if t.text == "case":
            self.next()
            meas = self._measurement()
            self.expect("[")
            vars_ = self._var_list()
            self.expect("]")
            self.expect("{")
            branches = self._branches()
            self.expect("}")
            m: A.Measurement
            if meas is None or meas == "std":
                m = A.StdBasis()
            elif isinstance(meas, tuple):
                m = A.General(meas)
            else:
                m = A.Binary(meas)
            return A.Case(vars_, m, branches)
        if t.text == "if":
            self.next()
            meas = self._measurement()
            if isinstance(meas, tuple) or meas == "std":
                self.err("if takes a yes/no measurement")
            self.expect("[")
            vars_ = self._var_list()
            self.expect("]")
            self.expect("{")
            then = self.program()
            self.expect("}")
            orelse = None
            if self.accept("else"):
                self.expect("{")
                orelse = self.program()
                self.expect("}")
            return A.If(vars_, meas, then, orelse)
        if t.text == "while":
            self.next()
            meas = self._measurement()
            if isinstance(meas, tuple) or meas == "std":
                self.err("while takes a yes/no measurement")
            self.expect("[")
            vars_ = self._var_list()
            self.expect("]")
            self.expect("{")
            body = self.program()
            self.expect("}")
            return A.While(vars_, meas, body)
        if t.text == "hole":
            self.next()
            hid = None
            if self.peek().kind == "ID":
                hid = self.next().text
            self.expect("(")
            clauses = [self._clause()]
            while self.accept(","):
                clauses.append(self._clause())
            self.expect(")")
            if hid is None:
                self._auto_hole += 1
                hid = f"h{self._auto_hole}"
            return A.Hole(hid, A.MultiSpec(tuple(clauses)))
        # assignment forms: vars := |0>  /  vars *= U
        vars_ = self._var_list()
        if self.accept(":="):
            self.expect("|0>")
            return A.Init(vars_)
        if self.accept("*="):
            return A.Unitary(vars_, self.expr())
        self.err("expected ':=' or '*=' after variable list")

    def _measurement(self):
        """Return None (bare), 'std', a General outcome tuple, or a guard Expr."""
        t = self.peek()
        if t.text == "[" and t.kind == "OP":
            return None
        if t.kind == "ID" and t.text == "std":
            self.next()
            return "std"
        if t.text == "(" and self.peek(1).kind == "NUM" and self.peek(2).text == ":":
            self.next()
            outcomes = [self._outcome()]
            while self.accept(";"):
                if self.at(")"):
                    break
                outcomes.append(self._outcome())
            self.expect(")")
            return tuple(outcomes)
        return self.expr()

    def _outcome(self) -> tuple[A.Label, E.Expr]:
        lab_tok = self.expect_kind("NUM", "an outcome label")
        lab = A.parse_label(lab_tok.text)
        self.expect(":")
        return lab, self.expr()

    def _branches(self) -> tuple[tuple[A.Label, A.Program], ...]:
        branches = []
        while not self.at("}"):
            lab_tok = self.expect_kind("NUM", "a branch label")
            lab = A.parse_label(lab_tok.text)
            self.expect(":")
            body = self.program()
            branches.append((lab, body))
            self.accept(";")
        if not branches:
            self.err("a case needs at least one branch")
        return tuple(branches)

    def _clause(self) -> A.SpecClause:
        pre = self.expr()
        self.expect("=>")
        post = self.expr()
        return A.SpecClause(pre, post)

    # -- variable headers and scripts ---------------------------------------

    def vars_header(self) -> VariableRegistry:
        self.expect("vars")
        pairs = [self._var_decl()]
        while self.accept(","):
            pairs.append(self._var_decl())
        self.expect(";")
        return VariableRegistry(tuple(pairs))

    def _var_decl(self) -> tuple[str, int]:
        name = self.expect_kind("ID", "a variable name").text
        self.expect(":")
        card = self.expect_kind("NUM", "a level count")
        if any(c not in "0123456789" for c in card.text):
            self.err("level count must be an integer")
        return name, int(card.text)


# ---------------------------------------------------------------------------
# Script layer


@dataclass(frozen=True)
class VarListArg:
    names: tuple[str, ...]


@dataclass(frozen=True)
class MapArg:
    """Extensional map argument. Keys are binding tuples ((sym, val), ...),
    raw label strings, or "_" for the default entry."""

    entries: tuple[tuple[object, E.Expr], ...]


@dataclass(frozen=True)
class SeqLambdaArg:
    var: str
    body: E.Expr


@dataclass(frozen=True)
class StdArg:
    pass


ArgVal = object  # Expr | VarListArg | MapArg | SeqLambdaArg | StdArg


@dataclass(frozen=True)
class RefineStep:
    hole: str
    rule: str
    args: tuple[tuple[str, ArgVal], ...]
    names: tuple[str, ...] = ()

    def arg_dict(self) -> dict[str, ArgVal]:
        return dict(self.args)


@dataclass
class Script:
    name: str
    reg: VariableRegistry
    mode: str
    params: tuple[tuple[str, tuple[int, ...]], ...]
    hole_id: str
    clauses: tuple[A.SpecClause, ...]
    steps: list[RefineStep] = field(default_factory=list)

    @property
    def spec(self) -> A.MultiSpec:
        return A.MultiSpec(self.clauses, self.params)


class ScriptParser(Parser):
    def script(self) -> Script:
        sc = self._spec_block()
        while not self.done():
            sc.steps.append(self._step())
        return sc

    def _spec_block(self) -> Script:
        self.expect("spec")
        name = self.expect_kind("ID", "a spec name").text
        self.expect("{")
        reg = None
        mode = "total"
        params: list[tuple[str, tuple[int, ...]]] = []
        hole_id = None
        clauses = None
        while not self.accept("}"):
            t = self.peek()
            if t.text == "vars":
                reg = self.vars_header()
            elif t.text == "param":
                self.next()
                sym = self.expect_kind("ID", "a parameter name").text
                self.expect("in")
                self.expect("{")
                dom = [self._int("a domain value")]
                while self.accept(","):
                    dom.append(self._int("a domain value"))
                self.expect("}")
                self.expect(";")
                params.append((sym, tuple(dom)))
            elif t.text == "mode":
                self.next()
                m = self.expect_kind("ID", "total or partial").text
                if m not in ("total", "partial"):
                    self.err("mode must be total or partial")
                mode = m
                self.expect(";")
            elif t.text == "hole":
                self.next()
                hole_id = self.expect_kind("ID", "a hole id").text
                self.expect(":")
                cl = [self._clause()]
                while self.accept(","):
                    cl.append(self._clause())
                self.expect(";")
                clauses = tuple(cl)
            else:
                self.err(f"unexpected item {t.text!r} in spec block")
        if reg is None:
            self.err("spec block needs a vars item")
        if hole_id is None or clauses is None:
            self.err("spec block needs a hole item")
        return Script(name, reg, mode, tuple(params), hole_id, clauses)

    def _int(self, what: str) -> int:
        t = self.expect_kind("NUM", what)
        if any(c not in "0123456789" for c in t.text):
            self.err(f"{what} must be an integer")
        return int(t.text)

    def _step(self) -> RefineStep:
        self.expect("refine")
        hole = self.expect_kind("ID", "a hole id").text
        self.expect("with")
        prefix = self.expect_kind("ID", "a rule name").text
        self.expect(".")
        suffix = self.expect_kind("ID", "a rule name").text
        rule = f"{prefix}.{suffix}"
        self.expect("(")
        args: list[tuple[str, ArgVal]] = []
        if not self.at(")"):
            args.append(self._named_arg())
            while self.accept(","):
                args.append(self._named_arg())
        self.expect(")")
        names: tuple[str, ...] = ()
        if self.accept("->"):
            out = [self.expect_kind("ID", "a hole name").text]
            while self.accept(","):
                out.append(self.expect_kind("ID", "a hole name").text)
            names = tuple(out)
        self.accept(";")
        return RefineStep(hole, rule, tuple(args), names)

    def _named_arg(self) -> tuple[str, ArgVal]:
        name = self.expect_kind("ID", "an argument name").text
        self.expect("=")
        return name, self._arg_value()

    def _arg_value(self) -> ArgVal:
        t = self.peek()
        if t.text == "[" and t.kind == "OP":
            self.next()
            names = self._var_list()
            self.expect("]")
            return VarListArg(names)
        if t.text == "{" and t.kind == "OP":
            return self._map_arg()
        if t.kind == "ID" and t.text == "std" and self.peek(1).text in (",", ")"):
            self.next()
            return StdArg()
        if t.kind == "ID" and self.peek(1).text == "=>":
            var = self.next().text
            self.expect("=>")
            return SeqLambdaArg(var, self.expr())
        return self.expr()

    def _map_arg(self) -> MapArg:
        self.expect("{")
        entries = [self._map_entry()]
        while self.accept(";"):
            if self.at("}"):
                break
            entries.append(self._map_entry())
        self.expect("}")
        return MapArg(tuple(entries))

    def _map_entry(self) -> tuple[object, E.Expr]:
        t = self.peek()
        key: object
        if t.kind == "ID" and t.text == "_" and self.peek(1).text == ":":
            self.next()
            key = "_"
        elif t.kind == "ID" and self.peek(1).text == "=":
            pairs = [self._binding_pair()]
            while self.accept(","):
                pairs.append(self._binding_pair())
            key = tuple(pairs)
        elif t.kind == "NUM":
            key = self.next().text
        else:
            self.err("expected a map key (label, binding, or _)")
        self.expect(":")
        return key, self.expr()

    def _binding_pair(self) -> tuple[str, int]:
        sym = self.expect_kind("ID", "a parameter name").text
        self.expect("=")
        return sym, self._int("a parameter value")


# ---------------------------------------------------------------------------
# Entry points


def parse_expr(text: str) -> E.Expr:
    p = Parser(text)
    node = p.expr()
    if not p.done():
        p.err("trailing input after expression")
    return node


def parse_program(text: str) -> A.Program:
    p = Parser(text)
    prog = p.program(stop=())
    if not p.done():
        p.err("trailing input after program")
    A.validate_hole_ids(prog)
    return prog


def parse_program_file(text: str) -> tuple[VariableRegistry | None, A.Program]:
    p = Parser(text)
    reg = None
    if p.peek().kind == "ID" and p.peek().text == "vars":
        reg = p.vars_header()
    prog = p.program(stop=())
    if not p.done():
        p.err("trailing input after program")
    A.validate_hole_ids(prog)
    return reg, prog


def parse_script(text: str) -> Script:
    return ScriptParser(text).script()
