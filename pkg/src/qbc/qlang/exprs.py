"""Expression DSL for predicates, unitaries, and measurement operators.

Expressions are immutable trees. Evaluation happens against an ordered
*context* of registry variables: a statement like ``q, a *= U`` evaluates U in
context (q, a); predicates evaluate in the full-registry context. Subtrees can
re-anchor themselves onto named variables with ``on[q, r](...)``; tagged
operators are cylindrically extended (and factor-permuted) into the context.

Values come in four kinds: scalars, kets, bras, and operators. The usual
arithmetic applies (+, -, scalar *, operator composition, kron, integer matrix
powers); ``proj``/``adj`` move between kinds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from ..matrixcore import (
    DEFAULT_TOL,
    Tolerances,
    VariableRegistry,
    basis_state,
    hermitize,
    kron as mat_kron,
    min_eig,
)


class ExprError(ValueError):
    """Raised for type, dimension, and binding errors during evaluation."""


# ---------------------------------------------------------------------------
# AST


class Expr:
    __slots__ = ()


@dataclass(frozen=True)
class Num(Expr):
    value: complex

    def __post_init__(self):
        object.__setattr__(self, "value", complex(self.value))


@dataclass(frozen=True)
class Str(Expr):
    text: str


@dataclass(frozen=True)
class Sym(Expr):
    name: str


@dataclass(frozen=True)
class Pi(Expr):
    pass


@dataclass(frozen=True)
class Identity(Expr):
    """The identity operator of the evaluation context."""


@dataclass(frozen=True)
class Gate(Expr):
    name: str
    arg: Expr | None = None  # CRz(k), Rz(k), QFT(k)


@dataclass(frozen=True)
class Neg(Expr):
    a: Expr


@dataclass(frozen=True)
class BinOp(Expr):
    op: str  # + - * / ^ kron
    a: Expr
    b: Expr


@dataclass(frozen=True)
class Fn(Expr):
    name: str
    args: tuple[Expr, ...]


@dataclass(frozen=True)
class On(Expr):
    vars: tuple[str, ...]
    body: Expr


@dataclass(frozen=True)
class MatLit(Expr):
    rows: tuple[tuple[Expr, ...], ...]


SCALAR_FNS = {"sqrt", "arcsin", "sin", "cos"}
GATE_NAMES = {"H", "X", "Y", "Z", "S", "T", "CNOT", "SWAP"}
PARAM_GATES = {"CRz", "Rz", "QFT"}

_PAULI = {
    "H": np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
    "S": np.array([[1, 0], [0, 1j]], dtype=complex),
    "T": np.array([[1, 0], [0, np.exp(1j * np.pi / 4)]], dtype=complex),
    "CNOT": np.array(
        [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
    ),
    "SWAP": np.array(
        [[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex
    ),
}


def gate_matrix(name: str, k: int | None = None) -> np.ndarray:
    if name in _PAULI:
        return _PAULI[name].copy()
    if name == "Rz":
        return np.diag([1.0, np.exp(2j * np.pi / 2**k)]).astype(complex)
    if name == "CRz":
        return np.diag([1.0, 1.0, 1.0, np.exp(2j * np.pi / 2**k)]).astype(complex)
    if name == "QFT":
        n = 2**k
        x = np.arange(n)
        return np.exp(2j * np.pi * np.outer(x, x) / n) / np.sqrt(n)
    raise ExprError(f"unknown gate {name!r}")


# ---------------------------------------------------------------------------
# Values


@dataclass
class Value:
    kind: str  # scalar | ket | bra | op
    data: complex | np.ndarray
    vars: tuple[str, ...] | None = None  # None = positional (context-shaped)

    @property
    def dim(self) -> int:
        return self.data.shape[0] if self.kind in ("ket", "op") else self.data.shape[-1]


@dataclass(frozen=True)
class EvalContext:
    reg: VariableRegistry
    binding: Mapping[str, int]
    vars: tuple[str, ...]
    tol: Tolerances = DEFAULT_TOL

    def with_vars(self, vars_: Sequence[str]) -> "EvalContext":
        return EvalContext(self.reg, self.binding, tuple(vars_), self.tol)

    @property
    def dim(self) -> int:
        return self.reg.subset_dim(self.vars)


def _permute_op(m: np.ndarray, src: Sequence[str], dst: Sequence[str], reg: VariableRegistry) -> np.ndarray:
    """Reorder the tensor factors of an operator from src order to dst order."""
    if tuple(src) == tuple(dst):
        return m
    dims = [reg.card(v) for v in src]
    k = len(dims)
    perm = [list(src).index(v) for v in dst]
    t = m.reshape(dims + dims).transpose(perm + [k + p for p in perm])
    d = m.shape[0]
    return np.ascontiguousarray(t.reshape(d, d))


def _permute_vec(v: np.ndarray, src: Sequence[str], dst: Sequence[str], reg: VariableRegistry) -> np.ndarray:
    if tuple(src) == tuple(dst):
        return v
    dims = [reg.card(x) for x in src]
    perm = [list(src).index(x) for x in dst]
    return np.ascontiguousarray(v.reshape(dims).transpose(perm).reshape(-1))


def _extend_op(m: np.ndarray, src: Sequence[str], dst: Sequence[str], reg: VariableRegistry) -> np.ndarray:
    """Extend an operator on src variables to the ordered variable list dst."""
    missing = [v for v in dst if v not in src]
    extra = [v for v in src if v not in dst]
    if extra:
        raise ExprError(f"operator on {tuple(src)} does not fit inside variables {tuple(dst)}")
    if missing:
        pad = np.eye(reg.subset_dim(missing), dtype=complex)
        m = np.kron(m, pad)
        src = list(src) + missing
    return _permute_op(m, src, dst, reg)


def _coerce(v: Value, vars_: tuple[str, ...], ctx: EvalContext) -> Value:
    """Force a value onto an explicit ordered variable tuple."""
    dim = ctx.reg.subset_dim(vars_)
    if v.kind == "scalar":
        raise ExprError("scalar cannot be anchored onto variables")
    if v.vars is None:
        if v.dim != dim:
            raise ExprError(
                f"dimension {v.dim} does not match variables {vars_} (dimension {dim})"
            )
        return Value(v.kind, v.data, vars_)
    if v.kind == "op":
        return Value("op", _extend_op(v.data, v.vars, vars_, ctx.reg), vars_)
    if set(v.vars) != set(vars_):
        raise ExprError(f"vector on {v.vars} cannot be re-anchored onto {vars_}")
    data = _permute_vec(v.data, v.vars, vars_, ctx.reg)
    return Value(v.kind, data, vars_)


def _align_pair(a: Value, b: Value, ctx: EvalContext) -> tuple[Value, Value]:
    """Bring two same-kind values onto a common variable order for +/compose."""
    if (a.vars is None) != (b.vars is None):
        raise ExprError(
            "cannot mix on[...]-tagged and untagged operands; tag both or neither"
        )
    if a.vars is None:
        if a.dim != b.dim:
            raise ExprError(f"dimension mismatch: {a.dim} vs {b.dim}")
        return a, b
    if set(a.vars) == set(b.vars):
        return a, _coerce(b, a.vars, ctx)
    if a.kind == "op" and b.kind == "op":
        union = list(a.vars) + [v for v in b.vars if v not in a.vars]
        return _coerce(a, tuple(union), ctx), _coerce(b, tuple(union), ctx)
    raise ExprError(f"variable sets differ: {a.vars} vs {b.vars}")


def _label_atoms(args: tuple[Expr, ...], ctx: EvalContext) -> list[int]:
    """Resolve ket/bra atoms to integer labels against the context variables."""
    cards = [ctx.reg.card(v) for v in ctx.vars]
    raw: list[str | int] = []
    for a in args:
        if isinstance(a, Str):
            raw.append(a.text)
        elif isinstance(a, Sym):
            raw.append(_lookup(a.name, ctx))
        elif isinstance(a, Num):
            raw.append(_as_int(a.value, "ket label"))
        else:
            val = _ev(a, ctx)
            if val.kind != "scalar":
                raise ExprError("ket labels must be integers or symbols")
            raw.append(_as_int(val.data, "ket label"))
    if len(raw) == 1 and isinstance(raw[0], str) and len(raw[0]) == len(ctx.vars) > 1:
        raw = [int(c) for c in raw[0]]
    labels = [int(x) for x in raw]
    if len(labels) != len(ctx.vars):
        raise ExprError(
            f"ket needs {len(ctx.vars)} labels for variables {ctx.vars}, got {len(labels)}"
        )
    for lab, card, v in zip(labels, cards, ctx.vars):
        if not 0 <= lab < card:
            raise ExprError(f"label {lab} out of range for variable {v} (0..{card - 1})")
    return labels


def _lookup(name: str, ctx: EvalContext) -> int:
    if name not in ctx.binding:
        raise ExprError(f"unbound symbol {name!r}")
    return int(ctx.binding[name])


def _as_int(x: complex, what: str) -> int:
    if abs(x.imag) > 1e-12 or abs(x.real - round(x.real)) > 1e-9:
        raise ExprError(f"{what} must be an integer, got {x}")
    return int(round(x.real))


def _truth_table(e: Expr, dim: int) -> np.ndarray:
    if not isinstance(e, Str):
        raise ExprError("truth table must be a quoted bitstring")
    tt = e.text
    if len(tt) != dim or any(c not in "01" for c in tt):
        raise ExprError(f"truth table must be {dim} characters of 0/1, got {tt!r}")
    return np.array([c == "1" for c in tt])


def _joint_index(labels: Sequence[int], cards: Sequence[int]) -> int:
    idx = 0
    for lab, card in zip(labels, cards):
        idx = idx * card + lab
    return idx


# ---------------------------------------------------------------------------
# Evaluation


def _ev(e: Expr, ctx: EvalContext) -> Value:
    if isinstance(e, Num):
        return Value("scalar", e.value)
    if isinstance(e, Pi):
        return Value("scalar", complex(math.pi))
    if isinstance(e, Sym):
        return Value("scalar", complex(_lookup(e.name, ctx)))
    if isinstance(e, Identity):
        return Value("op", np.eye(ctx.dim, dtype=complex))
    if isinstance(e, Gate):
        k = None
        if e.arg is not None:
            k = _as_int(_scalar(e.arg, ctx), f"{e.name} argument")
        elif e.name in PARAM_GATES:
            raise ExprError(f"gate {e.name} needs an argument")
        return Value("op", gate_matrix(e.name, k))
    if isinstance(e, MatLit):
        n = len(e.rows)
        if any(len(r) != n for r in e.rows):
            raise ExprError("mat literal must be square")
        data = np.array([[_scalar(x, ctx) for x in row] for row in e.rows], dtype=complex)
        return Value("op", data)
    if isinstance(e, On):
        ctx.reg.check_subset(e.vars)
        inner = _ev(e.body, ctx.with_vars(e.vars))
        return _coerce(inner, e.vars, ctx)
    if isinstance(e, Neg):
        v = _ev(e.a, ctx)
        return Value(v.kind, -v.data if v.kind == "scalar" else -1 * v.data, v.vars)
    if isinstance(e, BinOp):
        return _ev_binop(e, ctx)
    if isinstance(e, Fn):
        return _ev_fn(e, ctx)
    if isinstance(e, Str):
        raise ExprError("a bare string is not a value")
    raise ExprError(f"cannot evaluate {type(e).__name__}")


def _ev_binop(e: BinOp, ctx: EvalContext) -> Value:
    if e.op == "kron":
        a, b = _ev(e.a, ctx), _ev(e.b, ctx)
        if a.kind == "scalar" or b.kind == "scalar":
            raise ExprError("kron needs two vectors or two operators")
        if a.kind != b.kind:
            raise ExprError(f"kron of {a.kind} and {b.kind}")
        if (a.vars is None) != (b.vars is None):
            raise ExprError(
                "cannot mix on[...]-tagged and untagged operands in kron; tag both or neither"
            )
        if a.vars is not None:
            if set(a.vars) & set(b.vars):
                raise ExprError(f"kron factors share variables: {a.vars} and {b.vars}")
            vars_ = a.vars + b.vars
        else:
            vars_ = None
        if a.kind == "op":
            return Value("op", mat_kron(a.data, b.data), vars_)
        return Value(a.kind, np.kron(a.data, b.data), vars_)

    a, b = _ev(e.a, ctx), _ev(e.b, ctx)
    if e.op in "+-":
        sign = 1 if e.op == "+" else -1
        if a.kind == "scalar" and b.kind == "scalar":
            return Value("scalar", a.data + sign * b.data)
        if a.kind == "scalar" or b.kind == "scalar":
            raise ExprError(f"cannot add a scalar to a {(b if a.kind == 'scalar' else a).kind}")
        if a.kind != b.kind:
            raise ExprError(f"cannot add {a.kind} and {b.kind}")
        a, b = _align_pair(a, b, ctx)
        return Value(a.kind, a.data + sign * b.data, a.vars)
    if e.op == "*":
        return _ev_mul(a, b, ctx)
    if e.op == "/":
        if b.kind != "scalar":
            raise ExprError("can only divide by a scalar")
        if b.data == 0:
            raise ExprError("division by zero")
        if a.kind == "scalar":
            return Value("scalar", a.data / b.data)
        return Value(a.kind, a.data / b.data, a.vars)
    if e.op == "^":
        if a.kind == "scalar" and b.kind == "scalar":
            base, expo = a.data, b.data
            if base.imag == 0 and expo.imag == 0:
                br, er = base.real, expo.real
                if br < 0 and er != round(er):
                    return Value("scalar", complex(base) ** complex(expo))
                return Value("scalar", complex(br**er))
            return Value("scalar", base**expo)
        if a.kind == "op" and b.kind == "scalar":
            k = _as_int(b.data, "matrix power")
            if k < 0:
                raise ExprError("matrix powers must be nonnegative")
            return Value("op", np.linalg.matrix_power(a.data, k), a.vars)
        raise ExprError(f"cannot raise {a.kind} to {b.kind}")
    raise ExprError(f"unknown operator {e.op!r}")


def _ev_mul(a: Value, b: Value, ctx: EvalContext) -> Value:
    if a.kind == "scalar" and b.kind == "scalar":
        return Value("scalar", a.data * b.data)
    if a.kind == "scalar":
        return Value(b.kind, a.data * b.data, b.vars)
    if b.kind == "scalar":
        return Value(a.kind, b.data * a.data, a.vars)
    if a.kind == "op" and b.kind == "op":
        a, b = _align_pair(a, b, ctx)
        return Value("op", a.data @ b.data, a.vars)
    if a.kind == "op" and b.kind == "ket":
        if (a.vars is None) != (b.vars is None):
            raise ExprError("cannot mix tagged and untagged operands in a product")
        if a.vars is not None:
            if not set(a.vars) <= set(b.vars):
                raise ExprError(f"operator on {a.vars} does not act within ket on {b.vars}")
            a = _coerce(a, b.vars, ctx)
        if a.dim != b.dim:
            raise ExprError(f"dimension mismatch: operator {a.dim} applied to ket {b.dim}")
        return Value("ket", a.data @ b.data, b.vars)
    if a.kind == "bra" and b.kind == "op":
        if (a.vars is None) != (b.vars is None):
            raise ExprError("cannot mix tagged and untagged operands in a product")
        if a.vars is not None:
            if not set(b.vars) <= set(a.vars):
                raise ExprError(f"operator on {b.vars} does not act within bra on {a.vars}")
            b = _coerce(b, a.vars, ctx)
        if a.dim != b.dim:
            raise ExprError("dimension mismatch in bra * operator")
        return Value("bra", a.data @ b.data, a.vars)
    if a.kind == "bra" and b.kind == "ket":
        if (a.vars is None) != (b.vars is None):
            raise ExprError("cannot mix tagged and untagged operands in a product")
        if a.vars is not None:
            if set(a.vars) != set(b.vars):
                raise ExprError(f"inner product over different variables: {a.vars} vs {b.vars}")
            b = _coerce(b, a.vars, ctx)
        if a.dim != b.dim:
            raise ExprError("dimension mismatch in inner product")
        return Value("scalar", complex(a.data @ b.data))
    if a.kind == "ket" and b.kind == "bra":
        if (a.vars is None) != (b.vars is None):
            raise ExprError("cannot mix tagged and untagged operands in a product")
        if a.vars is not None:
            if set(a.vars) != set(b.vars):
                raise ExprError(f"outer product over different variables: {a.vars} vs {b.vars}")
            b = _coerce(b, a.vars, ctx)
        return Value("op", np.outer(a.data, b.data), a.vars)
    raise ExprError(f"cannot multiply {a.kind} by {b.kind}")


def _ev_fn(e: Fn, ctx: EvalContext) -> Value:
    name = e.name
    if name in SCALAR_FNS:
        if len(e.args) != 1:
            raise ExprError(f"{name} takes one argument")
        x = _scalar(e.args[0], ctx)
        if abs(x.imag) > 1e-12:
            raise ExprError(f"{name} needs a real argument")
        v = x.real
        if name == "sqrt":
            if v < 0:
                raise ExprError("sqrt of a negative number")
            return Value("scalar", complex(math.sqrt(v)))
        if name == "arcsin":
            if not -1 <= v <= 1:
                raise ExprError("arcsin argument outside [-1, 1]")
            return Value("scalar", complex(math.asin(v)))
        return Value("scalar", complex(math.sin(v) if name == "sin" else math.cos(v)))
    if name == "ket" or name == "bra":
        labels = _label_atoms(e.args, ctx)
        cards = [ctx.reg.card(v) for v in ctx.vars]
        vec = basis_state(ctx.dim, _joint_index(labels, cards))
        return Value("ket" if name == "ket" else "bra", vec)
    if name == "proj":
        (arg,) = e.args
        v = _ev(arg, ctx)
        if v.kind != "ket":
            raise ExprError("proj needs a ket")
        return Value("op", np.outer(v.data, v.data.conj()), v.vars)
    if name == "adj":
        (arg,) = e.args
        v = _ev(arg, ctx)
        if v.kind == "op":
            return Value("op", v.data.conj().T, v.vars)
        if v.kind == "ket":
            return Value("bra", v.data.conj(), v.vars)
        if v.kind == "bra":
            return Value("ket", v.data.conj(), v.vars)
        return Value("scalar", v.data.conjugate())
    if name == "kron":
        if len(e.args) != 2:
            raise ExprError("kron takes two arguments")
        return _ev_binop(BinOp("kron", *e.args), ctx)
    if name == "kpow":
        base_e, count_e = e.args
        k = _as_int(_scalar(count_e, ctx), "kpow count")
        if k < 1:
            raise ExprError("kpow count must be >= 1")
        v = _ev(base_e, ctx)
        if v.kind not in ("op", "ket", "bra") or v.vars is not None:
            raise ExprError("kpow needs an untagged operator or vector")
        out = v.data
        for _ in range(k - 1):
            out = np.kron(out, v.data)
        return Value(v.kind, out)
    if name == "marked":
        (tt_e,) = e.args
        tt = _truth_table(tt_e, ctx.dim)
        return Value("op", np.diag(tt.astype(complex)))
    if name == "sol_state":
        (tt_e,) = e.args
        tt = _truth_table(tt_e, ctx.dim)
        count = int(tt.sum())
        if count == 0:
            raise ExprError("sol_state needs at least one marked label")
        return Value("ket", tt.astype(complex) / math.sqrt(count))
    if name == "phase_oracle":
        (tt_e,) = e.args
        tt = _truth_table(tt_e, ctx.dim)
        return Value("op", np.diag(np.where(tt, -1.0, 1.0).astype(complex)))
    if name == "xor_oracle":
        (tt_e,) = e.args
        if len(ctx.vars) < 2:
            raise ExprError("xor_oracle needs input variables plus one target variable")
        target = ctx.vars[-1]
        if ctx.reg.card(target) != 2:
            raise ExprError("xor_oracle target variable must be a qubit")
        in_dim = ctx.reg.subset_dim(ctx.vars[:-1])
        tt = _truth_table(tt_e, in_dim)
        m = np.zeros((ctx.dim, ctx.dim), dtype=complex)
        for x in range(in_dim):
            for y in (0, 1):
                m[2 * x + (y ^ int(tt[x])), 2 * x + y] = 1.0
        return Value("op", m)
    raise ExprError(f"unknown function {name!r}")


def _scalar(e: Expr, ctx: EvalContext) -> complex:
    v = _ev(e, ctx)
    if v.kind != "scalar":
        raise ExprError(f"expected a scalar, got a {v.kind}")
    return complex(v.data)


# ---------------------------------------------------------------------------
# Public entry points


def eval_scalar(e: Expr, reg: VariableRegistry, binding: Mapping[str, int] | None = None) -> complex:
    ctx = EvalContext(reg, binding or {}, reg.names)
    return _scalar(e, ctx)


def eval_operator(
    e: Expr,
    reg: VariableRegistry,
    binding: Mapping[str, int] | None = None,
    on_vars: Sequence[str] | None = None,
    tol: Tolerances = DEFAULT_TOL,
) -> np.ndarray:
    """Evaluate to an operator over ``on_vars`` (default: the full registry).

    Scalars are promoted to multiples of the context identity; tagged
    subexpressions are extended and permuted into the context order.
    """
    vars_ = tuple(on_vars) if on_vars is not None else reg.names
    reg.check_subset(vars_)
    ctx = EvalContext(reg, binding or {}, vars_, tol)
    v = _ev(e, ctx)
    if v.kind == "scalar":
        return v.data * np.eye(ctx.dim, dtype=complex)
    if v.kind != "op":
        raise ExprError(f"expected an operator, got a {v.kind}")
    out = _coerce(v, vars_, ctx) if v.vars is not None else v
    if out.dim != ctx.dim:
        raise ExprError(f"operator dimension {out.dim} does not match context dimension {ctx.dim}")
    return np.asarray(out.data, dtype=complex)


def eval_vector(
    e: Expr,
    reg: VariableRegistry,
    binding: Mapping[str, int] | None = None,
    on_vars: Sequence[str] | None = None,
) -> np.ndarray:
    vars_ = tuple(on_vars) if on_vars is not None else reg.names
    ctx = EvalContext(reg, binding or {}, vars_)
    v = _ev(e, ctx)
    if v.kind != "ket":
        raise ExprError(f"expected a ket, got a {v.kind}")
    out = _coerce(v, vars_, ctx) if v.vars is not None else v
    if out.dim != ctx.dim:
        raise ExprError("vector dimension does not match context")
    return np.asarray(out.data, dtype=complex)


def eval_predicate(
    e: Expr,
    reg: VariableRegistry,
    binding: Mapping[str, int] | None = None,
    tol: Tolerances = DEFAULT_TOL,
    validate: bool = True,
) -> np.ndarray:
    """Evaluate a full-dimension predicate; optionally enforce 0 <= P <= I."""
    m = eval_operator(e, reg, binding, None, tol)
    m = hermitize(m)
    if validate:
        lo = min_eig(m)
        if lo < -tol.psd_eps:
            raise ExprError(f"predicate is not PSD (min eigenvalue {lo:.3e})")
        hi = -min_eig(np.eye(reg.dim) - m)
        if hi > tol.psd_eps:
            raise ExprError(f"predicate exceeds identity (max eigenvalue {1 + hi:.6f})")
    return m


def eval_unitary(
    e: Expr,
    reg: VariableRegistry,
    binding: Mapping[str, int] | None = None,
    on_vars: Sequence[str] | None = None,
    tol: Tolerances = DEFAULT_TOL,
) -> np.ndarray:
    m = eval_operator(e, reg, binding, on_vars, tol)
    d = m.shape[0]
    if np.max(np.abs(m.conj().T @ m - np.eye(d))) > 1e-8:
        raise ExprError("operator is not unitary")
    return m


def substitute(e: Expr, mapping: Mapping[str, Expr]) -> Expr:
    """Replace free symbols by expressions (used for index shifts like j -> j+1)."""
    if isinstance(e, Sym) and e.name in mapping:
        return mapping[e.name]
    if isinstance(e, Neg):
        return Neg(substitute(e.a, mapping))
    if isinstance(e, BinOp):
        return BinOp(e.op, substitute(e.a, mapping), substitute(e.b, mapping))
    if isinstance(e, Fn):
        return Fn(e.name, tuple(substitute(a, mapping) for a in e.args))
    if isinstance(e, On):
        return On(e.vars, substitute(e.body, mapping))
    if isinstance(e, Gate):
        return Gate(e.name, substitute(e.arg, mapping) if e.arg is not None else None)
    if isinstance(e, MatLit):
        return MatLit(tuple(tuple(substitute(x, mapping) for x in row) for row in e.rows))
    return e


def free_symbols(e: Expr) -> set[str]:
    out: set[str] = set()

    def walk(x: Expr):
        if isinstance(x, Sym):
            out.add(x.name)
        elif isinstance(x, Neg):
            walk(x.a)
        elif isinstance(x, BinOp):
            walk(x.a)
            walk(x.b)
        elif isinstance(x, Fn):
            for a in x.args:
                walk(a)
        elif isinstance(x, On):
            walk(x.body)
        elif isinstance(x, Gate) and x.arg is not None:
            walk(x.arg)
        elif isinstance(x, MatLit):
            for row in x.rows:
                for c in row:
                    walk(c)

    walk(e)
    return out
