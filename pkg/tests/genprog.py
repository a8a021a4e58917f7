"""Seeded random generators shared by the test modules.

Programs generated here are always well-formed: while bodies mix population
out of the guard subspace (H / X / re-init on the guard variable), so loops
terminate and superoperator sums converge.
"""

from __future__ import annotations

import numpy as np

from qbc.matrixcore import VariableRegistry
from qbc.qlang import ast as A
from qbc.qlang import exprs as E

GATES_1 = ("H", "X", "Y", "Z", "S", "T")
GATES_2 = ("CNOT", "SWAP")


def qubit_registry(names=("q", "r")) -> VariableRegistry:
    return VariableRegistry(tuple((n, 2) for n in names))


# ---------------------------------------------------------------------------
# Expressions


def random_scalar_expr(rng: np.random.Generator, depth: int = 2) -> E.Expr:
    if depth == 0 or rng.random() < 0.4:
        choice = rng.integers(0, 4)
        if choice == 0:
            return E.Num(complex(round(float(rng.uniform(-3, 3)), 3)))
        if choice == 1:
            return E.Num(complex(0, round(float(rng.uniform(-2, 2)), 3)))
        if choice == 2:
            return E.Pi()
        return E.Num(complex(int(rng.integers(0, 5))))
    op = str(rng.choice(["+", "-", "*", "/"]))
    a = random_scalar_expr(rng, depth - 1)
    b = random_scalar_expr(rng, depth - 1)
    if op == "/":
        b = E.Num(complex(int(rng.integers(1, 4))))
    return E.BinOp(op, a, b)


def random_op_expr(rng: np.random.Generator, reg: VariableRegistry, depth: int = 3) -> E.Expr:
    """An operator-valued expression over the full registry (qubit variables)."""
    names = reg.names
    if depth == 0 or rng.random() < 0.35:
        choice = rng.integers(0, 4)
        if choice == 0:
            v = str(rng.choice(names))
            return E.On((v,), E.Gate(str(rng.choice(GATES_1))))
        if choice == 1 and len(names) >= 2:
            picked = rng.choice(len(names), size=2, replace=False)
            pair = (names[picked[0]], names[picked[1]])
            return E.On(pair, E.Gate(str(rng.choice(GATES_2))))
        if choice == 2:
            return E.Identity()
        v = str(rng.choice(names))
        lab = str(rng.integers(0, 2))
        return E.On((v,), E.Fn("proj", (E.Fn("ket", (E.Str(lab),)),)))
    kind = rng.integers(0, 4)
    if kind == 0:
        return E.BinOp(
            "+", random_op_expr(rng, reg, depth - 1), random_op_expr(rng, reg, depth - 1)
        )
    if kind == 1:
        return E.BinOp(
            "*", random_op_expr(rng, reg, depth - 1), random_op_expr(rng, reg, depth - 1)
        )
    if kind == 2:
        return E.BinOp("*", random_scalar_expr(rng, 1), random_op_expr(rng, reg, depth - 1))
    return E.Fn("adj", (random_op_expr(rng, reg, depth - 1),))


def random_round_trip_expr(rng: np.random.Generator, depth: int = 4) -> E.Expr:
    """Arbitrary well-typed-ish expression for printer round-trip checks.

    Only syntax matters here, so scalars/operators mix freely.
    """
    if depth == 0 or rng.random() < 0.3:
        choice = rng.integers(0, 8)
        if choice == 0:
            return E.Num(complex(round(float(rng.uniform(-9, 9)), 4)))
        if choice == 1:
            return E.Num(complex(0, round(float(rng.uniform(-9, 9)), 4)))
        if choice == 2:
            return E.Sym(str(rng.choice(["x", "n", "k", "gamma"])))
        if choice == 3:
            return E.Pi()
        if choice == 4:
            return E.Identity()
        if choice == 5:
            return E.Gate(str(rng.choice(GATES_1 + GATES_2)))
        if choice == 6:
            return E.Gate("Rz", E.Num(complex(int(rng.integers(1, 5)))))
        return E.Fn("proj", (E.Fn("ket", (E.Str(str(rng.integers(0, 2))),)),))
    kind = rng.integers(0, 7)
    sub = lambda: random_round_trip_expr(rng, depth - 1)  # noqa: E731
    if kind == 0:
        return E.BinOp(str(rng.choice(["+", "-", "*", "/", "kron"])), sub(), sub())
    if kind == 1:
        inner = sub()
        # the parser folds negated literals, so the canonical tree does too
        if isinstance(inner, E.Num):
            return E.Num(-inner.value)
        return E.Neg(inner)
    if kind == 2:
        return E.BinOp("^", sub(), E.Num(complex(int(rng.integers(0, 4)))))
    if kind == 3:
        return E.On((str(rng.choice(["q", "r", "a"])),), sub())
    if kind == 4:
        return E.Fn("adj", (sub(),))
    if kind == 5:
        return E.Fn(str(rng.choice(["sqrt", "sin", "cos"])), (sub(),))
    return E.MatLit(((sub(), sub()), (sub(), sub())))


# ---------------------------------------------------------------------------
# Programs


def terminating_while_body(rng: np.random.Generator, guard_var: str, reg: VariableRegistry) -> A.Program:
    kind = rng.integers(0, 4)
    if kind == 0:
        return A.Unitary((guard_var,), E.Gate("H"))
    if kind == 1:
        return A.Unitary((guard_var,), E.Gate("X"))
    if kind == 2:
        return A.Init((guard_var,))
    other = str(rng.choice(reg.names))
    return A.Seq(
        (A.Unitary((other,), E.Gate(str(rng.choice(GATES_1)))), A.Unitary((guard_var,), E.Gate("H")))
    )


def random_program(
    rng: np.random.Generator,
    reg: VariableRegistry,
    depth: int = 3,
    allow_while: bool = True,
    allow_sugar: bool = False,
    allow_hole: bool = False,
    _hole_counter: list[int] | None = None,
) -> A.Program:
    """A random well-formed program over a qubit registry."""
    names = reg.names
    if _hole_counter is None:
        _hole_counter = [0]
    leaf_kinds = ["skip", "init", "unitary", "unitary2"]
    if allow_hole:
        leaf_kinds.append("hole")
    if depth == 0 or rng.random() < 0.35:
        kind = str(rng.choice(leaf_kinds))
        if kind == "skip":
            return A.Skip()
        if kind == "init":
            v = str(rng.choice(names))
            return A.Init((v,))
        if kind == "unitary":
            v = str(rng.choice(names))
            return A.Unitary((v,), E.Gate(str(rng.choice(GATES_1))))
        if kind == "unitary2" and len(names) >= 2:
            picked = rng.choice(len(names), size=2, replace=False)
            return A.Unitary(
                (names[picked[0]], names[picked[1]]), E.Gate(str(rng.choice(GATES_2)))
            )
        if kind == "hole":
            _hole_counter[0] += 1
            spec = A.MultiSpec(
                (A.SpecClause(E.BinOp("*", E.Num(0.5 + 0j), E.Identity()), E.Identity()),)
            )
            return A.Hole(f"g{_hole_counter[0]}", spec)
        return A.Skip()
    node_kinds = ["seq", "seq", "repeat", "case"]
    if allow_while:
        node_kinds.append("while")
    if allow_sugar:
        node_kinds.extend(["if", "bare_case"])
    kind = str(rng.choice(node_kinds))
    rec = lambda: random_program(  # noqa: E731
        rng, reg, depth - 1, allow_while, allow_sugar, allow_hole, _hole_counter
    )
    if kind == "seq":
        n = int(rng.integers(2, 4))
        return A.Seq(tuple(rec() for _ in range(n)))
    if kind == "repeat":
        return A.Repeat(int(rng.integers(1, 3)), rec())
    if kind == "case":
        v = str(rng.choice(names))
        meas = A.General(
            (
                ((1,), E.Fn("proj", (E.Fn("ket", (E.Str("1"),)),))),
                ((0,), E.Fn("proj", (E.Fn("ket", (E.Str("0"),)),))),
            )
        )
        return A.Case((v,), meas, (((1,), rec()), ((0,), rec())))
    if kind == "bare_case":
        v = str(rng.choice(names))
        return A.Case((v,), A.StdBasis(), (((0,), rec()), ((1,), rec())))
    if kind == "if":
        v = str(rng.choice(names))
        orelse = rec() if rng.random() < 0.5 else None
        return A.If((v,), None, rec(), orelse)
    v = str(rng.choice(names))
    return A.While((v,), E.Fn("proj", (E.Fn("ket", (E.Str("1"),)),)), terminating_while_body(rng, v, reg))


# ---------------------------------------------------------------------------
# Matrices


def random_density(rng: np.random.Generator, dim: int, rank: int | None = None) -> np.ndarray:
    r = rank or int(rng.integers(1, dim + 1))
    g = rng.normal(size=(dim, r)) + 1j * rng.normal(size=(dim, r))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_pure(rng: np.random.Generator, dim: int) -> np.ndarray:
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    v = v / np.linalg.norm(v)
    return np.outer(v, v.conj())


def random_predicate(rng: np.random.Generator, dim: int) -> np.ndarray:
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    h = (g + g.conj().T) / 2
    vals, vecs = np.linalg.eigh(h)
    lo, hi = vals[0], vals[-1]
    scaled = (vals - lo) / (hi - lo) if hi > lo else np.full_like(vals, 0.5)
    scaled = scaled * float(rng.uniform(0.3, 1.0))
    return (vecs * scaled) @ vecs.conj().T


def random_projection(rng: np.random.Generator, dim: int, rank: int | None = None) -> np.ndarray:
    r = rank if rank is not None else int(rng.integers(1, dim))
    g = rng.normal(size=(dim, r)) + 1j * rng.normal(size=(dim, r))
    q, _ = np.linalg.qr(g)
    return q[:, :r] @ q[:, :r].conj().T


def random_predicate_expr(rng: np.random.Generator, reg: VariableRegistry) -> E.Expr:
    """A random predicate as a printable expression: a subconvex mix of basis
    projectors plus a multiple of the identity."""
    dim = reg.dim
    count = int(rng.integers(1, min(dim, 3) + 1))
    picks = rng.choice(dim, size=count, replace=False)
    weights = rng.dirichlet(np.ones(count + 1)) * float(rng.uniform(0.3, 0.99))
    terms: list[E.Expr] = []
    for idx, w in zip(picks, weights[:-1]):
        digits = []
        rest = int(idx)
        for c in reversed(reg.cards):
            digits.append(rest % c)
            rest //= c
        label = "".join(str(d) for d in reversed(digits))
        proj = E.Fn("proj", (E.Fn("ket", (E.Str(label),)),))
        terms.append(E.BinOp("*", E.Num(complex(round(float(w), 6))), proj))
    terms.append(E.BinOp("*", E.Num(complex(round(float(weights[-1]), 6))), E.Identity()))
    out = terms[0]
    for t in terms[1:]:
        out = E.BinOp("+", out, t)
    return out
