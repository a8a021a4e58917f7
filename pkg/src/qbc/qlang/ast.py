"""Program syntax trees: statements, measurements, and hole specifications.

Programs are immutable. ``if`` statements and bare (measurement-free) ``case``/
``if``/``while`` forms are surface sugar; :func:`desugar` removes them, so the
rest of the system only ever sees ``General`` measurements and explicit
``while`` guards. Holes carry a multi-clause, parameterized pre/post
specification and are addressed by id.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterator

from .exprs import BinOp, Expr, Fn, Identity, Num, Str


class ProgramError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Measurements

Label = tuple[int, ...]


@dataclass(frozen=True)
class StdBasis:
    """Sugar: measure the listed variables in the computational basis."""


@dataclass(frozen=True)
class Binary:
    """A yes/no measurement given by an effect B: outcome 1 is B, outcome 0 is I - B."""

    op: Expr


@dataclass(frozen=True)
class General:
    """Explicit outcome-labelled measurement operators {label: M_label}."""

    outcomes: tuple[tuple[Label, Expr], ...]

    def labels(self) -> tuple[Label, ...]:
        return tuple(lab for lab, _ in self.outcomes)


Measurement = StdBasis | Binary | General


def parse_label(text: str) -> Label:
    if not text or any(c not in "0123456789" for c in text):
        raise ProgramError(f"bad outcome label {text!r}")
    return tuple(int(c) for c in text)


def label_text(lab: Label) -> str:
    return "".join(str(x) for x in lab)


# ---------------------------------------------------------------------------
# Hole specifications


@dataclass(frozen=True)
class SpecClause:
    pre: Expr
    post: Expr


@dataclass(frozen=True)
class MultiSpec:
    """A family of pre/post pairs indexed by parameter bindings.

    ``params`` maps symbol names to finite integer domains. Each clause is a
    pre/post pair of predicate expressions over those symbols; a hole is
    considered filled only when every clause holds under every binding.
    """

    clauses: tuple[SpecClause, ...]
    params: tuple[tuple[str, tuple[int, ...]], ...] = ()

    def __post_init__(self):
        if not self.clauses:
            raise ProgramError("a hole specification needs at least one clause")
        seen = set()
        for name, dom in self.params:
            if name in seen:
                raise ProgramError(f"duplicate parameter {name!r}")
            seen.add(name)
            if not dom:
                raise ProgramError(f"parameter {name!r} has an empty domain")

    def bindings(self) -> Iterator[dict[str, int]]:
        """All (clause, parameter) bindings; clause index appears as 'clause'."""

        def walk(i: int, cur: dict[str, int]) -> Iterator[dict[str, int]]:
            if i == len(self.params):
                yield dict(cur)
                return
            name, dom = self.params[i]
            for v in dom:
                cur[name] = v
                yield from walk(i + 1, cur)
            del cur[name]

        for ci in range(len(self.clauses)):
            base = {"clause": ci} if len(self.clauses) > 1 else {}
            for b in walk(0, dict(base)):
                yield b


# ---------------------------------------------------------------------------
# Statements


class Program:
    __slots__ = ()


@dataclass(frozen=True)
class Skip(Program):
    pass


@dataclass(frozen=True)
class Init(Program):
    vars: tuple[str, ...]


@dataclass(frozen=True)
class Unitary(Program):
    vars: tuple[str, ...]
    op: Expr


@dataclass(frozen=True)
class Seq(Program):
    parts: tuple[Program, ...]

    def __post_init__(self):
        if len(self.parts) < 1:
            raise ProgramError("empty sequence")


@dataclass(frozen=True)
class Repeat(Program):
    count: int
    body: Program

    def __post_init__(self):
        if self.count < 0:
            raise ProgramError("repeat count must be nonnegative")


@dataclass(frozen=True)
class Case(Program):
    vars: tuple[str, ...]
    meas: Measurement
    branches: tuple[tuple[Label, Program], ...]

    def branch(self, lab: Label) -> Program:
        for l, p in self.branches:
            if l == lab:
                return p
        raise KeyError(lab)


@dataclass(frozen=True)
class While(Program):
    vars: tuple[str, ...]
    guard: Expr | None  # None: sugar for |1><1| on a single qubit
    body: Program


@dataclass(frozen=True)
class If(Program):
    """Sugar; desugars to a two-branch case."""

    vars: tuple[str, ...]
    guard: Expr | None
    then: Program
    orelse: Program | None = None


@dataclass(frozen=True)
class Hole(Program):
    hid: str
    spec: MultiSpec | None = None


# ---------------------------------------------------------------------------
# Traversal and functional update

Path = tuple[int, ...]


def children(p: Program) -> tuple[Program, ...]:
    if isinstance(p, Seq):
        return p.parts
    if isinstance(p, Repeat):
        return (p.body,)
    if isinstance(p, Case):
        return tuple(b for _, b in p.branches)
    if isinstance(p, While):
        return (p.body,)
    if isinstance(p, If):
        return (p.then,) + ((p.orelse,) if p.orelse is not None else ())
    return ()


def iter_programs(p: Program) -> Iterator[Program]:
    """Preorder walk over a program and all nested statements."""
    yield p
    for c in children(p):
        yield from iter_programs(c)


def with_children(p: Program, kids: tuple[Program, ...]) -> Program:
    if isinstance(p, Seq):
        return Seq(kids)
    if isinstance(p, Repeat):
        return Repeat(p.count, kids[0])
    if isinstance(p, Case):
        return Case(p.vars, p.meas, tuple((lab, k) for (lab, _), k in zip(p.branches, kids)))
    if isinstance(p, While):
        return While(p.vars, p.guard, kids[0])
    if isinstance(p, If):
        return If(p.vars, p.guard, kids[0], kids[1] if len(kids) > 1 else None)
    if kids:
        raise ProgramError(f"{type(p).__name__} has no children")
    return p


def holes_of(p: Program) -> list[tuple[str, Path]]:
    """All holes as (id, path); path indexes into children() at each level."""
    out: list[tuple[str, Path]] = []

    def walk(node: Program, path: Path):
        if isinstance(node, Hole):
            out.append((node.hid, path))
            return
        for i, c in enumerate(children(node)):
            walk(c, path + (i,))

    walk(p, ())
    return out


def node_at(p: Program, path: Path) -> Program:
    node = p
    for i in path:
        node = children(node)[i]
    return node


def replace_at(p: Program, path: Path, new: Program) -> Program:
    if not path:
        return new
    kids = list(children(p))
    kids[path[0]] = replace_at(kids[path[0]], path[1:], new)
    return with_children(p, tuple(kids))


def replace_hole(p: Program, hid: str, new: Program) -> Program:
    for h, path in holes_of(p):
        if h == hid:
            return replace_at(p, path, new)
    raise ProgramError(f"no hole named {hid!r}")


def map_programs(p: Program, f: Callable[[Program], Program]) -> Program:
    """Bottom-up rewrite."""
    kids = tuple(map_programs(c, f) for c in children(p))
    return f(with_children(p, kids))


def is_concrete(p: Program) -> bool:
    return not holes_of(p)


def validate_hole_ids(p: Program) -> None:
    seen: set[str] = set()
    for hid, _ in holes_of(p):
        if hid in seen:
            raise ProgramError(f"duplicate hole id {hid!r}")
        seen.add(hid)


# ---------------------------------------------------------------------------
# Sugar removal


def _std_outcomes(vars_: tuple[str, ...], cards: tuple[int, ...]) -> tuple[tuple[Label, Expr], ...]:
    labels: list[Label] = [()]
    for c in cards:
        labels = [lab + (x,) for lab in labels for x in range(c)]
    out = []
    for lab in labels:
        args = tuple(Str(str(x)) for x in lab)
        out.append((lab, Fn("proj", (Fn("ket", args),))))
    return tuple(out)


_PROJ1 = Fn("proj", (Fn("ket", (Str("1"),)),))


def desugar(p: Program, card_of: Callable[[str], int]) -> Program:
    """Remove If nodes and implicit measurements.

    Bare ``if``/``while`` guards apply only to a single qubit; bare ``case``
    measures the computational basis. Binary case measurements become the
    explicit pair {1: B, 0: I - B}.
    """

    def fix(node: Program) -> Program:
        if isinstance(node, If):
            guard = node.guard
            if guard is None:
                if len(node.vars) != 1 or card_of(node.vars[0]) != 2:
                    raise ProgramError("bare if applies to exactly one qubit")
                guard = _PROJ1
            branches = (
                ((1,), node.then),
                ((0,), node.orelse if node.orelse is not None else Skip()),
            )
            return Case(node.vars, Binary(guard), branches)
        if isinstance(node, While) and node.guard is None:
            if len(node.vars) != 1 or card_of(node.vars[0]) != 2:
                raise ProgramError("bare while applies to exactly one qubit")
            return While(node.vars, _PROJ1, node.body)
        return node

    def explicit(node: Program) -> Program:
        if isinstance(node, Case):
            if isinstance(node.meas, StdBasis):
                cards = tuple(card_of(v) for v in node.vars)
                outcomes = _std_outcomes(node.vars, cards)
                known = {lab for lab, _ in node.branches}
                for lab, _ in node.branches:
                    if lab not in {l for l, _ in outcomes}:
                        raise ProgramError(f"branch label {label_text(lab)} has no outcome")
                branches = tuple(
                    (lab, node.branch(lab) if lab in known else Skip()) for lab, _ in outcomes
                )
                return Case(node.vars, General(outcomes), branches)
            if isinstance(node.meas, Binary):
                b = node.meas.op
                outcomes = (((1,), b), ((0,), BinOp("-", Identity(), b)))
                known = {lab for lab, _ in node.branches}
                bad = known - {(1,), (0,)}
                if bad:
                    raise ProgramError(f"binary case has labels other than 0/1: {sorted(bad)}")
                branches = tuple(
                    (lab, node.branch(lab) if lab in known else Skip()) for lab, _ in outcomes
                )
                return Case(node.vars, General(outcomes), branches)
        return node

    return map_programs(p, lambda n: explicit(fix(n)))


def flatten(p: Program) -> Program:
    """Normalize sequences: flatten nesting, drop singleton wrappers."""

    def fix(node: Program) -> Program:
        if isinstance(node, Seq):
            parts: list[Program] = []
            for part in node.parts:
                if isinstance(part, Seq):
                    parts.extend(part.parts)
                else:
                    parts.append(part)
            if len(parts) == 1:
                return parts[0]
            return Seq(tuple(parts))
        return node

    return map_programs(p, fix)


def structurally_equal(a: Program, b: Program) -> bool:
    """Equality modulo sequence nesting."""
    return flatten(a) == flatten(b)


def count_nodes(p: Program) -> int:
    return 1 + sum(count_nodes(c) for c in children(p))
