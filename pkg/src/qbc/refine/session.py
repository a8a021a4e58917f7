"""Single-writer refinement sessions.

A session owns one program under construction. Steps are applied atomically:
the rule's obligations are all checked against the materialized hole tables
first, and only a fully successful step mutates the program. Rejected steps
land in a side log and leave no other trace — fresh hole ids handed to a
rejected step are rolled back so that replaying the accepted steps alone
reproduces the session exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..hoare import Verdict, check
from ..matrixcore import DEFAULT_TOL, Tolerances, VariableRegistry
from ..qlang import ast as A
from ..qlang import exprs as E
from ..qlang.parse import RefineStep, Script
from ..qlang.pretty import expr_source, script_source
from .base import (
    HoleState,
    Obligation,
    ParamSpace,
    RuleArgumentError,
    binding_key,
    iter_bindings,
)
from .rules import RULES, RuleCtx, rule_available


@dataclass
class AcceptedStep:
    step: RefineStep
    obligations: list[Obligation]
    new_holes: tuple[str, ...]
    note: str | None = None


@dataclass
class RejectedStep:
    step: RefineStep
    obligations: list[Obligation]


@dataclass
class ApplyOutcome:
    accepted: bool
    obligations: list[Obligation]
    new_holes: tuple[str, ...] = ()
    note: str | None = None


class Session:
    def __init__(
        self,
        script: Script,
        tol: Tolerances = DEFAULT_TOL,
        strict_rules: bool = False,
    ):
        if script.mode not in ("total", "partial"):
            raise RuleArgumentError(f"mode must be total or partial, got {script.mode!r}")
        self.name = script.name
        self.reg: VariableRegistry = script.reg
        self.mode = script.mode
        self.tol = tol
        self.strict_rules = strict_rules
        self._script = Script(
            script.name, script.reg, script.mode, script.params, script.hole_id, script.clauses
        )
        self.steps: list[AcceptedStep] = []
        self.rejections: list[RejectedStep] = []
        self._counter = 1
        self._used: set[str] = set()
        self._sym_counter = 1
        self.program: A.Program = A.Hole(script.hole_id)
        self.holes: dict[str, HoleState] = {script.hole_id: self._root_hole(script)}
        self._used.add(script.hole_id)

    @property
    def params(self) -> tuple[tuple[str, tuple[int, ...]], ...]:
        return self._script.params

    def _root_hole(self, script: Script) -> HoleState:
        params: ParamSpace = script.params
        if len(script.clauses) > 1:
            params = (("clause", tuple(range(len(script.clauses)))),) + params
        table, srcs = {}, {}
        for b in iter_bindings(params):
            ci = b.get("clause", 0)
            clause = script.clauses[ci]
            try:
                pre = E.eval_predicate(clause.pre, self.reg, b, self.tol)
                post = E.eval_predicate(clause.post, self.reg, b, self.tol)
            except E.ExprError as exc:
                raise RuleArgumentError(f"spec clause {ci}: {exc}") from exc
            key = binding_key(params, b)
            table[key] = (pre, post)
            srcs[key] = (expr_source(clause.pre), expr_source(clause.post))
        return HoleState(script.hole_id, params, table, srcs)

    # -- id allocation ------------------------------------------------------

    def _make_alloc(self, names: tuple[str, ...]):
        def alloc(k: int) -> tuple[str, ...]:
            if len(names) > k:
                raise RuleArgumentError(
                    f"rule creates {k} hole(s) but {len(names)} name(s) were given"
                )
            out = []
            for i in range(k):
                if i < len(names):
                    hid = names[i]
                    if hid in self._used:
                        raise RuleArgumentError(f"hole name {hid!r} is already in use")
                else:
                    while f"h{self._counter}" in self._used:
                        self._counter += 1
                    hid = f"h{self._counter}"
                    self._counter += 1
                self._used.add(hid)
                out.append(hid)
            return tuple(out)

        return alloc

    def fresh_symbol(self, prefix: str = "j") -> str:
        taken = set(self.reg.names) | {p for p, _ in self._script.params} | {"clause"}
        for hole in self.holes.values():
            taken |= {p for p, _ in hole.params}
        while True:
            sym = f"{prefix}{self._sym_counter}"
            self._sym_counter += 1
            if sym not in taken:
                return sym

    # -- step application ---------------------------------------------------

    def apply(self, step: RefineStep) -> ApplyOutcome:
        if step.hole not in self.holes:
            raise RuleArgumentError(f"unknown hole {step.hole!r}")
        rule = RULES.get(step.rule)
        if rule is None:
            raise RuleArgumentError(f"unknown rule {step.rule!r}")
        if not rule_available(rule, self.mode, self.strict_rules):
            raise RuleArgumentError(f"rule {step.rule} is not available in {self.mode} mode")
        counter0, used0, sym0 = self._counter, set(self._used), self._sym_counter
        ctx = RuleCtx(
            reg=self.reg,
            tol=self.tol,
            mode=self.mode,
            hole=self.holes[step.hole],
            args=step.arg_dict(),
            alloc=self._make_alloc(step.names),
        )
        try:
            outcome = rule.fn(ctx)
        except Exception:
            self._counter, self._used, self._sym_counter = counter0, used0, sym0
            raise
        if not outcome.accepted:
            self._counter, self._used, self._sym_counter = counter0, used0, sym0
            self.rejections.append(RejectedStep(step, outcome.obligations))
            return ApplyOutcome(False, outcome.obligations, (), outcome.note)
        # keep sequences flat so constructed programs compare structurally
        # against parsed listings
        self.program = A.flatten(A.replace_hole(self.program, step.hole, outcome.replacement))
        del self.holes[step.hole]
        for kid in outcome.children:
            self.holes[kid.hid] = kid
        ids = tuple(k.hid for k in outcome.children)
        self.steps.append(AcceptedStep(step, outcome.obligations, ids, outcome.note))
        return ApplyOutcome(True, outcome.obligations, ids, outcome.note)

    # -- history ------------------------------------------------------------

    def undo(self) -> None:
        if not self.steps:
            raise RuleArgumentError("nothing to undo")
        keep = [s.step for s in self.steps[:-1]]
        rejections = self.rejections
        self.__init__(self._script, tol=self.tol, strict_rules=self.strict_rules)
        for st in keep:
            out = self.apply(st)
            if not out.accepted:  # pragma: no cover - accepted steps replay cleanly
                raise RuleArgumentError(f"replay of accepted step on {st.hole} failed")
        self.rejections = rejections

    def is_complete(self) -> bool:
        return not self.holes

    # -- export / verification ----------------------------------------------

    def export_script(self) -> str:
        sc = Script(
            self.name,
            self.reg,
            self.mode,
            self._script.params,
            self._script.hole_id,
            self._script.clauses,
            [s.step for s in self.steps],
        )
        return script_source(sc)

    def verify_constructed(self, method: str = "auto") -> list[tuple[dict, Verdict]]:
        if not self.is_complete():
            raise RuleArgumentError("the program still has holes")
        spec = self._script.spec
        out = []
        for b in spec.bindings():
            clause = spec.clauses[b.get("clause", 0)]
            pre = E.eval_predicate(clause.pre, self.reg, b, self.tol)
            post = E.eval_predicate(clause.post, self.reg, b, self.tol)
            verdict = check(
                self.program,
                self.reg,
                pre,
                post,
                mode=self.mode,
                binding={k: val for k, val in b.items() if k != "clause"},
                tol=self.tol,
                method=method,
            )
            out.append((b, verdict))
        return out


def run_script(
    script: Script, tol: Tolerances = DEFAULT_TOL, strict_rules: bool = False
) -> tuple[Session, list[ApplyOutcome]]:
    """Build a session from the spec block and apply every step in order."""
    sess = Session(script, tol=tol, strict_rules=strict_rules)
    outs = [sess.apply(st) for st in script.steps]
    return sess, outs
