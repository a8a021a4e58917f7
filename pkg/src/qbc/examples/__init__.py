"""Bundled, replayable refinement scripts and the programs they construct.

Each case ships as a pair of files under ``data/``: a ``.qbc`` refinement
script and a ``.qw`` listing of the program the script builds.  Replaying a
case re-runs every step, compares the constructed program against the bundled
listing, re-verifies the correctness triple, and simulates the program to
measure the quantities the case promises (success probabilities, fidelities,
termination mass).

Names accepted by :func:`run_example`: the bundled stems returned by
:func:`example_names`, plus the parameterized spellings ``qft(n)`` for
``n in 1..4`` and ``search_grover(n,T)`` (instances without a bundled file
are generated on the fly for ``1 <= T <= 2**n / 2``).
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from importlib import resources
from typing import Callable

import numpy as np

from ..matrixcore import VariableRegistry
from ..qlang import ast as A
from ..qlang import exprs as E
from ..qlang.parse import Script, parse_program_file, parse_script
from ..qlang.pretty import program_source
from ..refine import Session, run_script
from ..semantics import apply_program

from . import _builders

__all__ = [
    "ExampleCase",
    "ExampleReport",
    "Expectation",
    "example_names",
    "get_case",
    "run_example",
]


@dataclass(frozen=True)
class Expectation:
    """A numeric promise about one measured quantity."""

    key: str
    value: float
    tol: float = 0.0
    bound: str = "two_sided"  # or "lower"

    def met(self, measured: float) -> bool:
        if self.bound == "lower":
            return measured >= self.value - self.tol
        return abs(measured - self.value) <= self.tol

    def describe(self) -> str:
        if self.bound == "lower":
            return f"{self.key} >= {self.value:g}"
        return f"{self.key} = {self.value:g} +/- {self.tol:g}"


@dataclass(frozen=True)
class ExampleCase:
    name: str
    script_text: str
    program_text: str
    expectations: tuple[Expectation, ...]
    measure: Callable[[Session, Script], dict[str, float]]
    bundled: bool = True

    def script(self) -> Script:
        return parse_script(self.script_text)

    def registry(self) -> VariableRegistry:
        return self.script().reg


@dataclass(frozen=True)
class ExampleReport:
    name: str
    steps: int
    rejected: int
    matches_listing: bool
    verdicts: tuple[tuple[dict, str], ...]
    measurements: dict[str, float]
    expectations: tuple[Expectation, ...]
    program: str
    notes: tuple[str, ...] = field(default_factory=tuple)

    @property
    def holds(self) -> bool:
        return bool(self.verdicts) and all(s == "holds" for _, s in self.verdicts)

    @property
    def expectations_met(self) -> bool:
        return all(e.met(self.measurements.get(e.key, math.nan)) for e in self.expectations)

    @property
    def ok(self) -> bool:
        return (
            self.rejected == 0
            and self.matches_listing
            and self.holds
            and self.expectations_met
        )


# ---------------------------------------------------------------------------
# Measurements: simulate the constructed program and extract the promised
# quantities.  All simulations use the session's own program (the artifact
# under test), never the bundled listing.


def _spec_matrices(sess: Session, sc: Script, binding=None):
    pre = E.eval_predicate(sc.spec.clauses[0].pre, sess.reg, binding)
    post = E.eval_predicate(sc.spec.clauses[0].post, sess.reg, binding)
    return pre, post


def _measure_fair_coin(sess: Session, sc: Script) -> dict[str, float]:
    reg = sess.reg
    out = apply_program(sess.program, reg, np.eye(reg.dim, dtype=complex) / reg.dim)
    probs = {}
    for x in (0, 1):
        _, post = _spec_matrices(sess, sc, {"x": x})
        probs[f"prob_outcome_{x}"] = float(np.real(np.trace(post @ out)))
    return probs


def _measure_toss(sess: Session, sc: Script) -> dict[str, float]:
    reg = sess.reg
    out = apply_program(sess.program, reg, np.eye(reg.dim, dtype=complex) / reg.dim)
    _, post = _spec_matrices(sess, sc)
    return {
        "termination": float(np.real(np.trace(out))),
        "prob_zero": float(np.real(np.trace(post @ out))),
    }


def _measure_overlap_with_post(sess: Session, sc: Script) -> dict[str, float]:
    """Fidelity of the output with the (pure) postcondition on the spec input."""
    reg = sess.reg
    pre, post = _spec_matrices(sess, sc)
    rho = pre / np.trace(pre)
    out = apply_program(sess.program, reg, rho)
    return {"fidelity": float(np.real(np.trace(post @ out)))}


def _measure_search(sess: Session, sc: Script) -> dict[str, float]:
    reg = sess.reg
    out = apply_program(sess.program, reg, np.eye(reg.dim, dtype=complex) / reg.dim)
    _, post = _spec_matrices(sess, sc)
    found: dict[str, float] = {"success": float(np.real(np.trace(post @ out)))}
    for node in A.iter_programs(sess.program):
        if isinstance(node, A.Repeat):
            found["rounds"] = float(node.count)
            break
    return found


def _measure_boost_rep(sess: Session, sc: Script) -> dict[str, float]:
    reg = sess.reg
    out = apply_program(sess.program, reg, np.eye(reg.dim, dtype=complex) / reg.dim)
    post = E.eval_predicate(sc.spec.clauses[0].post, reg, {"clause": 0})
    rounds = next(
        float(n.count) for n in A.iter_programs(sess.program) if isinstance(n, A.Repeat)
    )
    return {"success": float(np.real(np.trace(post @ out))), "rounds": rounds}


def _measure_boost_while(sess: Session, sc: Script) -> dict[str, float]:
    reg = sess.reg
    out = apply_program(sess.program, reg, np.eye(reg.dim, dtype=complex) / reg.dim)
    _, post = _spec_matrices(sess, sc)
    return {
        "termination": float(np.real(np.trace(out))),
        "prob_zero": float(np.real(np.trace(post @ out))),
    }


# ---------------------------------------------------------------------------
# Corpus registry


def _data_text(stem: str, suffix: str) -> str:
    return (resources.files(__package__) / "data" / f"{stem}.{suffix}").read_text("utf-8")


def _grover_success(n: int, t: int) -> float:
    r = _builders.grover_rounds(n, t)
    return math.sin((2 * r + 1) * math.asin(math.sqrt(t / 2**n))) ** 2


def _grover_expectations(n: int, t: int) -> tuple[Expectation, ...]:
    r = _builders.grover_rounds(n, t)
    return (
        Expectation("rounds", float(r)),
        Expectation("success", _grover_success(n, t), 1e-9),
        Expectation("success", 1.0 - t / 2**n, 0.0, "lower"),
    )


_MEASURERS: dict[str, Callable[[Session, Script], dict[str, float]]] = {
    "fair_coin": _measure_fair_coin,
    "toss_until_zero": _measure_toss,
    "teleport": _measure_overlap_with_post,
    "search_random": _measure_search,
    "boost_rep": _measure_boost_rep,
    "boost_while": _measure_boost_while,
}

_EXPECTATIONS: dict[str, tuple[Expectation, ...]] = {
    "fair_coin": (
        Expectation("prob_outcome_0", 0.5, 1e-9),
        Expectation("prob_outcome_1", 0.5, 1e-9),
    ),
    "toss_until_zero": (
        Expectation("termination", 1.0, 1e-8),
        Expectation("prob_zero", 1.0, 1e-8),
    ),
    "teleport": (Expectation("fidelity", 1.0, 1e-9),),
    "search_random": (Expectation("success", 3 / 8, 1e-9),),
    "boost_rep": (
        Expectation("rounds", 4.0),
        Expectation("success", 0.9, 0.0, "lower"),
    ),
    "boost_while": (
        Expectation("termination", 1.0, 1e-8),
        Expectation("prob_zero", 1.0, 1e-8),
    ),
}

_BUNDLED_STEMS = (
    "fair_coin",
    "toss_until_zero",
    "teleport",
    "search_random",
    "search_grover_3_1",
    "search_grover_3_2",
    "boost_rep",
    "boost_while",
    "qft_1",
    "qft_2",
    "qft_3",
    "qft_4",
)

_GROVER_STEM = re.compile(r"^search_grover[_(](\d+)[,_]\s*(\d+)\)?$")
_QFT_STEM = re.compile(r"^qft[_(](\d+)\)?$")


def example_names() -> tuple[str, ...]:
    """Stems of the bundled cases, in presentation order."""
    return _BUNDLED_STEMS


def _case_for_stem(stem: str) -> ExampleCase:
    m = _GROVER_STEM.match(stem)
    if m:
        n, t = int(m.group(1)), int(m.group(2))
        canonical = f"search_grover_{n}_{t}"
        bundled = canonical in _BUNDLED_STEMS
        if bundled:
            script, program = _data_text(canonical, "qbc"), _data_text(canonical, "qw")
        else:
            try:
                script, program = _builders.grover(n, t)
            except ValueError as exc:
                raise KeyError(f"no such example: {stem} ({exc})") from exc
        return ExampleCase(
            canonical, script, program, _grover_expectations(n, t), _measure_search, bundled
        )
    m = _QFT_STEM.match(stem)
    if m:
        n = int(m.group(1))
        canonical = f"qft_{n}"
        if canonical not in _BUNDLED_STEMS:
            raise KeyError(f"no such example: {stem} (bundled transforms cover n in 1..4)")
        return ExampleCase(
            canonical,
            _data_text(canonical, "qbc"),
            _data_text(canonical, "qw"),
            (Expectation("fidelity", 1.0 - 1e-9, 0.0, "lower"),),
            _measure_overlap_with_post,
        )
    if stem in _BUNDLED_STEMS:
        return ExampleCase(
            stem,
            _data_text(stem, "qbc"),
            _data_text(stem, "qw"),
            _EXPECTATIONS[stem],
            _MEASURERS[stem],
        )
    raise KeyError(f"no such example: {stem}")


def get_case(name: str) -> ExampleCase:
    """Resolve a (possibly parameterized) name to a case.

    Raises ``KeyError`` for names outside the corpus.
    """
    return _case_for_stem(name.strip().replace(" ", ""))


def _normalize(prog: A.Program, reg: VariableRegistry) -> A.Program:
    return A.flatten(A.desugar(prog, reg.card))


def run_example(name: str) -> ExampleReport:
    """Replay a bundled script, verify it, and measure what it promises."""
    case = get_case(name)
    sc = case.script()
    sess, outcomes = run_script(sc)
    rejected = sum(1 for o in outcomes if not o.accepted)
    notes: list[str] = []
    for o in outcomes:
        if not o.accepted:
            notes.extend(
                f"rejected: {ob.description} (margin {ob.margin:.3e})"
                for ob in o.obligations
                if not ob.holds
            )

    reg = sess.reg
    prog_reg, expected = parse_program_file(case.program_text)
    if prog_reg is not None and prog_reg.names != reg.names:
        notes.append("bundled listing declares a different registry")
    matches = _normalize(sess.program, reg) == _normalize(expected, reg)
    if not matches:
        notes.append("constructed program differs from the bundled listing")

    verdicts: tuple[tuple[dict, str], ...] = ()
    measurements: dict[str, float] = {}
    if rejected == 0 and sess.is_complete():
        verdicts = tuple((b, v.status) for b, v in sess.verify_constructed())
        measurements = case.measure(sess, sc)
        for e in case.expectations:
            got = measurements.get(e.key)
            if got is None or not e.met(got):
                notes.append(f"expectation missed: {e.describe()}, measured {got}")

    return ExampleReport(
        name=case.name,
        steps=len(outcomes) - rejected,
        rejected=rejected,
        matches_listing=matches,
        verdicts=verdicts,
        measurements=measurements,
        expectations=case.expectations,
        program=program_source(sess.program),
        notes=tuple(notes),
    )
