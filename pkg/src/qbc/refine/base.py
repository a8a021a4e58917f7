"""Shared runtime types for the refinement engine.

A *runtime hole* is a family of pre/post obligations indexed by parameter
bindings. Rules materialize every binding into concrete matrices when they
fire, so later steps never re-evaluate parent expressions. The reserved
binding symbol ``clause`` indexes multi-clause specifications.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from ..matrixcore import DEFAULT_TOL, Tolerances, herm_eig, hermitize

N_CHECK = 64  # loop certificate length
SEQ_CONV_EPS = 1e-8  # stabilization tolerance for certificate sequences
WEIGHT_SUM_EPS = 1e-9


class RuleArgumentError(ValueError):
    """Malformed rule application: bad names, shapes, domains, or modes.

    Distinct from an obligation failure — the step is ill-formed rather than
    unsound, so nothing is recorded in the rejection log.
    """


ParamSpace = tuple[tuple[str, tuple[int, ...]], ...]
BindingKey = tuple[int, ...]


def binding_key(params: ParamSpace, binding: dict[str, int]) -> BindingKey:
    return tuple(int(binding[name]) for name, _ in params)


def iter_bindings(params: ParamSpace) -> Iterator[dict[str, int]]:
    def walk(i: int, cur: dict[str, int]) -> Iterator[dict[str, int]]:
        if i == len(params):
            yield dict(cur)
            return
        name, dom = params[i]
        for v in dom:
            cur[name] = v
            yield from walk(i + 1, cur)
        del cur[name]

    yield from walk(0, {})


@dataclass
class HoleState:
    hid: str
    params: ParamSpace
    table: dict[BindingKey, tuple[np.ndarray, np.ndarray]]
    srcs: dict[BindingKey, tuple[str, str]] = field(default_factory=dict)
    note: str | None = None

    def bindings(self) -> list[dict[str, int]]:
        return list(iter_bindings(self.params))

    def pre(self, binding: dict[str, int]) -> np.ndarray:
        return self.table[binding_key(self.params, binding)][0]

    def post(self, binding: dict[str, int]) -> np.ndarray:
        return self.table[binding_key(self.params, binding)][1]

    def src(self, binding: dict[str, int]) -> tuple[str, str]:
        return self.srcs.get(binding_key(self.params, binding), ("", ""))

    @property
    def clause_count(self) -> int:
        for name, dom in self.params:
            if name == "clause":
                return len(dom)
        return 1


@dataclass(frozen=True)
class Obligation:
    kind: str  # implication | sum-implication | sequence-monotone | sequence-limit | weight-sum
    description: str
    binding: dict[str, int]
    verdict: str  # holds | fails
    margin: float
    witness: np.ndarray | None = None

    @property
    def holds(self) -> bool:
        return self.verdict == "holds"


def implication_obligation(
    description: str,
    binding: dict[str, int],
    lhs: np.ndarray,
    rhs: np.ndarray,
    tol: Tolerances = DEFAULT_TOL,
    kind: str = "implication",
) -> Obligation:
    """lhs => rhs in the Loewner order; the witness spans the worst violation."""
    defect = hermitize(np.asarray(rhs) - np.asarray(lhs), eps=np.inf)
    vals, vecs = herm_eig(defect)
    margin = float(vals[0])
    if margin >= -tol.psd_eps:
        return Obligation(kind, description, dict(binding), "holds", margin)
    return Obligation(
        kind, description, dict(binding), "fails", margin, np.ascontiguousarray(vecs[:, 0])
    )


def scalar_obligation(
    kind: str, description: str, binding: dict[str, int], deviation: float, eps: float
) -> Obligation:
    margin = -abs(float(deviation))
    verdict = "holds" if abs(deviation) <= eps else "fails"
    return Obligation(kind, description, dict(binding), verdict, margin)
