"""Correctness judgments over programs.

A total judgment {P} S {Q} demands P <= S^dag(Q) in the Loewner order; the
partial form demands S^dag(I - Q) <= I - P, which ignores nonterminating
branches. Checks run along one of three routes:

* ``adjoint`` — structural Heisenberg-picture evaluation (default).
* ``transfer`` — conjugate-transpose of the transfer matrix; an independent
  path kept for cross-validation.
* ``basis`` — for projection preconditions only: P <= M with 0 <= M <= I holds
  iff every range basis vector of P has unit expectation under M, so it
  suffices to push each basis state forward and compare traces. This avoids
  operator-valued adjoints entirely and scales to larger registries.

Verdicts are three-valued. When a loop hits the iteration cap the partial sums
bound the true value from below, which keeps one direction sound per mode:
a truncated *total* check that passes still passes in the limit, and a
truncated *partial* check that fails still fails; the other direction is
reported as ``inconclusive``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .matrixcore import (
    DEFAULT_TOL,
    Tolerances,
    VariableRegistry,
    herm_eig,
    hermitize,
    is_projection,
    min_eig,
)
from .qlang import ast as A
from .semantics import adjoint_apply, apply_program, superoperator_of, unvec, vec, dagger

BASIS_ROUTE_DIM = 16  # above this, 'auto' prefers the forward basis route


@dataclass(frozen=True)
class Verdict:
    status: str  # holds | fails | inconclusive
    margin: float
    witness: np.ndarray | None
    detail: str
    method: str

    @property
    def holds(self) -> bool:
        return self.status == "holds"


def expectation(q: np.ndarray, rho: np.ndarray) -> float:
    return float(np.trace(np.asarray(q) @ np.asarray(rho)).real)


def validate_predicate(
    m: np.ndarray, dim: int, tol: Tolerances = DEFAULT_TOL, name: str = "predicate"
) -> np.ndarray:
    m = np.asarray(m, dtype=complex)
    if m.shape != (dim, dim):
        raise ValueError(f"{name} must be {dim}x{dim}, got {m.shape}")
    m = hermitize(m)
    lo = min_eig(m)
    if lo < -tol.psd_eps:
        raise ValueError(f"{name} is not a valid predicate: not PSD (min eigenvalue {lo:.3e})")
    hi = -min_eig(np.eye(dim) - m)
    if hi > tol.psd_eps:
        raise ValueError(f"{name} is not a valid predicate: exceeds the identity by {hi:.3e}")
    return m


def wp(
    prog: A.Program,
    reg: VariableRegistry,
    post: np.ndarray,
    mode: str = "total",
    binding: Mapping[str, int] | None = None,
    tol: Tolerances = DEFAULT_TOL,
    notes: list | None = None,
) -> np.ndarray:
    """The weakest precondition transformer for the given mode."""
    post = validate_predicate(post, reg.dim, tol, "postcondition")
    if mode == "total":
        return adjoint_apply(prog, reg, post, binding, tol, notes)
    if mode == "partial":
        eye = np.eye(reg.dim, dtype=complex)
        return eye - adjoint_apply(prog, reg, eye - post, binding, tol, notes)
    raise ValueError(f"unknown mode {mode!r}")


def check_total(prog, reg, pre, post, binding=None, tol=DEFAULT_TOL, method="auto") -> Verdict:
    return _check(prog, reg, pre, post, "total", binding, tol, method)


def check_partial(prog, reg, pre, post, binding=None, tol=DEFAULT_TOL, method="auto") -> Verdict:
    return _check(prog, reg, pre, post, "partial", binding, tol, method)


def check(prog, reg, pre, post, mode, binding=None, tol=DEFAULT_TOL, method="auto") -> Verdict:
    if mode not in ("total", "partial"):
        raise ValueError(f"unknown mode {mode!r}")
    return _check(prog, reg, pre, post, mode, binding, tol, method)


def _check(prog, reg, pre, post, mode, binding, tol, method) -> Verdict:
    pre = validate_predicate(pre, reg.dim, tol, "precondition")
    post = validate_predicate(post, reg.dim, tol, "postcondition")
    if method == "auto":
        method = "basis" if reg.dim > BASIS_ROUTE_DIM and is_projection(pre) else "adjoint"

    notes: list = []
    if method in ("adjoint", "transfer"):
        eye = np.eye(reg.dim, dtype=complex)
        target = post if mode == "total" else eye - post
        if method == "adjoint":
            back = adjoint_apply(prog, reg, target, binding, tol, notes)
        else:
            t = superoperator_of(prog, reg, binding, tol, notes)
            back = unvec(dagger(t) @ vec(target))
        m = back if mode == "total" else eye - back
        vals, vecs = herm_eig(hermitize(m - pre, eps=np.inf))
        margin = float(vals[0])
        ok = margin >= -tol.psd_eps
        witness = None if ok else np.ascontiguousarray(vecs[:, 0])
    elif method == "basis":
        if not is_projection(pre, eps=1e-9):
            raise ValueError("the basis route needs a projection precondition")
        vals, vecs = herm_eig(pre)
        margin = np.inf
        ok = True
        witness = None
        for i in range(reg.dim):
            if vals[i] < 0.5:
                continue
            psi = vecs[:, i]
            out = apply_program(prog, reg, np.outer(psi, psi.conj()), binding, tol, notes)
            if mode == "total":
                slack = expectation(post, out) - 1.0
            else:
                slack = expectation(post, out) - float(np.trace(out).real)
            if slack < margin:
                margin = slack
            if slack < -tol.psd_eps and ok:
                ok = False
                witness = psi.copy()
        if margin is np.inf:
            margin = 0.0  # empty precondition: vacuous
    else:
        raise ValueError(f"unknown method {method!r}")

    if ok:
        status = "inconclusive" if (notes and mode == "partial") else "holds"
        witness = None
    else:
        status = "inconclusive" if (notes and mode == "total") else "fails"
        if status != "fails":
            witness = None
    detail = f"{mode} correctness via {method} route; margin {margin:.3e}"
    if notes:
        detail += "; " + "; ".join(str(n) for n in notes)
    return Verdict(status, float(margin), witness, detail, method)
