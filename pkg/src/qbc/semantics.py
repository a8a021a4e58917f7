"""Denotational semantics: forward channels, transfer matrices, adjoints.

A program denotes a completely positive, trace-nonincreasing map. Three views
are provided:

* :func:`apply_program` — push a concrete state through the program.
* :func:`superoperator_of` — the d^2 x d^2 transfer matrix over column-stacked
  states (``vec`` with Fortran order), so composition is matrix product.
* :func:`adjoint_apply` — the Heisenberg-picture dual, computed structurally
  (no transfer matrix), which scales to larger registries.

Loops are infinite sums over exit branches. Forward evaluation stops once the
still-live mass drops below ``loop_tail_eps`` (what remains can only ever
contribute that much trace to the output); the transfer path uses the closed
form ``T_exit (I - T_step)^{-1}`` when the step map is a strict contraction
and otherwise sums terms until the contribution ``T_exit T_step^k`` vanishes.
A loop that reaches ``ITER_CAP`` iterations reports a diagnostic note and
returns the partial sum.
"""

from __future__ import annotations

from typing import Mapping

import numpy as np

from .matrixcore import (
    DEFAULT_TOL,
    Tolerances,
    VariableRegistry,
    basis_state,
    cylindrical_extension,
    dagger,
    frob,
    hermitize,
    min_eig,
    psd_sqrt,
)
from .qlang import ast as A
from .qlang.exprs import ExprError, eval_operator, eval_unitary

ITER_CAP = 10_000
TRANSFER_DIM_CAP = 64


class SemanticsError(ValueError):
    pass


class ConvergenceNote(str):
    """A diagnostic string about a loop that hit the iteration cap."""


def vec(m: np.ndarray) -> np.ndarray:
    return np.asarray(m, dtype=complex).reshape(-1, order="F")


def unvec(v: np.ndarray) -> np.ndarray:
    d = int(round(np.sqrt(v.shape[0])))
    return np.asarray(v, dtype=complex).reshape(d, d, order="F")


def _conj_kron(k: np.ndarray) -> np.ndarray:
    """Transfer matrix of rho -> K rho K^dag under column-stacking vec."""
    return np.kron(k.conj(), k)


# ---------------------------------------------------------------------------
# Measurement and statement compilation


def _init_kraus(reg: VariableRegistry, vars_: tuple[str, ...]) -> list[np.ndarray]:
    d_sub = reg.subset_dim(vars_)
    zero = basis_state(d_sub, 0)
    return [
        cylindrical_extension(np.outer(zero, basis_state(d_sub, x)), vars_, reg)
        for x in range(d_sub)
    ]


def _effect_matrix(
    expr, reg: VariableRegistry, binding, vars_: tuple[str, ...], tol: Tolerances, what: str
) -> np.ndarray:
    try:
        m = eval_operator(expr, reg, binding, vars_, tol)
    except ExprError as e:
        raise SemanticsError(f"{what}: {e}") from e
    m = hermitize(m)
    lo = min_eig(m)
    if lo < -tol.psd_eps:
        raise SemanticsError(f"{what} is not PSD (min eigenvalue {lo:.3e})")
    hi = -min_eig(np.eye(m.shape[0]) - m)
    if hi > tol.psd_eps:
        raise SemanticsError(f"{what} exceeds the identity")
    return m


def _case_kraus(
    node: A.Case, reg: VariableRegistry, binding, tol: Tolerances
) -> list[tuple[A.Label, np.ndarray]]:
    if not isinstance(node.meas, A.General):
        raise SemanticsError("case measurement was not desugared")
    d_sub = reg.subset_dim(node.vars)
    effects = []
    total = np.zeros((d_sub, d_sub), dtype=complex)
    for lab, expr in node.meas.outcomes:
        m = _effect_matrix(expr, reg, binding, node.vars, tol, f"measurement outcome {A.label_text(lab)}")
        total += m
        effects.append((lab, m))
    if np.max(np.abs(total - np.eye(d_sub))) > 1e-9:
        raise SemanticsError("measurement outcomes must sum to the identity")
    return [
        (lab, cylindrical_extension(psd_sqrt(m, tol), node.vars, reg)) for lab, m in effects
    ]


def _guard_kraus(
    node: A.While, reg: VariableRegistry, binding, tol: Tolerances
) -> tuple[np.ndarray, np.ndarray]:
    if node.guard is None:
        raise SemanticsError("while guard was not desugared")
    b = _effect_matrix(node.guard, reg, binding, node.vars, tol, "loop guard")
    d_sub = b.shape[0]
    k1 = cylindrical_extension(psd_sqrt(b, tol), node.vars, reg)
    k0 = cylindrical_extension(psd_sqrt(np.eye(d_sub) - b, tol), node.vars, reg)
    return k0, k1


def _unitary_matrix(node: A.Unitary, reg, binding, tol) -> np.ndarray:
    try:
        u = eval_unitary(node.op, reg, binding, node.vars, tol)
    except ExprError as e:
        raise SemanticsError(f"in '{'/'.join(node.vars)} *= ...': {e}") from e
    return cylindrical_extension(u, node.vars, reg)


def _prepare(prog: A.Program, reg: VariableRegistry) -> A.Program:
    out = A.desugar(prog, reg.card)
    for v in _vars_of(out):
        reg.index(v)
    return out


def _vars_of(p: A.Program) -> set[str]:
    out: set[str] = set()
    if isinstance(p, (A.Init, A.Unitary, A.Case, A.While)):
        out.update(p.vars)
    for c in A.children(p):
        out |= _vars_of(c)
    return out


# ---------------------------------------------------------------------------
# Forward evaluation


def apply_program(
    prog: A.Program,
    reg: VariableRegistry,
    rho: np.ndarray,
    binding: Mapping[str, int] | None = None,
    tol: Tolerances = DEFAULT_TOL,
    notes: list | None = None,
) -> np.ndarray:
    """The state after the program, including only terminated branches."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (reg.dim, reg.dim):
        raise SemanticsError(f"state must be {reg.dim}x{reg.dim}, got {rho.shape}")
    node = _prepare(prog, reg)
    return _apply(node, reg, rho, dict(binding or {}), tol, notes)


def _apply(node, reg, rho, binding, tol, notes) -> np.ndarray:
    if isinstance(node, A.Skip):
        return rho
    if isinstance(node, A.Init):
        ks = _init_kraus(reg, node.vars)
        return sum(k @ rho @ dagger(k) for k in ks)
    if isinstance(node, A.Unitary):
        u = _unitary_matrix(node, reg, binding, tol)
        return u @ rho @ dagger(u)
    if isinstance(node, A.Seq):
        for part in node.parts:
            rho = _apply(part, reg, rho, binding, tol, notes)
        return rho
    if isinstance(node, A.Repeat):
        for _ in range(node.count):
            rho = _apply(node.body, reg, rho, binding, tol, notes)
        return rho
    if isinstance(node, A.Case):
        ks = _case_kraus(node, reg, binding, tol)
        out = np.zeros_like(rho)
        for lab, k in ks:
            out += _apply(node.branch(lab), reg, k @ rho @ dagger(k), binding, tol, notes)
        return out
    if isinstance(node, A.While):
        k0, k1 = _guard_kraus(node, reg, binding, tol)
        done = np.zeros_like(rho)
        cur = rho
        for _ in range(ITER_CAP):
            done += k0 @ cur @ dagger(k0)
            live = _apply(node.body, reg, k1 @ cur @ dagger(k1), binding, tol, notes)
            if np.trace(live).real < tol.loop_tail_eps:
                return done
            cur = live
        if notes is not None:
            notes.append(
                ConvergenceNote(
                    f"loop on {node.vars} did not converge within {ITER_CAP} iterations; "
                    f"remaining live trace {np.trace(cur).real:.3e}"
                )
            )
        return done
    if isinstance(node, A.Hole):
        raise SemanticsError(f"cannot run a program with holes (found {node.hid!r})")
    raise SemanticsError(f"cannot evaluate node {type(node).__name__}")


def termination_probability(
    prog: A.Program,
    reg: VariableRegistry,
    rho: np.ndarray,
    binding: Mapping[str, int] | None = None,
    tol: Tolerances = DEFAULT_TOL,
    notes: list | None = None,
) -> float:
    return float(np.trace(apply_program(prog, reg, rho, binding, tol, notes)).real)


# ---------------------------------------------------------------------------
# Transfer matrices


def superoperator_of(
    prog: A.Program,
    reg: VariableRegistry,
    binding: Mapping[str, int] | None = None,
    tol: Tolerances = DEFAULT_TOL,
    notes: list | None = None,
) -> np.ndarray:
    """The transfer matrix acting on column-stacked states."""
    if reg.dim > TRANSFER_DIM_CAP:
        raise SemanticsError(
            f"transfer matrices are limited to dimension {TRANSFER_DIM_CAP}"
            f" (registry has {reg.dim}); use the structural adjoint instead"
        )
    node = _prepare(prog, reg)
    return _transfer(node, reg, dict(binding or {}), tol, notes)


def _transfer(node, reg, binding, tol, notes) -> np.ndarray:
    d2 = reg.dim**2
    if isinstance(node, A.Skip):
        return np.eye(d2, dtype=complex)
    if isinstance(node, A.Init):
        ks = _init_kraus(reg, node.vars)
        return sum(_conj_kron(k) for k in ks)
    if isinstance(node, A.Unitary):
        return _conj_kron(_unitary_matrix(node, reg, binding, tol))
    if isinstance(node, A.Seq):
        t = np.eye(d2, dtype=complex)
        for part in node.parts:
            t = _transfer(part, reg, binding, tol, notes) @ t
        return t
    if isinstance(node, A.Repeat):
        return np.linalg.matrix_power(_transfer(node.body, reg, binding, tol, notes), node.count)
    if isinstance(node, A.Case):
        ks = _case_kraus(node, reg, binding, tol)
        out = np.zeros((d2, d2), dtype=complex)
        for lab, k in ks:
            out += _transfer(node.branch(lab), reg, binding, tol, notes) @ _conj_kron(k)
        return out
    if isinstance(node, A.While):
        k0, k1 = _guard_kraus(node, reg, binding, tol)
        t_exit = _conj_kron(k0)
        step = _transfer(node.body, reg, binding, tol, notes) @ _conj_kron(k1)
        radius = np.max(np.abs(np.linalg.eigvals(step)))
        if radius < 1 - 1e-6:
            return t_exit @ np.linalg.inv(np.eye(d2) - step)
        out = t_exit.copy()
        cur = step
        for _ in range(ITER_CAP):
            term = t_exit @ cur
            if frob(term) < tol.loop_tail_eps:
                return out
            out += term
            cur = cur @ step
        if notes is not None:
            notes.append(
                ConvergenceNote(
                    f"loop transfer on {node.vars} did not converge within {ITER_CAP} terms"
                )
            )
        return out
    if isinstance(node, A.Hole):
        raise SemanticsError(f"cannot run a program with holes (found {node.hid!r})")
    raise SemanticsError(f"cannot evaluate node {type(node).__name__}")


# ---------------------------------------------------------------------------
# Heisenberg picture


def adjoint_apply(
    prog: A.Program,
    reg: VariableRegistry,
    q: np.ndarray,
    binding: Mapping[str, int] | None = None,
    tol: Tolerances = DEFAULT_TOL,
    notes: list | None = None,
) -> np.ndarray:
    """The dual map on observables. ``q`` should satisfy 0 <= q <= I; the loop
    tail criterion relies on its terms being PSD."""
    q = np.asarray(q, dtype=complex)
    if q.shape != (reg.dim, reg.dim):
        raise SemanticsError(f"observable must be {reg.dim}x{reg.dim}, got {q.shape}")
    node = _prepare(prog, reg)
    return _adjoint(node, reg, q, dict(binding or {}), tol, notes)


def _adjoint(node, reg, q, binding, tol, notes) -> np.ndarray:
    if isinstance(node, A.Skip):
        return q
    if isinstance(node, A.Init):
        ks = _init_kraus(reg, node.vars)
        return sum(dagger(k) @ q @ k for k in ks)
    if isinstance(node, A.Unitary):
        u = _unitary_matrix(node, reg, binding, tol)
        return dagger(u) @ q @ u
    if isinstance(node, A.Seq):
        for part in reversed(node.parts):
            q = _adjoint(part, reg, q, binding, tol, notes)
        return q
    if isinstance(node, A.Repeat):
        for _ in range(node.count):
            q = _adjoint(node.body, reg, q, binding, tol, notes)
        return q
    if isinstance(node, A.Case):
        ks = _case_kraus(node, reg, binding, tol)
        out = np.zeros_like(q)
        for lab, k in ks:
            out += dagger(k) @ _adjoint(node.branch(lab), reg, q, binding, tol, notes) @ k
        return out
    if isinstance(node, A.While):
        k0, k1 = _guard_kraus(node, reg, binding, tol)
        term = dagger(k0) @ q @ k0
        total = np.zeros_like(q)
        for _ in range(ITER_CAP):
            total += term
            if np.trace(term).real < tol.loop_tail_eps:
                return total
            term = dagger(k1) @ _adjoint(node.body, reg, term, binding, tol, notes) @ k1
        if notes is not None:
            notes.append(
                ConvergenceNote(
                    f"adjoint loop on {node.vars} did not converge within {ITER_CAP} terms"
                )
            )
        return total
    if isinstance(node, A.Hole):
        raise SemanticsError(f"cannot take the adjoint of a program with holes ({node.hid!r})")
    raise SemanticsError(f"cannot evaluate node {type(node).__name__}")
