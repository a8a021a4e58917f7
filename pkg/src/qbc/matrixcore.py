"""Dense complex linear algebra with explicit tolerances.

Everything downstream (semantics, Hoare checks, refinement obligations) reduces
to the handful of primitives in this module: Kronecker products, cylindrical
extension of operators onto a variable registry, Hermitian eigendecomposition,
PSD square roots, and Loewner-order decisions. Matrices are plain numpy
complex128 arrays (row-major); all functions are pure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

#: Default cap on the total registry dimension (10 qubits).
DIM_CAP = 1024

#: Inputs whose anti-Hermitian part exceeds this are rejected, not repaired.
ASYM_EPS = 1e-7


@dataclass(frozen=True)
class Tolerances:
    """Numeric slack used by order decisions and loop truncation.

    psd_eps: eigenvalue slack for PSD / Loewner decisions (predicates are
        bounded by I, so an absolute tolerance is well-conditioned).
    trace_eps: slack on trace comparisons (states have trace <= 1).
    loop_tail_eps: while-loop truncation threshold on remaining trace mass.
    """

    psd_eps: float = 1e-9
    trace_eps: float = 1e-9
    loop_tail_eps: float = 1e-12

    def __post_init__(self) -> None:
        for name in ("psd_eps", "trace_eps", "loop_tail_eps"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")


DEFAULT_TOL = Tolerances()


class VariableRegistry:
    """Ordered list of (variable name, basis-label count).

    The registry fixes the tensor-factor order of the full Hilbert space; all
    full-dimension matrices in a session are expressed in this order.
    """

    def __init__(self, variables: Iterable[tuple[str, int]], cap: int = DIM_CAP):
        vars_ = [(str(n), int(c)) for n, c in variables]
        names = [n for n, _ in vars_]
        if len(set(names)) != len(names):
            raise ValueError("variable names must be unique")
        if not vars_:
            raise ValueError("registry needs at least one variable")
        for n, c in vars_:
            if c < 2:
                raise ValueError(f"variable {n!r} needs at least 2 basis labels, got {c}")
        dim = math.prod(c for _, c in vars_)
        if dim > cap:
            raise ValueError(f"total dimension {dim} exceeds cap {cap}")
        self._vars = tuple(vars_)
        self._index = {n: i for i, (n, _) in enumerate(vars_)}
        self.dim = dim
        self.cap = cap

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self._vars)

    @property
    def cards(self) -> tuple[int, ...]:
        return tuple(c for _, c in self._vars)

    def card(self, name: str) -> int:
        return self._vars[self.index(name)][1]

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise ValueError(f"unknown variable {name!r}") from None

    def subset_dim(self, names: Sequence[str]) -> int:
        return math.prod(self.card(n) for n in names)

    def check_subset(self, names: Sequence[str]) -> None:
        seen = set()
        for n in names:
            self.index(n)
            if n in seen:
                raise ValueError(f"variable {n!r} listed twice")
            seen.add(n)

    def labels(self, names: Sequence[str]):
        """All joint basis labels of the given variables, odometer order."""
        return list(np.ndindex(*(self.card(n) for n in names)))

    def __eq__(self, other) -> bool:
        return isinstance(other, VariableRegistry) and self._vars == other._vars

    def __repr__(self) -> str:
        body = ", ".join(f"{n}:{c}" for n, c in self._vars)
        return f"VariableRegistry({body})"


def as_matrix(m) -> np.ndarray:
    out = np.asarray(m, dtype=complex)
    if out.ndim != 2:
        raise ValueError(f"expected a matrix, got ndim={out.ndim}")
    if not np.all(np.isfinite(out.view(float))):
        raise ValueError("matrix entries must be finite")
    return out


def dagger(m: np.ndarray) -> np.ndarray:
    return np.asarray(m).conj().T


def basis_state(dim: int, index: int) -> np.ndarray:
    v = np.zeros(dim, dtype=complex)
    v[index] = 1.0
    return v


def kron(a, b, cap: int | None = None) -> np.ndarray:
    """Kronecker product; dims multiply. Optional capacity guard."""
    a, b = np.asarray(a, dtype=complex), np.asarray(b, dtype=complex)
    if cap is not None and a.shape[0] * b.shape[0] > cap:
        raise ValueError(
            f"Kronecker product dimension {a.shape[0] * b.shape[0]} exceeds cap {cap}"
        )
    return np.kron(a, b)


def cylindrical_extension(a, on_vars: Sequence[str], reg: VariableRegistry) -> np.ndarray:
    """Embed an operator on a variable subset into the full registry.

    ``a`` is an operator whose tensor factors follow ``on_vars`` *in the given
    order*; the result equals a (x) I on the complement, with factors permuted
    to registry order.
    """
    a = as_matrix(a)
    on_vars = list(on_vars)
    reg.check_subset(on_vars)
    sub = reg.subset_dim(on_vars)
    if a.shape != (sub, sub):
        raise ValueError(f"operator is {a.shape}, variables {on_vars} span dimension {sub}")
    rest = [n for n in reg.names if n not in on_vars]
    if not rest and on_vars == list(reg.names):
        return a
    full = np.kron(a, np.eye(reg.subset_dim(rest), dtype=complex))
    src_order = on_vars + rest
    dims = [reg.card(n) for n in src_order]
    k = len(dims)
    # position of each registry variable inside the source factor order
    perm = [src_order.index(n) for n in reg.names]
    t = full.reshape(dims + dims)
    t = t.transpose(perm + [k + p for p in perm])
    return np.ascontiguousarray(t.reshape(reg.dim, reg.dim))


def hermitize(m, eps: float = ASYM_EPS) -> np.ndarray:
    """Return the Hermitian part; reject inputs that are not nearly Hermitian."""
    m = as_matrix(m)
    if m.shape[0] != m.shape[1]:
        raise ValueError("expected a square matrix")
    asym = np.max(np.abs(m - m.conj().T)) if m.size else 0.0
    if asym > eps:
        raise ValueError(f"matrix is not Hermitian (asymmetry {asym:.3e} > {eps:.0e})")
    return (m + m.conj().T) / 2


def herm_eig(m) -> tuple[np.ndarray, np.ndarray]:
    """Ascending eigenvalues and orthonormal eigenvector columns of a Hermitian matrix."""
    h = hermitize(m)
    vals, vecs = np.linalg.eigh(h)
    return vals, vecs


def min_eig(m) -> float:
    return float(np.linalg.eigvalsh(hermitize(m))[0])


def loewner_leq(a, b, tol: Tolerances = DEFAULT_TOL) -> bool:
    """a <= b in the Loewner order, up to eigenvalue slack psd_eps."""
    a, b = as_matrix(a), as_matrix(b)
    if a.shape != b.shape or a.shape[0] != a.shape[1]:
        raise ValueError(f"shape mismatch in Loewner comparison: {a.shape} vs {b.shape}")
    return min_eig(b - a) >= -tol.psd_eps


def psd_sqrt(m, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Unique PSD square root. Eigenvalues within psd_eps of zero are clamped.

    Measurement complements like I - B routinely carry exact-zero eigenvalues
    perturbed by roundoff; clamping keeps their roots PSD.
    """
    vals, vecs = herm_eig(m)
    if vals[0] < -tol.psd_eps:
        raise ValueError(f"matrix is not PSD (min eigenvalue {vals[0]:.3e})")
    vals = np.where(np.abs(vals) < tol.psd_eps, 0.0, np.maximum(vals, 0.0))
    root = (vecs * np.sqrt(vals)) @ vecs.conj().T
    return (root + root.conj().T) / 2


def is_projection(m, eps: float = 1e-9) -> bool:
    m = as_matrix(m)
    if m.shape[0] != m.shape[1]:
        return False
    if np.max(np.abs(m - m.conj().T)) > eps:
        return False
    return bool(np.max(np.abs(m @ m - m)) <= eps)


def frob(m) -> float:
    return float(np.linalg.norm(np.asarray(m)))
