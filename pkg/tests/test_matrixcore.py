import numpy as np
import pytest

from qbc.matrixcore import (
    DEFAULT_TOL,
    DIM_CAP,
    Tolerances,
    VariableRegistry,
    basis_state,
    cylindrical_extension,
    dagger,
    herm_eig,
    hermitize,
    is_projection,
    kron,
    loewner_leq,
    psd_sqrt,
)

H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
I2 = np.eye(2, dtype=complex)


def rng(seed=0):
    return np.random.default_rng(seed)


def random_hermitian(n, r):
    m = r.normal(size=(n, n)) + 1j * r.normal(size=(n, n))
    return (m + m.conj().T) / 2


# ---------------------------------------------------------------------------
# kron

def test_kron_identity_case():
    assert np.allclose(kron(I2, I2), np.eye(4))


def test_kron_block_structure():
    # |0><0| (x) X puts X in the top-left block, zeros elsewhere
    p0 = np.array([[1, 0], [0, 0]], dtype=complex)
    out = kron(p0, X)
    expected = np.zeros((4, 4), dtype=complex)
    expected[0:2, 0:2] = X
    assert np.allclose(out, expected)


def test_kron_hadamard_pair_on_00():
    # (H(x)H)|00> = (|00>+|01>+|10>+|11>)/2, expanded by hand
    v = kron(H, H) @ basis_state(4, 0)
    assert np.allclose(v, np.full(4, 0.5))


def test_kron_capacity_error():
    big = np.eye(64)
    with pytest.raises(ValueError, match="cap"):
        kron(big, big, cap=DIM_CAP)


def test_kron_mixed_product_property():
    r = rng(7)
    for _ in range(20):
        a, b, c, d = (r.normal(size=(2, 2)) + 1j * r.normal(size=(2, 2)) for _ in range(4))
        lhs = kron(a, b) @ kron(c, d)
        rhs = kron(a @ c, b @ d)
        assert np.allclose(lhs, rhs, atol=1e-12)


def test_kron_associativity():
    r = rng(8)
    a, b, c = (r.normal(size=(2, 2)) for _ in range(3))
    assert np.allclose(kron(kron(a, b), c), kron(a, kron(b, c)), atol=1e-12)


# ---------------------------------------------------------------------------
# registry

def test_registry_basic():
    reg = VariableRegistry([("q", 2), ("r", 2)])
    assert reg.dim == 4
    assert reg.names == ("q", "r")
    assert reg.card("r") == 2


def test_registry_rejects_duplicates_and_small_cards():
    with pytest.raises(ValueError):
        VariableRegistry([("q", 2), ("q", 2)])
    with pytest.raises(ValueError):
        VariableRegistry([("q", 1)])


def test_registry_dimension_cap():
    with pytest.raises(ValueError, match="cap"):
        VariableRegistry([(f"q{i}", 2) for i in range(11)])  # 2^11 > 1024
    # exactly at the cap is fine
    VariableRegistry([(f"q{i}", 2) for i in range(10)])


# ---------------------------------------------------------------------------
# cylindrical extension

def test_extend_identity_is_identity():
    reg = VariableRegistry([("q", 2), ("r", 2)])
    assert np.allclose(cylindrical_extension(I2, ["q"], reg), np.eye(4))


def test_extend_x_on_second_variable():
    reg = VariableRegistry([("q", 2), ("r", 2)])
    assert np.allclose(cylindrical_extension(X, ["r"], reg), kron(I2, X))


def test_extend_z_on_first_variable():
    # enumerate the four basis vectors: signs (+ + - -)
    reg = VariableRegistry([("q", 2), ("r", 2)])
    out = cylindrical_extension(Z, ["q"], reg)
    assert np.allclose(out, np.diag([1, 1, -1, -1]).astype(complex))


def test_extend_respects_given_factor_order():
    # CNOT given on (r, q) must equal the permuted matrix, not kron(I, CNOT)
    reg = VariableRegistry([("q", 2), ("r", 2)])
    cnot = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)
    out = cylindrical_extension(cnot, ["r", "q"], reg)
    # control r, target q; basis order |qr>: 00->00, 01->11, 10->10, 11->01
    expected = np.zeros((4, 4), dtype=complex)
    expected[0, 0] = 1
    expected[3, 1] = 1
    expected[2, 2] = 1
    expected[1, 3] = 1
    assert np.allclose(out, expected)


def test_extend_product_rule_disjoint_vars():
    r = rng(3)
    reg = VariableRegistry([("a", 2), ("b", 3), ("c", 2)])
    A = r.normal(size=(2, 2)) + 1j * r.normal(size=(2, 2))
    B = r.normal(size=(3, 3)) + 1j * r.normal(size=(3, 3))
    lhs = cylindrical_extension(A, ["a"], reg) @ cylindrical_extension(B, ["b"], reg)
    rhs = cylindrical_extension(kron(A, B), ["a", "b"], reg)
    assert np.allclose(lhs, rhs, atol=1e-12)


def test_extend_unknown_variable_and_dim_mismatch():
    reg = VariableRegistry([("q", 2)])
    with pytest.raises(ValueError):
        cylindrical_extension(I2, ["nope"], reg)
    with pytest.raises(ValueError):
        cylindrical_extension(np.eye(3), ["q"], reg)


# ---------------------------------------------------------------------------
# Loewner order

def test_loewner_reflexive():
    assert loewner_leq(I2, I2, DEFAULT_TOL)


def test_loewner_span_containment():
    # |G><G| with |G> = (|01>+|11>)/sqrt(2) lies under the solution span
    g = (basis_state(4, 1) + basis_state(4, 3)) / np.sqrt(2)
    span = np.diag([0, 1, 0, 1]).astype(complex)
    assert loewner_leq(np.outer(g, g.conj()), span, DEFAULT_TOL)
    assert not loewner_leq(span, np.outer(g, g.conj()), DEFAULT_TOL)


def test_loewner_diagonal_counterexample():
    a = np.diag([0.5, 0.2]).astype(complex)
    b = np.diag([0.6, 0.1]).astype(complex)
    assert not loewner_leq(a, b, DEFAULT_TOL)


def test_loewner_by_construction():
    r = rng(11)
    for _ in range(25):
        n = int(r.integers(2, 6))
        m = r.normal(size=(n, n)) + 1j * r.normal(size=(n, n))
        a = m @ m.conj().T
        c = r.normal(size=(n, n)) + 1j * r.normal(size=(n, n))
        b = a + c.conj().T @ c
        assert loewner_leq(a, b, DEFAULT_TOL)
        # the reverse direction only holds when the perturbation is negligible
        if np.linalg.norm(c) > 1e-3:
            assert not loewner_leq(b, a, DEFAULT_TOL)


def test_loewner_rejects_nonsquare():
    with pytest.raises(ValueError):
        loewner_leq(np.ones((2, 3)), np.ones((2, 3)), DEFAULT_TOL)


def test_hermitize_rejects_gross_asymmetry():
    m = np.array([[0, 1], [0, 0]], dtype=complex)
    with pytest.raises(ValueError, match="[Hh]ermitian"):
        hermitize(m)
    # tiny asymmetry is silently repaired
    m2 = I2 + 1e-9 * np.array([[0, 1], [0, 0]])
    out = hermitize(m2)
    assert np.allclose(out, out.conj().T)


# ---------------------------------------------------------------------------
# psd_sqrt

def test_psd_sqrt_diagonal():
    assert np.allclose(psd_sqrt(np.diag([4.0, 9.0]).astype(complex), DEFAULT_TOL), np.diag([2, 3]))


def test_psd_sqrt_projection_fixed_point():
    p1 = np.array([[0, 0], [0, 1]], dtype=complex)
    assert np.allclose(psd_sqrt(p1, DEFAULT_TOL), p1)


def test_psd_sqrt_plus_projection():
    # (I + X)/2 has eigenpairs (1, |+>), (0, |->), so the root is |+><+| itself
    m = (I2 + X) / 2
    out = psd_sqrt(m, DEFAULT_TOL)
    assert np.allclose(out, m, atol=1e-12)


def test_psd_sqrt_squares_back():
    r = rng(5)
    for _ in range(10):
        m = r.normal(size=(4, 4)) + 1j * r.normal(size=(4, 4))
        a = m @ m.conj().T / 10
        s = psd_sqrt(a, DEFAULT_TOL)
        assert np.allclose(s @ s, a, atol=1e-8)
        assert np.allclose(s, s.conj().T)


def test_psd_sqrt_rejects_negative():
    with pytest.raises(ValueError, match="PSD"):
        psd_sqrt(np.diag([1.0, -0.5]).astype(complex), DEFAULT_TOL)


def test_psd_sqrt_clamps_tiny_negatives():
    out = psd_sqrt(np.diag([1.0, -1e-12]).astype(complex), DEFAULT_TOL)
    assert np.allclose(out, np.diag([1.0, 0.0]))


def test_psd_sqrt_idempotent_on_random_projections():
    r = rng(13)
    for _ in range(10):
        m = random_hermitian(5, r)
        _, vecs = np.linalg.eigh(m)
        p = vecs[:, :2] @ vecs[:, :2].conj().T
        assert np.allclose(psd_sqrt(p, DEFAULT_TOL), p, atol=1e-10)


# ---------------------------------------------------------------------------
# herm_eig

def test_herm_eig_pauli_z():
    vals, _ = herm_eig(Z)
    assert np.allclose(vals, [-1, 1])


def test_herm_eig_hadamard():
    # char. polynomial lambda^2 - tr(H) lambda + det(H) = lambda^2 - 1
    vals, vecs = herm_eig(H)
    assert np.allclose(vals, [-1, 1])
    assert np.allclose(vecs @ np.diag(vals) @ vecs.conj().T, H, atol=1e-10)


def test_herm_eig_identity():
    vals, vecs = herm_eig(np.eye(4, dtype=complex))
    assert np.allclose(vals, np.ones(4))
    assert np.allclose(vecs.conj().T @ vecs, np.eye(4), atol=1e-10)


# ---------------------------------------------------------------------------
# odds and ends

def test_tolerances_validation():
    with pytest.raises(ValueError):
        Tolerances(psd_eps=-1e-9)
    t = Tolerances()
    assert t.psd_eps == 1e-9 and t.trace_eps == 1e-9 and t.loop_tail_eps == 1e-12


def test_is_projection():
    assert is_projection(np.diag([1.0, 0.0, 1.0]).astype(complex))
    assert not is_projection(np.diag([0.5, 0.5]).astype(complex))


def test_dagger():
    m = np.array([[1, 2j], [3, 4]], dtype=complex)
    assert np.allclose(dagger(m), m.conj().T)
