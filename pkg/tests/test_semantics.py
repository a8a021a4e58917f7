"""Forward state evolution, transfer matrices, and the adjoint channel.

The loop semantics is an infinite sum over exit branches; these tests pin the
closed forms for small programs by hand before trusting anything downstream.
"""

import numpy as np
import pytest

import genprog
from qbc.matrixcore import VariableRegistry, dagger
from qbc.qlang.parse import parse_program
from qbc.semantics import (
    SemanticsError,
    adjoint_apply,
    apply_program,
    superoperator_of,
    termination_probability,
    unvec,
    vec,
)

Q1 = VariableRegistry((("q", 2),))
Q2 = VariableRegistry((("q", 2), ("r", 2)))

KET0 = np.diag([1.0, 0.0]).astype(complex)
KET1 = np.diag([0.0, 1.0]).astype(complex)
PLUS = np.full((2, 2), 0.5, dtype=complex)


def run(text, rho, reg=Q1, **kw):
    return apply_program(parse_program(text), reg, rho, **kw)


# ---------------------------------------------------------------------------
# straight-line statements


def test_init_resets_any_state():
    assert np.allclose(run("q := |0>", KET1), KET0)
    assert np.allclose(run("q := |0>", np.eye(2) / 2), KET0)


def test_init_multiple_vars():
    rho = np.eye(4, dtype=complex) / 4
    out = run("q, r := |0>", rho, Q2)
    expected = np.zeros((4, 4), dtype=complex)
    expected[0, 0] = 1
    assert np.allclose(out, expected)


def test_init_is_trace_preserving_not_unitary():
    # distinct inputs map to the same output
    assert np.allclose(run("q := |0>", KET0), run("q := |0>", KET1))


def test_unitary_conjugates():
    assert np.allclose(run("q *= H", KET0), PLUS)
    assert np.allclose(run("q *= X", KET0), KET1)


def test_prepare_plus_state():
    out = run("q := |0>; q *= H", KET1)
    assert np.allclose(out, PLUS)


def test_unitary_on_subset_leaves_rest_alone():
    rho = np.kron(KET0, KET1)
    out = run("r *= X", rho, Q2)
    assert np.allclose(out, np.kron(KET0, KET0))


def test_repeat_unrolls():
    assert np.allclose(run("repeat 3 { q *= X }", KET0), KET1)
    assert np.allclose(run("repeat 0 { q *= X }", KET0), KET0)


def test_case_std_decoheres():
    out = run("q := |0>; q *= H; case std[q] { 0: skip; 1: skip }", KET0)
    assert np.allclose(out, np.eye(2) / 2)


def test_case_branches_act_on_outcome():
    out = run("q := |0>; q *= H; case std[q] { 0: skip; 1: q *= X }", KET0)
    assert np.allclose(out, KET0)


def test_case_explicit_binary_measurement():
    out = run("case proj(ket(1)) [q] { 1: q *= X; 0: skip }", PLUS)
    # both halves end in |0>, coherence destroyed
    assert np.allclose(out, KET0)


def test_parameterized_measurement_uses_binding():
    text = "case proj(ket(x)) [q] { 1: skip; 0: skip }"
    out = run(text, KET1, binding={"x": 1})
    assert np.allclose(out, KET1)


# ---------------------------------------------------------------------------
# loops


def test_toss_until_zero_converges_to_ket0():
    text = "q := |0>; q *= H; while [q] { q *= H }"
    out = run(text, KET0)
    assert np.allclose(out, KET0, atol=1e-9)
    assert termination_probability(parse_program(text), Q1, KET0) == pytest.approx(1.0)


def test_while_with_flip_body_terminates_exactly():
    out = run("while [q] { q *= X }", KET1)
    assert np.allclose(out, KET0)
    out = run("while [q] { q *= X }", PLUS)
    assert np.allclose(out, KET0)


def test_while_false_guard_is_skip():
    out = run("while [q] { q *= X }", KET0)
    assert np.allclose(out, KET0)


def test_nonterminating_loop_reports_diagnostic():
    notes = []
    out = run("while [q] { skip }", KET1, notes=notes)
    assert notes, "expected a convergence diagnostic"
    assert np.allclose(out, np.zeros((2, 2)))
    p = termination_probability(parse_program("while [q] { skip }"), Q1, PLUS)
    assert p == pytest.approx(0.5, abs=1e-9)


def test_loop_skips_tail_below_tolerance():
    text = "while [q] { q *= H }"
    notes = []
    out = run(text, KET1, notes=notes)
    assert not notes
    assert np.trace(out).real == pytest.approx(1.0, abs=1e-9)


def test_holes_cannot_be_run():
    with pytest.raises(SemanticsError, match="hole"):
        run("hole h (I => I)", KET0)


# ---------------------------------------------------------------------------
# transfer matrices


def test_vec_column_stacking_convention():
    m = np.array([[1, 2], [3, 4]], dtype=complex)
    assert np.allclose(vec(m), [1, 3, 2, 4])
    assert np.allclose(unvec(vec(m)), m)


def test_transfer_of_x_gate():
    t = superoperator_of(parse_program("q *= X"), Q1)
    x = np.array([[0, 1], [1, 0]])
    assert np.allclose(t, np.kron(x, x))
    assert np.allclose(unvec(t @ vec(KET0)), KET1)


def test_transfer_of_skip_loop_is_exit_branch_only():
    # mass that never leaves the loop contributes nothing to the output
    t = superoperator_of(parse_program("while [q] { skip }"), Q1)
    b0 = np.diag([1.0, 0.0])
    assert np.allclose(t, np.kron(b0, b0))


def test_transfer_closed_form_matches_truncated_sum():
    prog = parse_program("while [q] { q *= H }")
    t = superoperator_of(parse_program("while [q] { q *= H }"), Q1)
    # independent truncated sum with explicit Kraus algebra
    h = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
    b0, b1 = np.diag([1.0, 0.0]), np.diag([0.0, 1.0])
    step = np.kron((h @ b1).conj(), h @ b1)
    exit_ = np.kron(b0, b0)
    acc = np.zeros((4, 4), dtype=complex)
    cur = np.eye(4)
    for _ in range(200):
        acc = acc + exit_ @ cur
        cur = cur @ step
    assert np.allclose(t, acc, atol=1e-12)
    rho = genprog.random_density(np.random.default_rng(0), 2)
    assert np.allclose(unvec(t @ vec(rho)), apply_program(prog, Q1, rho), atol=1e-9)


def test_transfer_agrees_with_apply_on_random_programs():
    rng = np.random.default_rng(21)
    reg = genprog.qubit_registry(("q", "r"))
    for _ in range(40):
        prog = genprog.random_program(rng, reg, depth=3, allow_sugar=True)
        t = superoperator_of(prog, reg)
        for _ in range(3):
            rho = genprog.random_density(rng, 4)
            assert np.allclose(unvec(t @ vec(rho)), apply_program(prog, reg, rho), atol=1e-8)


def test_transfer_composition_order():
    t = superoperator_of(parse_program("q *= H; q *= X"), Q1)
    th = superoperator_of(parse_program("q *= H"), Q1)
    tx = superoperator_of(parse_program("q *= X"), Q1)
    assert np.allclose(t, tx @ th)


# ---------------------------------------------------------------------------
# adjoint channel


def test_adjoint_of_unitary_conjugates_backwards():
    q = np.diag([1.0, 0.0]).astype(complex)
    h = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
    got = adjoint_apply(parse_program("q *= H"), Q1, q)
    assert np.allclose(got, h.conj().T @ q @ h)


def test_adjoint_of_init_averages_over_basis():
    q = np.array([[0.7, 0.1], [0.1, 0.2]], dtype=complex)
    got = adjoint_apply(parse_program("q := |0>"), Q1, q)
    # sum_x |x><0| Q |0><x| = Q[0,0] * I
    assert np.allclose(got, q[0, 0] * np.eye(2))


def test_adjoint_is_hilbert_schmidt_dual():
    rng = np.random.default_rng(22)
    reg = genprog.qubit_registry(("q", "r"))
    for _ in range(30):
        prog = genprog.random_program(rng, reg, depth=3, allow_sugar=True)
        rho = genprog.random_density(rng, 4)
        q = genprog.random_predicate(rng, 4)
        lhs = np.trace(q @ apply_program(prog, reg, rho)).real
        rhs = np.trace(adjoint_apply(prog, reg, q) @ rho).real
        assert abs(lhs - rhs) < 1e-10


def test_adjoint_matches_transfer_adjoint():
    rng = np.random.default_rng(23)
    reg = genprog.qubit_registry(("q",))
    for _ in range(20):
        prog = genprog.random_program(rng, reg, depth=3)
        t = superoperator_of(prog, reg)
        q = genprog.random_predicate(rng, 2)
        structural = adjoint_apply(prog, reg, q)
        via_transfer = unvec(dagger(t) @ vec(q))
        assert np.allclose(structural, via_transfer, atol=1e-8)


def test_adjoint_of_identity_bounded_by_identity():
    # sub-unital: loop programs may lose mass, never gain it
    rng = np.random.default_rng(24)
    reg = genprog.qubit_registry(("q", "r"))
    for _ in range(25):
        prog = genprog.random_program(rng, reg, depth=3)
        wp1 = adjoint_apply(prog, reg, np.eye(4, dtype=complex))
        vals = np.linalg.eigvalsh((wp1 + wp1.conj().T) / 2)
        assert vals.max() <= 1 + 1e-8


# ---------------------------------------------------------------------------
# algebraic properties


def test_apply_is_linear():
    rng = np.random.default_rng(25)
    prog = parse_program("q *= H; case std[q] { 0: skip; 1: q *= X }")
    a = genprog.random_density(rng, 2)
    b = genprog.random_density(rng, 2)
    mix = 0.3 * a + 0.7 * b
    got = apply_program(prog, Q1, mix)
    want = 0.3 * apply_program(prog, Q1, a) + 0.7 * apply_program(prog, Q1, b)
    assert np.allclose(got, want, atol=1e-12)


def test_loop_free_programs_preserve_trace():
    rng = np.random.default_rng(26)
    reg = genprog.qubit_registry(("q", "r"))
    for _ in range(30):
        prog = genprog.random_program(rng, reg, depth=3, allow_while=False, allow_sugar=True)
        rho = genprog.random_density(rng, 4)
        out = apply_program(prog, reg, rho)
        assert np.trace(out).real == pytest.approx(1.0, abs=1e-10)


def test_trace_never_increases():
    rng = np.random.default_rng(27)
    reg = genprog.qubit_registry(("q", "r"))
    for _ in range(30):
        prog = genprog.random_program(rng, reg, depth=3)
        rho = genprog.random_density(rng, 4)
        out = apply_program(prog, reg, rho)
        assert np.trace(out).real <= 1 + 1e-9


def test_while_recurrence_unrolls_once():
    # running the loop equals: exit branch + loop body then the whole loop again
    from qbc.qlang import ast as A

    rng = np.random.default_rng(28)
    reg = genprog.qubit_registry(("q", "r"))
    b0 = np.kron(np.diag([1.0, 0.0]), np.eye(2))
    b1 = np.kron(np.diag([0.0, 1.0]), np.eye(2))
    for _ in range(10):
        body = genprog.terminating_while_body(rng, "q", reg)
        loop = A.While(("q",), None, body)
        rho = genprog.random_density(rng, 4)
        lhs = apply_program(loop, reg, rho)
        inner = apply_program(body, reg, b1 @ rho @ b1)
        rhs = b0 @ rho @ b0 + apply_program(loop, reg, inner)
        assert np.allclose(lhs, rhs, atol=1e-8)


def test_measurement_must_sum_to_identity():
    with pytest.raises(SemanticsError, match="identity"):
        run("case (1: proj(ket(1)); 0: 0.5*proj(ket(0))) [q] { 1: skip; 0: skip }", KET0)


def test_measurement_effects_must_be_psd():
    with pytest.raises(SemanticsError, match="PSD"):
        run("case (1: H; 0: I - H) [q] { 1: skip; 0: skip }", KET0)


def test_guard_must_stay_under_identity():
    with pytest.raises(SemanticsError, match="identity|PSD"):
        run("while 2*proj(ket(1)) [q] { skip }", KET0)
