"""Correctness judgments: total/partial triples, witnesses, and the
projection fast path versus the general operator route."""

import numpy as np
import pytest

import genprog
from qbc.hoare import Verdict, check_partial, check_total, expectation, wp
from qbc.matrixcore import VariableRegistry, loewner_leq
from qbc.qlang.parse import parse_expr, parse_program
from qbc.qlang.exprs import eval_predicate
from qbc.semantics import adjoint_apply, apply_program

Q1 = VariableRegistry((("q", 2),))
Q2 = VariableRegistry((("q", 2), ("r", 2)))

KET0 = np.diag([1.0, 0.0]).astype(complex)
KET1 = np.diag([0.0, 1.0]).astype(complex)
PLUS = np.full((2, 2), 0.5, dtype=complex)
I2 = np.eye(2, dtype=complex)


def pred(text, reg=Q1, **binding):
    return eval_predicate(parse_expr(text), reg, binding)


# ---------------------------------------------------------------------------
# basic verdicts


def test_hadamard_total_triple_holds():
    v = check_total(parse_program("q *= H"), Q1, KET0, PLUS)
    assert v.status == "holds" and v.holds


def test_hadamard_wrong_post_fails_with_witness():
    v = check_total(parse_program("q *= H"), Q1, KET0, KET1)
    assert v.status == "fails" and not v.holds
    assert v.witness is not None
    assert np.linalg.norm(v.witness) == pytest.approx(1.0)
    # the witness exhibits the violation: wp expectation below pre expectation
    m = adjoint_apply(parse_program("q *= H"), Q1, KET1)
    w = v.witness
    assert (w.conj() @ (m - KET0) @ w).real < 0


def test_toss_until_zero_totally_correct():
    prog = parse_program("q := |0>; q *= H; while [q] { q *= H }")
    v = check_total(prog, Q1, I2, KET0)
    assert v.status == "holds"
    assert check_partial(prog, Q1, I2, KET0).status == "holds"


def test_nonterminating_loop_partial_but_not_total():
    prog = parse_program("while [q] { skip }")
    zero = np.zeros((2, 2), dtype=complex)
    # never terminates from |1>: any total claim from |1><1| fails...
    assert check_total(prog, Q1, KET1, I2).status == "fails"
    # ...but partial correctness is vacuous there, even for post = 0
    assert check_partial(prog, Q1, KET1, zero).status == "holds"


def test_slow_loop_yields_inconclusive_total():
    prog = parse_program("while ((1 - 0.0001)*proj(ket(1))) [q] { skip }")
    v = check_total(prog, Q1, KET1, KET1)
    assert v.status == "inconclusive"
    assert "converge" in v.detail


def test_partial_weaker_than_total():
    rng = np.random.default_rng(31)
    reg = genprog.qubit_registry(("q", "r"))
    for _ in range(25):
        prog = genprog.random_program(rng, reg, depth=3)
        post = genprog.random_predicate(rng, 4)
        pre = 0.9 * adjoint_apply(prog, reg, post)
        vt = check_total(prog, reg, pre, post)
        assert vt.status == "holds"
        assert check_partial(prog, reg, pre, post).status == "holds"


def test_wp_monotone_in_postcondition():
    rng = np.random.default_rng(32)
    reg = genprog.qubit_registry(("q", "r"))
    for _ in range(20):
        prog = genprog.random_program(rng, reg, depth=3)
        q1 = genprog.random_predicate(rng, 4)
        q2 = q1 + (np.eye(4) - q1) * float(rng.uniform(0, 1))
        assert loewner_leq(q1, q2)
        assert loewner_leq(wp(prog, reg, q1, "total"), wp(prog, reg, q2, "total"))


def test_wp_partial_definition():
    prog = parse_program("q *= H")
    q = pred("proj(ket(0))")
    got = wp(prog, Q1, q, "partial")
    want = I2 - adjoint_apply(prog, Q1, I2 - q)
    assert np.allclose(got, want)


def test_expectation():
    assert expectation(KET0, PLUS) == pytest.approx(0.5)
    assert expectation(I2, PLUS) == pytest.approx(1.0)


# ---------------------------------------------------------------------------
# routes: general operator route vs projection basis route vs transfer


def test_methods_agree_on_projection_preconditions():
    rng = np.random.default_rng(33)
    reg = genprog.qubit_registry(("q", "r"))
    for _ in range(40):
        prog = genprog.random_program(rng, reg, depth=3)
        pre = genprog.random_projection(rng, 4)
        post = genprog.random_predicate(rng, 4)
        for checker in (check_total, check_partial):
            va = checker(prog, reg, pre, post, method="adjoint")
            vb = checker(prog, reg, pre, post, method="basis")
            vt = checker(prog, reg, pre, post, method="transfer")
            assert va.status == vb.status == vt.status, (va.status, vb.status, vt.status)


def test_basis_route_needs_projection():
    with pytest.raises(ValueError, match="projection"):
        check_total(parse_program("skip"), Q1, 0.5 * I2, I2, method="basis")


def test_pure_state_fast_path_matches_expectation_threshold():
    rng = np.random.default_rng(34)
    prog = parse_program("q *= H; case std[q] { 0: skip; 1: q *= X }")
    for _ in range(20):
        psi = rng.normal(size=2) + 1j * rng.normal(size=2)
        psi /= np.linalg.norm(psi)
        pre = np.outer(psi, psi.conj())
        post = genprog.random_predicate(rng, 2)
        v = check_total(prog, Q1, pre, post, method="basis")
        p = expectation(post, apply_program(prog, Q1, pre))
        assert (v.status == "holds") == (p >= 1 - 1e-9)


def test_verdict_margin_sign_convention():
    v = check_total(parse_program("skip"), Q1, 0.5 * I2, I2)
    assert v.status == "holds" and v.margin >= 0.5 - 1e-12
    v = check_total(parse_program("skip"), Q1, I2, 0.5 * I2)
    assert v.status == "fails" and v.margin == pytest.approx(-0.5)


def test_invalid_predicate_rejected():
    with pytest.raises(ValueError, match="predicate"):
        check_total(parse_program("skip"), Q1, 2 * I2, I2)
    with pytest.raises(ValueError, match="predicate"):
        check_total(parse_program("skip"), Q1, I2, -I2)


def test_binding_flows_through():
    prog = parse_program("q *= X")
    pre = pred("proj(ket(x))", x=0)
    post = pred("proj(ket(x))", x=1)
    assert check_total(prog, Q1, pre, post).status == "holds"
