from __future__ import annotations

import itertools
from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from banachforge.core import Coeffs, SpecError
from banachforge.diagalg import (
    DiagOp, IdealSpec, add, all_ideal_specs, apply, check_adt_correspondence, check_ideal_lattice,
    diagonal_norm_bracket, ideal_membership, multiply, op_grid, sp_compact_defect,
)
from banachforge.spaces import parse_space

import oracles

small = st.fractions(min_value=-3, max_value=3, max_denominator=4)


@st.composite
def ops(draw, max_index=5):
    a0 = draw(small)
    lam = draw(st.dictionaries(st.integers(1, max_index), small, max_size=max_index))
    return DiagOp(a0, Coeffs(lam))


@st.composite
def vectors(draw, max_index=6):
    return Coeffs(draw(st.dictionaries(st.integers(1, max_index), small, max_size=max_index)))


# algebra


def test_identity_applies_as_identity():
    x = Coeffs({1: 3, 4: F(1, 2)})
    assert apply(DiagOp.identity(), x) == x


def test_projection_applies_coordinatewise():
    assert apply(DiagOp.projection(1), Coeffs.from_list([3, 5])) == Coeffs({1: 3})


def test_unit_law_and_idempotent():
    T = DiagOp(F(2), Coeffs({1: -1, 3: F(1, 2)}))
    assert multiply(T, DiagOp.identity()) == T
    assert multiply(DiagOp.identity(), T) == T
    P = DiagOp.projection(2)
    assert multiply(P, P) == P


def test_basis_mismatch():
    S = DiagOp(F(1), Coeffs({}), parse_space("lp:2"))
    T = DiagOp(F(1), Coeffs({}), parse_space("linf"))
    with pytest.raises(SpecError):
        multiply(S, T)
    with pytest.raises(SpecError):
        add(S, T)


@settings(max_examples=100, deadline=None)
@given(ops(), ops())
def test_multiply_commutes(S, T):
    assert multiply(S, T) == multiply(T, S)


@settings(max_examples=100, deadline=None)
@given(ops(), ops(), vectors())
def test_apply_of_product_is_composition(S, T, x):
    assert apply(S, apply(T, x)) == apply(multiply(S, T), x)


@settings(max_examples=100, deadline=None)
@given(ops(), ops(), st.integers(1, 8))
def test_product_diagonal_is_pointwise(S, T, i):
    assert multiply(S, T).diagonal(i) == S.diagonal(i) * T.diagonal(i)


def test_json_round_trip():
    T = DiagOp(F(1, 2), Coeffs({2: F(-3, 4)}), parse_space("lp:2"))
    back = DiagOp.from_json(T.to_json())
    assert back == T and back.basis.name == T.basis.name


# scalar-plus-compact defect


@pytest.mark.parametrize("m, n", [(1, 1), (1, 4), (3, 7)])
def test_defect_of_constant_diagonal(m, n):
    T = DiagOp(F(2), Coeffs({}), parse_space("c0"))
    assert sp_compact_defect(T, m, n)[:2] == (0, 0)


def test_defect_on_c0():
    T = DiagOp(F(0), Coeffs({1: 1}), parse_space("c0"))
    assert sp_compact_defect(T, 1, 3) == (1, 1, True)
    for m in range(2, 6):
        assert sp_compact_defect(T, m, m + 3) == (0, 0, True)


def test_defect_bracket_on_conditional_basis():
    X = parse_space("summing-c")
    T = DiagOp(F(0), Coeffs({1: 1, 3: 2}))
    lo, hi, exact = sp_compact_defect(T, 1, 4, X)
    assert not exact and 0 < lo <= hi


def test_defect_errors():
    with pytest.raises(SpecError):
        sp_compact_defect(DiagOp.identity(parse_space("c0")), 3, 2)
    with pytest.raises(SpecError):
        sp_compact_defect(DiagOp.identity(), 1, 2)


def test_bracket_on_unconditional_basis_is_sup():
    assert diagonal_norm_bracket(parse_space("lp:2"), {1: F(-3), 2: 1}, F(1, 2)) == (3, 3, True)


# ideals


def test_identity_membership():
    for L in all_ideal_specs(range(1, 4)):
        empty = not L.finite and not L.omega
        assert ideal_membership(DiagOp.identity(), L) == empty


def test_rank_one_projection_membership():
    for L in all_ideal_specs(range(1, 4)):
        assert ideal_membership(DiagOp.projection(1), L) == (1 not in L)


def test_full_interval_holds_only_zero():
    L = IdealSpec(frozenset(range(1, 7)), True, 1)
    members = [T for T in op_grid(range(1, 5)) if ideal_membership(T, L)]
    assert members == [DiagOp.zero()]


def test_membership_matches_oracle():
    grid = op_grid(range(1, 4))
    for L in all_ideal_specs(range(1, 4)):
        for T in grid:
            want = oracles.ideal_member(T.a0, dict(T.lambdas.items()), L.finite, L.omega)
            assert ideal_membership(T, L) == want


def test_ideal_spec_parse():
    assert IdealSpec.parse("") == IdealSpec()
    assert IdealSpec.parse("1,3,omega") == IdealSpec(frozenset({1, 3}), True)
    L = IdealSpec.parse("2,5..")
    assert L.omega and 7 in L and 4 not in L and 2 in L and "omega" in L
    with pytest.raises(SpecError):
        IdealSpec(frozenset({0}))
    with pytest.raises(SpecError):
        IdealSpec(frozenset(), False, 3)


def test_tail_membership():
    L = IdealSpec.parse("4..")
    assert ideal_membership(DiagOp(F(0), Coeffs({1: 5})), L)
    assert not ideal_membership(DiagOp(F(0), Coeffs({6: 1})), L)


def test_subset_order():
    A, B = IdealSpec.parse("1"), IdealSpec.parse("1,2,omega")
    assert A.subset_of(B) and not B.subset_of(A)
    assert IdealSpec.parse("3..").subset_of(IdealSpec.parse("2.."))


def test_ideal_lattice_exhaustive():
    rep = check_ideal_lattice()
    assert rep["pass"], rep["failures"]
    assert rep["specs"] == 64 and rep["pairs"] == 64 * 64


@settings(max_examples=60, deadline=None)
@given(ops(), ops(), st.sets(st.integers(1, 5)), st.booleans(), small)
def test_ideal_closed_under_products_and_scaling(S, T, fin, omega, c):
    L = IdealSpec(frozenset(fin), omega)
    if ideal_membership(T, L):
        assert ideal_membership(multiply(S, T), L)
        assert ideal_membership(T.scale(c), L)


@settings(max_examples=60, deadline=None)
@given(ops(), ops(), st.sets(st.integers(1, 5)), st.booleans())
def test_ideal_closed_under_sums(S, T, fin, omega):
    L = IdealSpec(frozenset(fin), omega)
    if ideal_membership(S, L) and ideal_membership(T, L):
        assert ideal_membership(add(S, T), L)


def test_ideal_order_is_antitone():
    specs = all_ideal_specs(range(1, 4))
    grid = op_grid(range(1, 4))
    members = {L: {i for i, T in enumerate(grid) if ideal_membership(T, L)} for L in specs}
    for L, L2 in itertools.product(specs, repeat=2):
        assert (members[L] <= members[L2]) == L2.subset_of(L)


# operators on J(X) against functionals on J(X)


def test_adt_identity():
    rep = check_adt_correspondence("lp:2", DiagOp.identity())
    assert (rep["op_lower"], rep["op_upper"]) == (1, 1)
    assert (rep["dual_lower"], rep["dual_upper"]) == (1, 1)


def test_adt_zero():
    rep = check_adt_correspondence("lp:2", DiagOp.zero())
    assert rep["op_upper"] == rep["dual_upper"] == 0


def test_adt_rank_one_within_two():
    rep = check_adt_correspondence("lp:2", DiagOp.projection(1))
    assert rep["within_factor_2"] and rep["op_consistent"] and rep["dual_consistent"]
    assert F(1, 2) <= rep["op_lower"] / rep["dual_upper"] <= 2


def test_adt_needs_unconditional_basis():
    with pytest.raises(SpecError):
        check_adt_correspondence("summing-c", DiagOp.identity())


@settings(max_examples=15, deadline=None)
@given(ops(max_index=3))
def test_adt_brackets_consistent(op):
    rep = check_adt_correspondence("lp:1", op, budget=40)
    assert rep["op_consistent"] and rep["dual_consistent"]
