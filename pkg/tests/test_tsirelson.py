from __future__ import annotations

from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from banachforge.core import CapError, Coeffs, OrderingError, SpecError, lp
from banachforge.families import FamilySpec
from banachforge.spaces import parse_space
from banachforge.tsirelson import (
    MixedParams, TsirelsonSpec, aux_bound, check_aux_estimate, check_subsequential_domination, is_compliant,
    ladder_cap, norm_mixed, norm_tsirelson,
)

SPEC = TsirelsonSpec("schreier", Fraction(1, 2))
TOY = MixedParams((4, 16), (16, 64))
rationals = st.fractions(min_value=-3, max_value=3, max_denominator=3)
sparse7 = st.dictionaries(st.integers(1, 10), rationals, max_size=7)


def test_examples():
    assert norm_tsirelson(SPEC, Coeffs({1: 1})) == 1
    assert norm_tsirelson(SPEC, Coeffs({2: 1, 3: 1})) == 1
    assert norm_tsirelson(SPEC, Coeffs({2: 1, 3: 1, 4: 1, 5: 1})) == Fraction(3, 2)


def test_frozen_oracle_values():
    # values from tests/oracles.tsirelson_brute
    assert norm_tsirelson(SPEC, Coeffs({i: 1 for i in range(1, 8)})) == 2
    assert norm_tsirelson(SPEC, Coeffs({i: 1 for i in range(3, 10)})) == Fraction(5, 2)
    assert norm_tsirelson(SPEC, Coeffs({2: 3, 4: -1, 5: Fraction(1, 2), 9: 2})) == 3


@settings(max_examples=60, deadline=None)
@given(sparse7)
def test_recursion_equals_brute_force(a):
    assert norm_tsirelson(SPEC, Coeffs(a)) == oracles.tsirelson_brute(a)


@settings(max_examples=80, deadline=None)
@given(sparse7, st.integers(1, 10), st.integers(1, 10))
def test_sup_l1_sandwich_and_restriction(a, lo, hi):
    x = Coeffs(a)
    v = norm_tsirelson(SPEC, x)
    vals = [abs(t) for _, t in x.items()]
    assert max(vals, default=0) <= v <= sum(vals, Fraction(0))
    sub = Coeffs({i: t for i, t in x.items() if lo <= i <= hi})
    assert norm_tsirelson(SPEC, sub) <= v


def test_spec_validation():
    with pytest.raises(SpecError):
        TsirelsonSpec("schreier", 1)
    with pytest.raises(SpecError):
        TsirelsonSpec(FamilySpec("explicit", sets=[[1, 2]]), Fraction(1, 2))
    with pytest.raises(CapError):
        norm_tsirelson(SPEC, Coeffs({i: 1 for i in range(1, 18)}))


def test_mixed_examples():
    assert norm_mixed(TOY, Coeffs({3: 1})) == 1
    assert norm_mixed(TOY, Coeffs({1: 1, 2: 1})) == 1
    # frozen from tests/oracles.mixed_brute
    assert norm_mixed(TOY, Coeffs({i: 1 for i in range(1, 6)})) == Fraction(5, 4)
    assert norm_mixed(TOY, Coeffs({1: 4, 3: 1, 4: 1, 6: 1})) == 4


@settings(max_examples=40, deadline=None)
@given(st.dictionaries(st.integers(1, 8), rationals, max_size=5))
def test_mixed_equals_brute_force(a):
    ref = oracles.mixed_brute(a, (4, 16, 64, 256), (64, 256, 1024, 4096), (1, 2, 3, 4))
    assert norm_mixed(TOY, Coeffs(a)) == ref


@settings(max_examples=60, deadline=None)
@given(st.dictionaries(st.integers(1, 16), rationals, max_size=8))
def test_ladder_truncation_is_exact(a):
    x = Coeffs(a)
    assert norm_mixed(TOY, x) == norm_mixed(TOY, x, cap_offset=3)


@settings(max_examples=60, deadline=None)
@given(st.dictionaries(st.integers(1, 12), rationals, max_size=6), st.integers(1, 3))
def test_weight_filter_below_full_norm(a, h):
    x = Coeffs(a)
    assert norm_mixed(TOY, x, weight_filter=h) <= norm_mixed(TOY, x)
    assert norm_mixed(TOY.without(1), x) <= norm_mixed(TOY, x)


def test_ladder_cap():
    assert ladder_cap(TOY, (Fraction(1),)) == 0
    assert ladder_cap(TOY, (Fraction(1),) * 4) == 1


def test_compliance_flag():
    assert not TOY.compliant
    assert is_compliant((4,), (16,))
    assert not is_compliant((4, 8), (16, 64))


def test_aux_bounds():
    assert aux_bound(TOY, 2, 1) == Fraction(2, 4 * 16)
    assert aux_bound(TOY, 1, 1) == Fraction(1, 4)
    assert aux_bound(TOY, 2, 1, omit_j0=True) == Fraction(2, 4 * 16 * 16)


def test_aux_estimate_j0_1():
    # n_1 = 16; values frozen from the exhaustive weight-constrained norm
    rows = {h: check_aux_estimate(TOY, 1, h) for h in (1, 2, 3)}
    assert {h: r[0] for h, r in rows.items()} == {1: Fraction(1, 4), 2: Fraction(1, 16), 3: Fraction(1, 32)}
    assert all(r[2] for r in rows.values())
    with pytest.raises(SpecError):
        check_aux_estimate(TOY, 1, 1, omit_j0=True)


def test_aux_degenerate_single_coordinate():
    P = MixedParams((4, 16), (1, 64))
    value, bound, ok = check_aux_estimate(P, 1, 1)
    assert value <= Fraction(1, 4) and ok


def test_subsequential_domination():
    X = lp(2)
    lhs, rhs, ok = check_subsequential_domination(X, [Coeffs({2: 1})], SPEC, 15)
    assert lhs == 1 and ok
    blocks = [Coeffs({1: Fraction(3, 5), 2: Fraction(4, 5)}), Coeffs({4: 1}), Coeffs({6: Fraction(3, 5), 8: Fraction(4, 5)})]
    assert check_subsequential_domination(X, blocks, SPEC, 15)[2]
    with pytest.raises(OrderingError):
        check_subsequential_domination(X, [Coeffs({3: 1}), Coeffs({2: 1})], SPEC, 15)


def test_space_strings():
    assert parse_space("tsirelson(schreier,1/2)")(Coeffs({2: 1, 3: 1})) == 1
    assert parse_space("mixed(m=4,16;n=16,64;l=4n)")(Coeffs({1: 1, 2: 1})) == 1
