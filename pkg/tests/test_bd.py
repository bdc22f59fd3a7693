from __future__ import annotations

import json
import random
from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from banachforge.bd import (
    BDModel, BDParams, FunctionalHandle, YVec, build_model, calkin_witness, check_dependent, check_exact_pair,
    check_ris, column_vector, construct_gamma, dependent_toy, eval_c, eval_d, eval_e, evaluation_analysis,
    exact_pair_toy, extend, build_exact_pair, lift, literal_c, literal_coordinate, literal_d, lower_bound_witness,
    norm_Y, norm_Z, projection, random_model, random_vector, ran_bd, reconstruct, restrict_stage,
    ris_average_bound, ris_foreign_weight_bound, staggered_ris, supp_bd, toy_params,
)
from banachforge.bd.estimates import TOY_LABEL
from banachforge.core import CapError, Coeffs, ConstructionError, ModelError, OrderingError, ParseError, SpecError

import oracles


# params


def test_toy_params_constant():
    P = toy_params()
    assert P.A0 == 1
    assert P.C0 == oracles.C0(1, 4) == F(5, 3)
    assert P.sandwich_constant() == 2 * P.C0 ** 3 - P.C0 ** 2


def test_toy_ladder_doubles():
    P = toy_params()
    assert [P.m_j(j) for j in range(1, 5)] == [4, 16, 32, 64]
    assert [P.n_j(j) for j in range(1, 5)] == [16, 64, 128, 256]
    assert P.weight(10) == F(1, 4096)


def test_compliant_mode_rejects_toy_ladder():
    with pytest.raises(SpecError):
        BDParams((4, 16), (16, 64), mode="compliant")


def test_compliant_ladder_grows_by_squares_and_caps():
    P = BDParams((4,), (16,), mode="compliant")
    assert P.m_j(2) == 16
    assert P.n_j(2) == (16 * 16) ** 4
    with pytest.raises(CapError):
        P.m_j(50)


def test_params_need_beta0_below_inverse_A0():
    with pytest.raises(SpecError):
        BDParams((1, 2), (4, 8))


def test_params_json_round_trip():
    P = toy_params(level_cap=9)
    Q = BDParams.from_json(json.loads(json.dumps(P.to_json())))
    assert (Q.m, Q.n, Q.mode, Q.level_cap, Q.C0) == (P.m, P.n, P.mode, P.level_cap, P.C0)


# structure


def test_empty_model_has_only_base():
    model = build_model(toy_params())
    assert len(model.nodes) == 1
    assert [g.id for g in model.delta(1)] == [0]
    assert model.top_rank == 1


def _hand_model():
    """Even0 at 2, Even1 at 4, Even0 (index 10) at 10, Odd0 at 11, Even0 (index 20) at 20, Odd1 at 21."""
    model = build_model(toy_params(level_cap=22))
    model.add("Even0", 2, 1, b=FunctionalHandle.B({0: F(1, 2)}))
    model.add("Even1", 4, 1, xi=1, b=FunctionalHandle.K(3, {1: 1}))
    model.add("Even0", 10, 5, b=FunctionalHandle.zero())
    model.add("Odd0", 11, 1, eta=3)
    model.add("Even0", 20, 10, b=FunctionalHandle.zero())
    model.add("Odd1", 21, 1, xi=4, eta=5)
    return model


def test_node_metadata():
    model = _hand_model()
    kinds = [(g.kind, g.rank, g.weight_index, g.age, g.sigma) for g in model.nodes]
    assert kinds == [
        ("Base", 1, None, None, 1), ("Even0", 2, 2, 1, 2), ("Even1", 4, 2, 2, 3), ("Even0", 10, 10, 1, 4),
        ("Odd0", 11, 1, 1, 5), ("Even0", 20, 20, 1, 6), ("Odd1", 21, 1, 2, 7),
    ]


@pytest.mark.parametrize("args, kw", [
    (("Even0", 1, 1), {"b": FunctionalHandle.zero()}),                # rank < 2
    (("Even0", 4, 3), {"b": FunctionalHandle.zero()}),                # 2j > rank
    (("Even0", 2, 1), {}),                                            # missing b*
    (("Even0", 2, 1), {"b": FunctionalHandle.B({0: 2})}),             # Σ|coeff| > 1
    (("Even0", 2, 1), {"b": FunctionalHandle.B({5: F(1, 2)})}),       # unknown node
    (("Even0", 2, 1), {"b": FunctionalHandle.K(2, {1: 1})}),          # component beyond n
    (("Even0", 2, 1), {"b": FunctionalHandle.Gutc(3, {1: 1})}),       # column outside [1, 2^n]
    (("Even0", 30, 1), {"b": FunctionalHandle.zero()}),               # over the level cap
    (("Odd0", 3, 1), {"eta": 0}),                                     # η is not Even of index 4i-2
    (("Bogus", 3, 1), {}),
])
def test_add_rejections(args, kw):
    model = build_model(toy_params())
    with pytest.raises(ConstructionError):
        model.add(*args, **kw)


def test_rank_cannot_decrease():
    model = build_model(toy_params())
    model.add("Even0", 3, 1, b=FunctionalHandle.zero())
    with pytest.raises(ConstructionError):
        model.add("Even0", 2, 1, b=FunctionalHandle.zero())


def test_odd0_needs_heavy_eta():
    model = build_model(toy_params(level_cap=12))
    model.add("Even0", 2, 1, b=FunctionalHandle.zero())     # index 2: m_2 = 16 <= n_1^2
    with pytest.raises(ConstructionError):
        model.add("Odd0", 3, 1, eta=1)


def test_odd1_checks_eta_weight():
    model = _hand_model()
    with pytest.raises(ConstructionError):
        model.add("Odd1", 22, 1, xi=4, eta=3)                 # index 10 != 4σ(ξ) = 20


def test_even1_checks_xi_weight():
    model = _hand_model()
    with pytest.raises(ConstructionError):
        model.add("Even1", 22, 5, xi=1, b=FunctionalHandle.zero())


def test_build_model_from_requests_and_json():
    reqs = [
        {"kind": "Even1", "rank": 3, "j": 1, "xi": "a", "b": {"pool": "B", "coeffs": {}}},
        {"kind": "Even0", "rank": 2, "j": 1, "b": {"pool": "B", "coeffs": {"0": "1/2"}}, "label": "a"},
    ]
    model = build_model(toy_params(), reqs)
    assert [g.kind for g in model.nodes] == ["Base", "Even0", "Even1"]
    assert model.node("a").id == 1
    back = BDModel.from_json(json.loads(model.dumps()))
    assert back.to_json() == model.to_json()


def test_build_model_rejects_bad_requests():
    with pytest.raises(ParseError):
        build_model(toy_params(), [{"rank": 2}])
    with pytest.raises(ParseError):
        build_model(toy_params(), [{"kind": "Even0", "rank": 2, "j": 1, "b": {"pool": "Q"}}])


# evaluation, hand values


def test_even0_value():
    model = _hand_model()
    u = YVec(1, {1: {1: F(1)}}, {0: F(3)})
    assert eval_e(model, 1, u) == F(3, 32)          # (1/16)(1/2)·3
    assert literal_coordinate(model, 1, u) == F(3, 32)


def test_even1_value_and_split():
    model = _hand_model()
    u = YVec(3, {3: {1: F(2)}}, {1: F(5)})
    assert eval_e(model, 2, u) == F(41, 8)          # 5 + (1/16)·2
    v = YVec(4, u.x, {1: F(5), 2: F(7)})
    assert eval_c(model, 2, v) == F(41, 8)
    assert eval_d(model, 2, v) == F(15, 8)
    assert eval_e(model, 2, v) == 7


def test_odd_values():
    model = _hand_model()
    u = YVec(10, {}, {3: F(8)})
    assert eval_e(model, 4, u) == 2                  # (1/4)·8
    v = YVec(20, {}, {4: F(1), 5: F(4)})
    assert eval_e(model, 6, v) == 2                  # 1 + (1/4)(4 - 0)
    assert literal_coordinate(model, 6, v) == 2


def test_base_node_has_no_c_part():
    model = _hand_model()
    u = YVec(2, {}, {0: F(3), 1: F(1)})
    assert eval_c(model, 0, u) == 0
    assert eval_d(model, 0, u) == eval_e(model, 0, u) == 3


def test_vector_validation():
    model = _hand_model()
    with pytest.raises(ModelError):
        eval_e(model, 0, YVec(2, {}, {2: 1}))        # node of rank 4 at stage 2
    with pytest.raises(ModelError):
        YVec(2, {3: {1: 1}})
    with pytest.raises(CapError):
        eval_e(model, 0, YVec(30))


def test_extend_identity_and_errors():
    model = _hand_model()
    u = YVec(3, {3: {1: F(2)}}, {1: F(5)})
    assert extend(model, 3, 3, u) == u
    with pytest.raises(ModelError):
        extend(model, 2, 4, u)
    with pytest.raises(ModelError):
        extend(model, 3, 2, u)
    with pytest.raises(SpecError):
        extend(model, 3, 4, u, method="magic")


def test_norm_zero_vector():
    model = _hand_model()
    assert norm_Y(model, YVec(5)) == 0
    assert supp_bd(model, YVec(5)) == []
    assert ran_bd(model, YVec(5)) is None


def test_column_vector_sandwich():
    model = build_model(toy_params())
    u = column_vector(model, {1: F(1, 2), 2: F(1, 2), 3: F(1, 2)}, 3)
    assert u.stage == 3
    nz, ny = norm_Z(model, u), norm_Y(model, u)
    assert nz <= ny <= model.params.C0 * nz


def test_supp_bd_sees_new_coordinates():
    model = _hand_model()
    u = YVec(4, {}, {2: F(1)})                       # d at node 2 is nonzero, nothing else
    assert supp_bd(model, u) == [4]
    assert ran_bd(model, column_vector(model, {3: 1}, 3)) == (3, 3)


def test_yvec_json_round_trip():
    u = YVec(4, {3: {1: F(2)}}, {1: F(5), 2: F(-1, 3)})
    assert YVec.from_json(json.loads(json.dumps(u.to_json()))) == u
    with pytest.raises(ParseError):
        YVec.from_json({"x": {}})


@pytest.mark.parametrize("h", [
    FunctionalHandle.zero(), FunctionalHandle.B({0: F(1, 2), 3: F(-1, 4)}),
    FunctionalHandle.Gutc(4, {1: F(1, 2), 2: F(1, 2)}), FunctionalHandle.K(3, {1: 1}),
])
def test_handle_json_round_trip(h):
    assert FunctionalHandle.from_json(json.loads(json.dumps(h.to_json()))) == h


def test_zero_handle_json():
    assert FunctionalHandle.zero().to_json() == {"pool": "B", "coeffs": {}}
    with pytest.raises(ParseError):
        FunctionalHandle.from_json({"pool": "zero"})


# structural laws on random models

MODEL = random_model(count=60, seed=3, max_rank=10)
seeds = st.integers(min_value=0, max_value=10 ** 6)


def _vec(seed, mode="exact", stage=None):
    return random_vector(MODEL, random.Random(seed), stage=stage, mode=mode)


def test_random_model_is_rich():
    kinds = {g.kind for g in MODEL.nodes}
    assert {"Even0", "Even1"} <= kinds
    assert len(MODEL.nodes) > 40


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_fast_matches_literal(seed):
    u = _vec(seed)
    top = MODEL.params.level_cap
    assert extend(MODEL, u.stage, top, u) == extend(MODEL, u.stage, top, u, method="literal")


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_composition_law(seed):
    rng = random.Random(seed)
    u = _vec(seed)
    l = u.stage
    m = rng.randint(l, MODEL.params.level_cap)
    n = rng.randint(m, MODEL.params.level_cap)
    assert extend(MODEL, m, n, extend(MODEL, l, m, u)) == extend(MODEL, l, n, u)


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_projection_algebra(seed):
    rng = random.Random(seed)
    u = _vec(seed, stage=MODEL.params.level_cap)
    a, b = rng.randint(1, u.stage), rng.randint(1, u.stage)
    lhs = projection(MODEL, a, projection(MODEL, b, u))
    assert lhs == projection(MODEL, min(a, b), u)
    assert projection(MODEL, a, u, method="literal") == projection(MODEL, a, u)


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_d_plus_c_and_literal_routes(seed):
    u = _vec(seed)
    for g in MODEL.nodes[1:]:
        e, c, d = eval_e(MODEL, g, u), eval_c(MODEL, g, u), eval_d(MODEL, g, u)
        if g.rank <= u.stage:
            assert e == d + c
        assert d == literal_d(MODEL, g, u)
        assert c == literal_c(MODEL, g, u)
        assert e == literal_coordinate(MODEL, g, u)


@settings(max_examples=40, deadline=None)
@given(seeds, st.sampled_from(["exact", "float"]))
def test_extension_bounded_by_C0(seed, mode):
    u = _vec(seed, mode)
    nz, ny = norm_Z(MODEL, u), norm_Y(MODEL, u)
    assert nz <= ny + 1e-12
    assert ny <= MODEL.params.C0 * nz + 1e-9


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_lift_then_restrict(seed):
    u = _vec(seed)
    up = lift(MODEL, u, MODEL.params.level_cap)
    assert restrict_stage(MODEL, up, u.stage) == u


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_reconstruction(seed):
    rng = random.Random(seed)
    u = _vec(seed)
    g = rng.choice(MODEL.nodes[1:])
    e, rec = reconstruct(MODEL, g, u)
    assert e == rec


def test_float_mode_matches_exact():
    for seed in range(20):
        u = _vec(seed)
        v = _vec(seed, "float")
        for g in MODEL.nodes:
            assert abs(eval_e(MODEL, g, v) - float(eval_e(MODEL, g, u))) <= 1e-12


# evaluation analysis and constructive γ


def test_analysis_of_age_one_node():
    model = _hand_model()
    assert evaluation_analysis(model, 1) == [(2, 1, FunctionalHandle.B({0: F(1, 2)}))]
    assert evaluation_analysis(model, 4) == [(11, 4, FunctionalHandle.e(3))]
    with pytest.raises(ModelError):
        evaluation_analysis(model, 0)


def test_analysis_of_chains():
    model = _hand_model()
    assert [(p, xi) for p, xi, _ in evaluation_analysis(model, 2)] == [(2, 1), (4, 2)]
    assert [(p, xi) for p, xi, _ in evaluation_analysis(model, 6)] == [(11, 4), (21, 6)]


@pytest.mark.parametrize("a", [2, 3])
def test_construct_gamma_round_trip(a):
    model = build_model(toy_params(level_cap=12))
    bs = [FunctionalHandle.zero(), FunctionalHandle.K(3, {1: 1}), FunctionalHandle.Gutc(5, {2: F(1, 2)})][:a]
    ps = [2, 4, 7][:a]
    g = construct_gamma(model, 1, list(zip(ps, bs)))
    assert g.weight_index == 2 and g.age == a
    chain = evaluation_analysis(model, g)
    assert [p for p, _, _ in chain] == [p + 1 for p in ps]
    assert [b for _, _, b in chain] == bs


@pytest.mark.parametrize("j, triples", [
    (1, [(2, FunctionalHandle.zero())] * 65),                                       # a > n_2 = 64
    (2, [(3, FunctionalHandle.zero())]),                                            # 2j > p_1
    (1, [(3, FunctionalHandle.zero()), (3, FunctionalHandle.zero())]),              # p not increasing
    (1, [(2, FunctionalHandle.zero()), (12, FunctionalHandle.zero())]),             # p_a + 1 over the cap
    (1, [(2, FunctionalHandle.K(2, {1: 1}))]),                                      # b ∉ A_{p-1}
    (1, []),
])
def test_construct_gamma_rejections(j, triples):
    model = build_model(toy_params(level_cap=12))
    with pytest.raises(ConstructionError):
        construct_gamma(model, j, triples)


# estimates on toy instances


def test_ris_staggered_passes():
    model = build_model(toy_params())
    zs = staggered_ris(model, 4)
    rep = check_ris(model, zs, 1, [1, 2, 4, 6])
    assert rep["pass"] and rep["iv_structural"] and rep["iv_witness"] is None
    assert rep["toy"] and rep["label"] == TOY_LABEL
    assert check_ris(model, zs[:1], 1, [1])["pass"]


def test_ris_shared_column_has_witness():
    model = build_model(toy_params())
    zs = [column_vector(model, {1: 1}, 3), column_vector(model, {2: 1}, 3)]
    rep = check_ris(model, zs, 2, [1, 2])
    assert not rep["pass"]
    w = rep["iv_witness"]
    assert w["i0"] == 3 and w["hits"] == [0, 1]
    assert all(v != 0 for v in w["values"])
    h = FunctionalHandle.Gutc(3, w["a"])
    assert model.pool_violation(h, 3) is None


def test_ris_input_errors():
    model = build_model(toy_params())
    zs = staggered_ris(model, 2)
    with pytest.raises(SpecError):
        check_ris(model, zs, 1, [1])
    with pytest.raises(SpecError):
        check_ris(model, zs, 1, [2, 2])


def test_ris_average_bound():
    model = build_model(toy_params(level_cap=40))
    zs = staggered_ris(model, 16)
    value, bound, ok = ris_average_bound(model, zs, 1)
    assert (value, bound, ok) == (F(1, 16), F(5, 3) * (F(3, 16) + F(4, 4)), True)
    assert ris_average_bound(model, [z.scale(0) for z in zs], 1) == (0, 0, True)
    with pytest.raises(SpecError):
        ris_average_bound(model, zs[:3], 1)


def test_ris_foreign_weight_bound():
    model = build_model(toy_params(level_cap=40))
    zs = staggered_ris(model, 5)
    assert ris_foreign_weight_bound(model, zs, 3, 5, 1) == (F(3, 5), 11 * F(5, 3) / 3, True)


def test_estimates_refuse_compliant_params():
    model = build_model(BDParams((4,), (16,), mode="compliant"))
    with pytest.raises(SpecError):
        ris_average_bound(model, [], 1)


def test_exact_pair_zero_vector():
    model = build_model(toy_params())
    g = model.add("Even0", 2, 1, b=FunctionalHandle.zero())
    rep = check_exact_pair(model, YVec(2), g, 1, 2, 0, 0)
    assert rep["pass"] and rep["norm"] == 0


def test_exact_pair_toy_end_to_end():
    model, zs, bs, qs = exact_pair_toy(1)
    assert len(zs) == model.params.n_j(2)
    z, g, rep = build_exact_pair(model, zs, 1, bs, qs)
    assert rep["pass"]
    assert rep["norm"] == F(16, 64)
    assert rep["e_gamma"] == 0
    assert rep["norm_within_5A0C0C"]


def test_exact_pair_rejects_heavy_coordinate():
    model = build_model(toy_params())
    heavy = model.add("Even0", 2, 1, b=FunctionalHandle.zero())
    target = model.add("Even0", 4, 2, b=FunctionalHandle.zero())
    z = YVec(heavy.rank, {}, {heavy.id: 1})
    rep = check_exact_pair(model, z, target, 1, 4, 0, 0)
    assert not rep["pass"]
    assert any(f["clause"] == "iv" and f["xi"] == heavy.id for f in rep["failures"])


def test_build_exact_pair_needs_annihilation():
    model, zs, bs, qs = exact_pair_toy(1)
    bs = list(bs)
    bs[1] = FunctionalHandle.Gutc(3, {3: 1})           # hits z_2
    with pytest.raises(ConstructionError):
        build_exact_pair(model, zs, 1, bs, qs)


def test_dependent_toy():
    model, zs, comps = dependent_toy(1)
    rep = check_dependent(model, zs, comps, 1, 1, 0)
    assert rep["pass"] and rep["per_vector_ok"] and rep["same_weight_ok"]
    assert rep["average"] == F(1, 16)
    assert rep["average_bound"] == 33 * F(5, 3) / 16
    assert rep["average_ok"]


def test_dependent_detects_bad_windows():
    model, zs, comps = dependent_toy(1)
    rep = check_dependent(model, list(reversed(zs)), comps, 1, 1, 0)
    assert not rep["pass"]
    assert any(f["clause"] == "iii" for f in rep["failures"])


def test_dependent_zero_vectors():
    model, zs, comps = dependent_toy(1)
    rep = check_dependent(model, [z.scale(0) for z in zs], comps, 1, 1, 0)
    assert rep["pass"] and rep["average"] == 0


def test_lower_bound_single_vector():
    model = build_model(toy_params(level_cap=12))
    w = column_vector(model, {3: 1}, 3)
    g, value, bound, ok, rep = lower_bound_witness(model, [w], 1)
    assert ok and rep["consistent"] and rep["chain_estimate_ok"]
    assert value == F(1, 16) and bound == F(1, 48)
    assert g.weight_index == 2


def test_lower_bound_sixteen_blocks():
    model = build_model(toy_params(level_cap=40))
    ws = staggered_ris(model, 16, start=2, step=2)
    g, value, bound, ok, rep = lower_bound_witness(model, ws, 1)
    assert (value, bound, ok) == (1, F(1, 3), True)
    assert rep["consistent"] and rep["skipped"] == []


def test_lower_bound_ordering():
    model = build_model(toy_params(level_cap=12))
    ws = [column_vector(model, {3: 1}, 3), column_vector(model, {2: 1}, 2)]
    with pytest.raises(OrderingError):
        lower_bound_witness(model, ws, 1)


def test_calkin_identity():
    model = build_model(toy_params())
    rep = calkin_witness(model, [1], 1, Coeffs({1: 1}))
    C0 = model.params.C0
    assert rep["lower"] >= 1 / C0
    assert rep["M"] == 1 and rep["upper"] == 2 * C0 ** 2 - C0
    assert (rep["lower"], rep["upper"]) == (F(3, 5), F(35, 9))
    assert rep["norm_x_within_C0"] and rep["consistent"]


def test_calkin_finite_rank_part():
    model = build_model(toy_params())
    rep = calkin_witness(model, [0, 1], 2, Coeffs({1: 1}))
    assert rep["lower"] <= rep["upper"]
    rep = calkin_witness(model, [1, -1, 2], 3, Coeffs({1: F(1, 2), 2: F(1, 2), 3: F(1, 2)}))
    assert rep["M"] == 3 and rep["consistent"]


def test_calkin_input_errors():
    model = build_model(toy_params())
    with pytest.raises(SpecError):
        calkin_witness(model, [1, 1], 1, Coeffs({1: 1}))
    with pytest.raises(SpecError):
        calkin_witness(model, [1], 2, Coeffs({1: 2}))
