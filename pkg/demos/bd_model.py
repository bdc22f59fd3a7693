"""Build a small finite-stage model, evaluate coordinates both ways and
read back an evaluation analysis."""
from __future__ import annotations

from fractions import Fraction

from banachforge.bd import (
    FunctionalHandle, YVec, build_model, column_vector, eval_e, evaluation_analysis, literal_coordinate,
    lower_bound_witness, norm_Y, staggered_ris, toy_params,
)

if __name__ == "__main__":
    model = build_model(toy_params(level_cap=10))
    a = model.add("Even0", 2, 1, b=FunctionalHandle.B({0: Fraction(1, 2)}))
    b = model.add("Even1", 4, 1, xi=a.id, b=FunctionalHandle.K(3, {1: 1}))
    u = YVec(3, {3: {1: Fraction(2)}}, {a.id: Fraction(5)})
    print("e_b(u) fast   :", eval_e(model, b, u))
    print("e_b(u) literal:", literal_coordinate(model, b, u))
    print("analysis of b :", [(p, xi, h.to_json()) for p, xi, h in evaluation_analysis(model, b)])
    print("||i_n u||     :", norm_Y(model, u), " C0 =", model.params.C0)

    big = build_model(toy_params(level_cap=40))
    ws = staggered_ris(big, 16, start=2, step=2)
    gamma, value, bound, ok, rep = lower_bound_witness(big, ws, 1)
    print(f"lower bound witness: e_gamma(sum w) = {value} >= {bound}: {ok}  [{rep['label']}]")
    print("column vector norm:", norm_Y(big, column_vector(big, {1: Fraction(1, 2), 2: Fraction(1, 2)}, 2)))
