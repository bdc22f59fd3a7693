"""Small toy instances: staggered RIS, exact pairs, dependent sequences and
seeded random models for the structural checks."""
from __future__ import annotations

import random
from fractions import Fraction

from ..core import EXACT, Coeffs
from ..utcsum import BlockVec, UtcConfig
from .model import BDModel, BDParams, FunctionalHandle, YVec, build_model, column_vector

TOY_M = (4, 16)
TOY_N = (16, 64)


def toy_params(level_cap: int = 16, utc: UtcConfig | str | None = None) -> BDParams:
    """m = (4, 16), n = (16, 64) over the ℓ_2 utc sum with unbounded ℓ_∞ components."""
    if utc is None:
        utc = UtcConfig("lp:2", inner={"default": "linf"})
    return BDParams(TOY_M, TOY_N, utc, "toy", level_cap)


def staggered_ris(model: BDModel, count: int, start: int = 1, step: int = 2, value=1) -> list[YVec]:
    """Unit column vectors z_k = value·t_{r_k, r_k} with r_k = start + step(k-1)."""
    return [column_vector(model, {r: value}, r) for r in range(start, start + step * count, step)]


def exact_pair_toy(j: int = 1):
    """n_{2j} column vectors at r_k = 2k-1 with γ-slots q_k = 2k and annihilating handles.

    b_1 = 0 and b_k is the column functional at the previous vector's column.
    Returns (model, zs, bs, qs).
    """
    probe = toy_params()
    count = probe.n_j(2 * j)
    model = build_model(toy_params(level_cap=2 * count + 2))
    zs = staggered_ris(model, count, start=2 * j - 1)
    qs = [z.stage + 1 for z in zs]
    bs = [FunctionalHandle.zero()]
    for z in zs[:-1]:
        r = z.stage
        bs.append(FunctionalHandle.Gutc(r, {r: 1}))
    return model, zs, bs, qs


def dependent_toy(j0: int = 1):
    """A (1, 2j0-1, 0)-dependent sequence of unit column vectors.

    η_1 is an Even0 node of weight index 10 (m_10 > n_{2j0-1}^2 on the toy
    ladder), ξ_1 an Odd0 node; for k >= 2, η_k is an Even0 node of weight
    index 4σ(ξ_{k-1}) and ξ_k the Odd1 node on (ξ_{k-1}, η_k).  Each η_k
    carries a column functional that misses z_k, so e_{η_k}*(z_k) = 0.
    Returns (model, zs, components).
    """
    probe = toy_params()
    w_odd = 2 * j0 - 1
    n = probe.n_j(w_odd)
    eta1_index = next(i for i in range(2, 64, 4) if probe.m_j(i) > probe.n_j(w_odd) ** 2)
    # ranks are bounded by 4σ + a few, σ grows by 2 per step
    model = build_model(toy_params(level_cap=max(4 * (2 * n + 4), 2 * eta1_index) + 8))
    zs, comps = [], []
    prev_p = 0
    prev_xi = None
    prev_col = None
    for k in range(n):
        col = prev_p + 1
        z = column_vector(model, {col: 1}, col)
        if k == 0:
            half = eta1_index // 2
        else:
            half = 2 * model.nodes[prev_xi].sigma
        r_eta = max(col + 1, 2 * half, model.top_rank)
        b = FunctionalHandle.zero() if prev_col is None else FunctionalHandle.Gutc(prev_col, {prev_col: 1})
        eta = model.add("Even0", r_eta, half, b=b)
        p = r_eta + 1
        if k == 0:
            xi = model.add("Odd0", p, j0, eta=eta.id)
        else:
            xi = model.add("Odd1", p, j0, xi=prev_xi, eta=eta.id)
        zs.append(z)
        comps.append((p, eta.id, xi.id))
        prev_p, prev_xi, prev_col = p, xi.id, col
    return model, zs, comps


def _random_handle(model: BDModel, n: int, rng: random.Random) -> FunctionalHandle:
    """A random member of A_n (n >= 1)."""
    kind = rng.choice(("B", "B", "Gutc", "K", "zero"))
    if kind == "zero":
        return FunctionalHandle.zero()
    if kind == "B":
        ids = [g.id for g in model.nodes if g.rank <= n]
        pick = rng.sample(ids, min(len(ids), rng.randint(1, 3)))
        coeffs = {i: Fraction(rng.choice((-1, 1)), rng.choice((2, 3, 4, 6))) for i in pick}
        total = sum(abs(c) for c in coeffs.values())
        if total > 1:
            coeffs = {i: c / total for i, c in coeffs.items()}
        h = FunctionalHandle.B(coeffs)
        return h if model.pool_violation(h, n) is None else FunctionalHandle.zero()
    if kind == "Gutc":
        i0 = rng.randint(1, min(2 ** n, n + 3))
        ks = rng.sample(range(1, min(n, i0) + 1), min(min(n, i0), rng.randint(1, 3)))
        h = FunctionalHandle.Gutc(i0, {k: Fraction(rng.choice((-1, 1)), 2) for k in ks})
        return h if model.pool_violation(h, n) is None else FunctionalHandle.zero()
    k = rng.randint(1, n)
    idx = rng.sample(range(1, n + 1), min(n, rng.randint(1, 2)))
    h = FunctionalHandle.K(k, {i: Fraction(rng.choice((-1, 1)), 2) for i in idx})
    return h if model.pool_violation(h, n) is None else FunctionalHandle.zero()


def random_model(params: BDParams | None = None, count: int = 100, seed: int = 0, max_age: int = 4,
                 max_rank: int = 12) -> BDModel:
    """A seeded model with about ``count`` nodes of every feasible kind over ranks 2..max_rank."""
    params = params or toy_params(level_cap=max_rank)
    rng = random.Random(seed)
    model = build_model(params)
    per_rank = max(1, count // (max_rank - 1))
    for r in range(2, max_rank + 1):
        n = r - 1
        for _ in range(per_rank):
            if len(model.nodes) > count:
                break
            options = []
            evens = [g for g in model.nodes if g.kind in ("Even0", "Even1") and g.rank <= n and g.age < max_age
                     and g.age < params.n_j(g.weight_index)]
            odds = [g for g in model.nodes if g.kind in ("Odd0", "Odd1") and g.rank <= n and g.age < max_age
                    and g.age < params.n_j(g.weight_index)]
            options.append("Even0")
            if evens:
                options.append("Even1")
            odd0_eta = [g for g in model.nodes if g.rank <= n and g.weight_index is not None
                        and g.weight_index % 4 == 2 and params.m_j(g.weight_index) > params.n_j(1) ** 2]
            if odd0_eta:
                options.append("Odd0")
            odd1 = [(x, e) for x in odds for e in model.nodes
                    if e.rank <= n and x.rank < e.rank and e.weight_index == 4 * x.sigma]
            if odd1:
                options.append("Odd1")
            kind = rng.choice(options)
            if kind == "Even0":
                # mostly weight index 2, sometimes the larger indices that feed odd nodes
                halves = [j for j in range(1, r // 2 + 1)]
                half = rng.choice(halves[:1] * 3 + halves)
                model.add("Even0", r, half, b=_random_handle(model, n, rng))
            elif kind == "Even1":
                x = rng.choice(evens)
                model.add("Even1", r, x.j, xi=x.id, b=_random_handle(model, n, rng))
            elif kind == "Odd0":
                model.add("Odd0", r, 1, eta=rng.choice(odd0_eta).id)
            else:
                x, e = rng.choice(odd1)
                model.add("Odd1", r, x.j, xi=x.id, eta=e.id)
    return model


def random_vector(model: BDModel, rng: random.Random, stage: int | None = None, density: float = 0.5,
                  mode: str = EXACT) -> YVec:
    """A seeded vector of Z^stage with small dyadic entries."""
    top = model.params.level_cap
    stage = stage or rng.randint(1, top)

    def val():
        v = Fraction(rng.randint(-8, 8), 8)
        return v if mode == EXACT else float(v)

    parts = {}
    for k in range(1, stage + 1):
        if rng.random() < density:
            parts[k] = Coeffs({i: val() for i in rng.sample(range(1, stage + 2), rng.randint(1, 2))}, mode)
    y = {g.id: val() for g in model.nodes if g.rank <= stage and rng.random() < density}
    return YVec(stage, BlockVec(parts, mode), y)
