"""Evaluation analyses, constructive γ-building and the quantitative checks
on rapidly increasing sequences, exact pairs, dependent sequences, the lower
bound witness and the Calkin sandwich.

Reports are plain dicts.  Toy-parameter reports carry ``"toy": True`` and
the label ``TOY_LABEL``: the estimates are proved for compliant ladders only,
so a toy-mode failure is falsification evidence about the toy ladder, not a
defect of the code.
"""
from __future__ import annotations

import math
import random
from fractions import Fraction
from typing import Sequence

from ..core import (
    EQ_TOL, Coeffs, ConstructionError, ModelError, OrderingError, PoolError, SpecError, close, leq,
)
from ..utcsum import BlockVec
from .model import (
    BDModel, FunctionalHandle, GammaNode, YVec, _handle_diff, dual_bound, lift, norm_Y, ran_bd,
    stage_values, supp_bd,
)

TOY_LABEL = "toy parameters: falsification evidence only"


def _tag(model: BDModel, report: dict) -> dict:
    report["toy"] = model.params.toy
    report["level_cap"] = model.params.level_cap
    if model.params.toy:
        report["label"] = TOY_LABEL
    return report


def _require_toy(model: BDModel, what: str):
    if not model.params.toy:
        raise SpecError(f"{what} runs on toy parameters only; compliant ladders are structure-only")


# evaluation analysis


def evaluation_analysis(model: BDModel, gamma) -> list[tuple[int, int, FunctionalHandle]]:
    """(p_i, ξ_i, b_i*) for i = 1..age with ξ_i ∈ Δ_{p_i} and ξ_age = γ.

    For odd kinds b_i* is e_η* (returned as a one-term B-handle).
    """
    g = model.node(gamma)
    if g.kind == "Base":
        raise ModelError("Δ_1 nodes carry no weight or age")
    chain = []
    cur = g
    while True:
        b = cur.b if cur.kind in ("Even0", "Even1") else FunctionalHandle.e(cur.eta)
        chain.append((cur.rank, cur.id, b))
        if cur.kind in ("Even0", "Odd0"):
            break
        nxt = model.nodes[cur.xi]
        if nxt.weight_index != cur.weight_index or nxt.age != cur.age - 1 or nxt.rank >= cur.rank:
            raise ModelError(f"broken ξ-chain at node {cur.id}")
        cur = nxt
    chain.reverse()
    if cur.age != 1 or len(chain) != g.age:
        raise ModelError(f"ξ-chain of node {g.id} has length {len(chain)} but age {g.age}")
    return chain


def reconstruct(model: BDModel, gamma, u: YVec):
    """(e_γ*(z), Σ d_{ξ_i}*(z) + (1/m) Σ b_i*(P_{(p_{i-1}, p_i)} z)) for z = i_n(u)."""
    g = model.node(gamma)
    E = stage_values(model, u)
    l = u.stage
    w = model.params.weight(g.weight_index)
    total_d = 0
    total_b = 0
    prev = 0
    for p, xi, b in evaluation_analysis(model, g):
        total_d += E[min(p, l)][xi] - E[min(p - 1, l)][xi]
        total_b += _handle_diff(model, b, u, E, min(p - 1, l), min(prev, l))
        prev = p
    return E[l][g.id], total_d + w * total_b


# building γ with a prescribed analysis


def _chain(model: BDModel, weight_index: int, slots: Sequence[tuple[int, FunctionalHandle]]) -> GammaNode:
    """Insert Even0 then Even1 nodes at the given ranks; returns the last one."""
    if weight_index % 2:
        raise ConstructionError("constructed chains have even weight index 2j")
    j = weight_index // 2
    P = model.params
    if not 1 <= len(slots) <= P.n_j(weight_index):
        raise ConstructionError(f"1 <= a <= n_{weight_index} = {P.n_j(weight_index)} (a = {len(slots)})")
    ranks = [r for r, _ in slots]
    if any(b <= a for a, b in zip(ranks, ranks[1:])):
        raise ConstructionError(f"ranks must increase strictly: {ranks}")
    node = None
    for i, (r, b) in enumerate(slots):
        if i == 0:
            node = model.add("Even0", r, j, b=b)
        else:
            node = model.add("Even1", r, j, xi=node.id, b=b)
    return node


def construct_gamma(model: BDModel, j: int, triples: Sequence[tuple[int, FunctionalHandle]]) -> GammaNode:
    """γ of weight 1/m_{2j} with ξ_i ∈ Δ_{p_i+1} and the given b_i* ∈ A_{p_i-1}.

    The resulting analysis read back by :func:`evaluation_analysis` reports
    ranks p_i + 1 (the ranks of the ξ_i).
    """
    P = model.params
    a = len(triples)
    if a < 1:
        raise ConstructionError("need at least one (p, b*) pair")
    if a > P.n_j(2 * j):
        raise ConstructionError(f"1 <= a <= n_{{2j}} = {P.n_j(2 * j)} (a = {a})")
    ps = [int(p) for p, _ in triples]
    if not 2 * j <= ps[0]:
        raise ConstructionError(f"2j <= p_1 (2j = {2 * j}, p_1 = {ps[0]})")
    if not all(x < y for x, y in zip([0] + ps, ps)):
        raise ConstructionError(f"0 = p_0 < p_1 < ... < p_a violated: {ps}")
    if ps[-1] + 1 > P.level_cap:
        raise ConstructionError(f"p_a + 1 = {ps[-1] + 1} exceeds the level cap {P.level_cap}")
    for p, b in triples:
        why = model.pool_violation(b, p - 1) if p >= 2 else (None if b.is_zero() else "A_0 is empty")
        if why:
            raise ConstructionError(f"b* ∈ A_{{p-1}} at p = {p}: {why}")
    return _chain(model, 2 * j, [(p + 1, b) for p, b in triples])


# helpers on vectors


def add_vectors(model: BDModel, vecs: Sequence[YVec], coeffs=None) -> YVec:
    """Σ c_i z_i as one vector, lifting everything to the largest stage."""
    vecs = list(vecs)
    if not vecs:
        return YVec(1)
    top = max(v.stage for v in vecs)
    coeffs = [1] * len(vecs) if coeffs is None else list(coeffs)
    total = None
    for c, v in zip(coeffs, vecs):
        t = lift(model, v, top).scale(c)
        total = t if total is None else total + t
    return total


def _all_values(model: BDModel, z: YVec):
    """Every registered e_γ*(z) and d_γ*(z)."""
    E = stage_values(model, z)
    l = z.stage
    e = E[l]
    d = [E[min(g.rank, l)][g.id] - E[min(g.rank - 1, l)][g.id] for g in model.nodes]
    return e, d


def _column_hits(z: YVec) -> dict[int, dict]:
    """For each column i0 the (nonzero) column (x_k[i0])_{k<=i0}."""
    cols: dict[int, dict] = {}
    for k, v in z.x.parts.items():
        for i, c in v.items():
            if k <= i:
                cols.setdefault(i, {})[k] = c
    return cols


# RIS


def check_ris(model: BDModel, zs: Sequence[YVec], C, js: Sequence[int]) -> dict:
    zs = list(zs)
    js = list(js)
    if len(js) != len(zs):
        raise SpecError("need one j_n per vector")
    if any(b <= a for a, b in zip(js, js[1:])):
        raise SpecError("(j_n) must increase strictly")
    P = model.params
    failures = []
    norms, ranges = [], []
    for n, z in enumerate(zs):
        nz = norm_Y(model, z)
        norms.append(nz)
        ranges.append(ran_bd(model, z))
        if not leq(nz, C):
            failures.append({"clause": "i", "n": n, "norm": nz, "C": C})
    for n in range(len(zs) - 1):
        if ranges[n] is not None and not js[n + 1] > ranges[n][1]:
            failures.append({"clause": "ii", "n": n, "j_next": js[n + 1], "max_ran": ranges[n][1]})
    needed = max(norms, default=0)
    for n, z in enumerate(zs):
        e, _ = _all_values(model, z)
        for g in model.nodes[1:]:
            i = g.weight_index
            if i < js[n]:
                v = abs(e[g.id])
                needed = max(needed, v * P.m_j(i))
                if not leq(v, Fraction(C) / P.m_j(i) if not isinstance(C, float) else C / P.m_j(i)):
                    failures.append({"clause": "iii", "n": n, "gamma": g.id, "value": v, "bound": C / P.m_j(i)})
    # (iv): a column functional hits two vectors iff they share a column i0 where both are nonzero
    structural = True
    for n in range(len(zs) - 1):
        s = supp_bd(model, zs[n + 1])
        if s and zs[n].max_cw() >= s[0]:
            structural = False
    witness = None
    cols = [_column_hits(z) for z in zs]
    for i0 in sorted({i for c in cols for i in c}):
        owners = [n for n, c in enumerate(cols) if i0 in c]
        if len(owners) >= 2:
            witness = _separating_column(model, i0, cols[owners[0]][i0], cols[owners[1]][i0], owners[:2])
            break
    if witness is not None:
        failures.append({"clause": "iv", **witness})
    report = {
        "pass": not failures, "failures": failures, "C": C, "C_needed": needed, "norms": norms,
        "ranges": ranges, "iv_structural": structural, "iv_witness": witness,
    }
    return _tag(model, report)


def _separating_column(model: BDModel, i0: int, col1: dict, col2: dict, owners) -> dict:
    """A certified column functional at i0 that is nonzero on both columns."""
    ks = sorted(set(col1) | set(col2))
    for t in range(1, len(ks) + 3):
        a = Coeffs({k: Fraction(t) ** idx for idx, k in enumerate(ks)})
        v1 = sum(a[k] * c for k, c in col1.items())
        v2 = sum(a[k] * c for k, c in col2.items())
        if v1 != 0 and v2 != 0:
            bound = dual_bound(model.params.utc.outer, a, model.params.A0)
            scale = _rational_ceiling(bound)
            a = a.scale(Fraction(1) / scale)
            return {"i0": i0, "a": a.entries, "hits": list(owners), "values": [v1 / scale, v2 / scale]}
    raise ModelError("no separating column functional found")  # cannot happen for nonzero columns


def _rational_ceiling(v, den: int = 10 ** 6) -> Fraction:
    """Smallest k/den >= v (v itself when it is already rational)."""
    if isinstance(v, Fraction):
        return v if v > 0 else Fraction(1)
    r = Fraction(math.ceil(v * den), den)
    return r if r > 0 else Fraction(1)


def ris_average_bound(model: BDModel, zs: Sequence[YVec], j: int, C=None):
    """||(1/n_j) Σ z_k|| against A_0 C_0 C (3/n_j + 4/m_j)."""
    _require_toy(model, "ris_average_bound")
    P = model.params
    zs = list(zs)
    nj = P.n_j(j)
    if len(zs) != nj:
        raise SpecError(f"need exactly n_{j} = {nj} vectors, got {len(zs)}")
    if C is None:
        C = max((norm_Y(model, z) for z in zs), default=Fraction(0))
    z = add_vectors(model, zs, [Fraction(1, nj)] * nj)
    value = norm_Y(model, z)
    bound = P.A0 * P.C0 * C * (Fraction(3, nj) + Fraction(4, P.m_j(j)))
    return value, bound, leq(value, bound)


def ris_foreign_weight_bound(model: BDModel, zs: Sequence[YVec], m_tilde: int, n_tilde: int, C):
    """||(m~/n~) Σ z_k|| against 11 A_0 C_0 C / m~ for a weight pair outside the BD ladder."""
    _require_toy(model, "ris_foreign_weight_bound")
    P = model.params
    zs = list(zs)
    if len(zs) != n_tilde:
        raise SpecError(f"need exactly n~ = {n_tilde} vectors, got {len(zs)}")
    z = add_vectors(model, zs, [Fraction(m_tilde, n_tilde)] * n_tilde)
    value = norm_Y(model, z)
    bound = 11 * P.A0 * P.C0 * C / m_tilde
    return value, bound, leq(value, bound)


# exact pairs


def check_exact_pair(model: BDModel, z: YVec, gamma, C, j: int, M: int, eps) -> dict:
    """Clauses (i)-(v) for (z, γ) to be a (C, j, M, ε)-exact pair; j is the weight index."""
    P = model.params
    g = model.node(gamma)
    failures = []
    e, d = _all_values(model, z)
    mj = P.m_j(j)
    for x in model.nodes:
        if not leq(abs(d[x.id]), C / mj):
            failures.append({"clause": "i", "xi": x.id, "value": d[x.id], "bound": C / mj})
    if g.weight_index != j:
        failures.append({"clause": "ii", "gamma": g.id, "weight_index": g.weight_index, "j": j})
    nz = norm_Y(model, z)
    if not leq(nz, C):
        failures.append({"clause": "iii", "norm": nz, "C": C})
    if not close(e[g.id], eps, EQ_TOL):
        failures.append({"clause": "iii", "e_gamma": e[g.id], "eps": eps})
    for x in model.nodes[1:]:
        i = x.weight_index
        if i == j:
            continue
        bound = C / P.m_j(i) if i < j else C / mj
        if not leq(abs(e[x.id]), bound):
            failures.append({"clause": "iv", "xi": x.id, "weight_index": i, "value": e[x.id], "bound": bound})
    if z.max_cw() > M:
        failures.append({"clause": "v", "max_cw": z.max_cw(), "M": M})
    return _tag(model, {"pass": not failures, "failures": failures, "norm": nz, "e_gamma": e[g.id]})


def build_exact_pair(model: BDModel, zs: Sequence[YVec], j: int, bs: Sequence[FunctionalHandle],
                     qs: Sequence[int] | None = None, C=None):
    """z = (m_{2j}/n_{2j}) Σ z_k with γ whose analysis is (q_k, ζ_k, b_k*).

    ``qs`` defaults to q_k = max ran_BD(z_k) + 1.  Each b_k must lie in
    A_{q_k - 1} and annihilate z_k.  Returns (z, γ, report) where the report
    checks the (7C, 2j, M, 0) clauses.
    """
    _require_toy(model, "build_exact_pair")
    P = model.params
    zs, bs = list(zs), list(bs)
    n2j = P.n_j(2 * j)
    if len(zs) != n2j or len(bs) != n2j:
        raise SpecError(f"need n_{{2j}} = {n2j} vectors and handles, got {len(zs)} and {len(bs)}")
    ranges = [ran_bd(model, z) for z in zs]
    if qs is None:
        qs = [(r[1] if r else 0) + 1 for r in ranges]
        # empty vectors still need a slot above the previous one
        fixed, last = [], 0
        for q in qs:
            q = max(q, last + 1)
            fixed.append(q)
            last = q
        qs = fixed
    qs = [int(q) for q in qs]
    if not 2 * j <= qs[0]:
        raise ConstructionError(f"2j <= q_1 (2j = {2 * j}, q_1 = {qs[0]})")
    prev = 0
    for k, (z, r, q, b) in enumerate(zip(zs, ranges, qs, bs)):
        if r is not None and not (prev < r[0] and r[1] < q):
            raise OrderingError(f"supp_BD(z_{k + 1}) = {r} must lie inside ({prev}, {q})")
        why = model.pool_violation(b, q - 1)
        if why:
            raise ConstructionError(f"b_{k + 1} ∈ A_{{q_k - 1}}: {why}")
        E = stage_values(model, z)
        val = _handle_diff(model, b, z, E, z.stage, 0)
        if val != 0:
            raise ConstructionError(f"annihilation b_{k + 1}(z_{k + 1}) = 0 fails (value {val})")
        prev = q
    if C is None:
        C = max((norm_Y(model, z) for z in zs), default=Fraction(0))
    gamma = _chain(model, 2 * j, list(zip(qs, bs)))
    z = add_vectors(model, zs, [Fraction(P.m_j(2 * j), n2j)] * n2j)
    M = max((v.max_cw() for v in zs), default=0)
    report = check_exact_pair(model, z, gamma, 7 * C, 2 * j, M, 0)
    report["norm_bound_5A0C0C"] = 5 * P.A0 * P.C0 * C
    report["norm_within_5A0C0C"] = leq(report["norm"], report["norm_bound_5A0C0C"])
    report["C_ris"] = C
    return z, gamma, report


# dependent sequences


def check_dependent(model: BDModel, zs: Sequence[YVec], components: Sequence[tuple[int, int, int]], C, j0: int,
                    eps) -> dict:
    """Clauses (i)-(iii) of a (C, 2j0-1, ε)-dependent sequence plus the derived estimates.

    ``components`` lists (p_k, η_k, ξ_k).
    """
    _require_toy(model, "check_dependent")
    P = model.params
    zs = list(zs)
    comps = [(int(p), model.node(e).id, model.node(x).id) for p, e, x in components]
    w_odd = 2 * j0 - 1
    n = P.n_j(w_odd)
    failures = []
    if len(zs) != n or len(comps) != n:
        failures.append({"clause": "length", "expected": n, "vectors": len(zs), "components": len(comps)})
    ps = [0] + [p for p, _, _ in comps]
    if any(b <= a for a, b in zip(ps, ps[1:])):
        failures.append({"clause": "p increasing", "p": ps})
    for k, (z, (p, eta, xi)) in enumerate(zip(zs, comps)):
        wi = model.nodes[eta].weight_index
        if k == 0 and (wi is None or wi % 4 != 2):
            failures.append({"clause": "i", "k": 1, "reason": f"weight(η_1) must be 1/m_{{4j-2}}, index {wi}"})
        if k > 0 and (wi is None or wi % 4 != 0):
            failures.append({"clause": "i", "k": k + 1, "reason": f"weight(η_k) must be 1/m_{{4j}}, index {wi}"})
        if wi is not None:
            rep = check_exact_pair(model, z, eta, C, wi, p, eps)
            for f in rep["failures"]:
                failures.append({"clause": "i", "k": k + 1, "exact_pair": f})
    gamma = comps[-1][2] if comps else None
    if gamma is not None:
        g = model.nodes[gamma]
        if g.weight_index != w_odd:
            failures.append({"clause": "ii", "reason": f"weight(γ) index {g.weight_index} != {w_odd}"})
        try:
            ana = evaluation_analysis(model, gamma)
        except ModelError as exc:
            ana = []
            failures.append({"clause": "ii", "reason": str(exc)})
        want = [(p, xi, FunctionalHandle.e(eta)) for p, eta, xi in comps]
        if ana and ana != want:
            failures.append({"clause": "ii", "reason": "evaluation analysis differs from (p_k, e_η_k*, ξ_k)"})
    for k, z in enumerate(zs):
        r = ran_bd(model, z)
        if r is not None and k < len(comps) and not (ps[k] < r[0] and r[1] < ps[k + 1]):
            failures.append({"clause": "iii", "k": k + 1, "ran": r, "window": (ps[k], ps[k + 1])})
    report = {"pass": not failures, "failures": failures}
    if gamma is not None and zs:
        per_k = [stage_values(model, z)[z.stage][gamma] for z in zs]
        target = eps * P.weight(w_odd)
        report["per_vector_values"] = per_k
        report["per_vector_ok"] = all(close(v, target, EQ_TOL) for v in per_k)
        # same-weight functionals on every subinterval J
        worst = 0
        for zeta in model.nodes[1:]:
            if zeta.weight_index != w_odd:
                continue
            vals = [stage_values(model, z)[z.stage][zeta.id] for z in zs]
            for a in range(len(vals)):
                s = 0
                for b in range(a, len(vals)):
                    s += vals[b]
                    worst = max(worst, abs(s))
        report["same_weight_max"] = worst
        report["same_weight_bound"] = 3 * C
        report["same_weight_ok"] = leq(worst, 3 * C)
        if eps == 0:
            avg = add_vectors(model, zs, [Fraction(1, len(zs))] * len(zs))
            value = norm_Y(model, avg)
            bound = 33 * P.A0 * P.C0 * C / P.m_j(w_odd) ** 2
            report["average"] = value
            report["average_bound"] = bound
            report["average_ok"] = leq(value, bound)
    return _tag(model, report)


# lower bound witness


def _rationalize(v, den: int = 2 ** 20) -> Fraction:
    return v if isinstance(v, Fraction) else Fraction(v).limit_denominator(den)


def _dual_vector(X, c: Coeffs, A0) -> list[Coeffs]:
    """Candidate rational functionals in the (certified) dual ball aimed at c."""
    out = []
    if c.is_zero():
        return out
    sgn = {k: (1 if v > 0 else -1) for k, v in c.items()}
    p = X.meta.get("p")
    if p is None and X.meta.get("james_p") is None:
        base = X.meta.get("base")
        if base is not None and X.meta.get("flavor") == "jamesification":
            p = base.meta.get("p")
    if X.meta.get("james_p") is not None:
        p = X.meta["james_p"]
        tot = sum(v for _, v in c.items())
        lo, hi = c.support()[0], c.support()[-1]
        if tot != 0:
            out.append(Coeffs({k: (1 if tot > 0 else -1) for k in range(lo, hi + 1)}))
    if p is not None:
        if p == float("inf"):
            k = max(c.support(), key=lambda i: abs(c[i]))
            out.append(Coeffs({k: sgn[k]}))
        elif p == 1:
            out.append(Coeffs(sgn))
        else:
            pf = float(p)
            vals = {k: abs(float(v)) ** (pf - 1) for k, v in c.items()}
            norm_q = sum(v ** (pf / (pf - 1)) for v in vals.values()) ** ((pf - 1) / pf)
            out.append(Coeffs({k: sgn[k] * _rationalize(vals[k] / norm_q) for k in vals}))
    # singleton fallback
    k = max(c.support(), key=lambda i: abs(c[i]) * X(Coeffs({i: 1})))
    out.append(Coeffs({k: sgn[k]}))
    fixed = []
    for a in out:
        if a.is_zero():
            continue
        bound = dual_bound(X, a, A0)
        if bound == float("inf"):
            continue
        if bound > 1:
            a = a.scale(Fraction(1) / _rational_ceiling(bound))
        fixed.append(a)
    return fixed


def norming_handle(model: BDModel, w: YVec, eps=Fraction(1, 10)):
    """A handle b* ∈ A_N with b*(w) >= (1-ε)||w||, chosen from certified candidates."""
    P = model.params
    target = norm_Y(model, w)
    if target == 0:
        return FunctionalHandle.zero(), target, target
    E = stage_values(model, w)
    row = E[w.stage]
    cands = []
    best_id = max(range(len(model.nodes)), key=lambda i: abs(row[i]))
    if row[best_id] != 0:
        cands.append(FunctionalHandle.B({best_id: 1 if row[best_id] > 0 else -1}))
    for k, xk in w.x.parts.items():
        for g in _dual_vector(P.utc.inner(k), xk, 1):
            cands.append(FunctionalHandle.K(k, g))
    for i0, col in _column_hits(w).items():
        c = Coeffs(col, w.mode)
        for a in _dual_vector(P.utc.outer, c, P.A0):
            cands.append(FunctionalHandle.Gutc(i0, a))
    best, best_val = None, None
    for h in cands:
        if h.pool == "B":
            val = sum(c * row[i] for i, c in h.coeffs)
        else:
            val = h.apply(w.x, {}, P.A0)
        if best_val is None or val > best_val:
            best, best_val = h, val
    if best is None or best_val < (1 - eps) * target:
        raise PoolError(f"no registered functional norms the vector to within 1-ε = {1 - eps} "
                        f"(best {best_val}, norm {target})")
    return best, best_val, target


def lower_bound_witness(model: BDModel, ws: Sequence[YVec], j: int, eps=Fraction(1, 10)):
    """γ of weight 1/m_{2j} with e_γ*(Σ w_i) >= (1/(3 m_{2j})) Σ ||w_i||.

    Each w_d gets a slot rank just above its BD range where the chain node
    sits, carrying a handle that (1-ε)-norms w_d.  Vectors before the first
    admissible slot (rank >= 2j) share one slot with a zero handle and only
    contribute to the bound.
    """
    _require_toy(model, "lower_bound_witness")
    P = model.params
    ws = list(ws)
    n2j = P.n_j(2 * j)
    if not 1 <= len(ws) <= n2j:
        raise SpecError(f"need 1 <= #ws <= n_{{2j}} = {n2j}")
    ranges = [ran_bd(model, w) for w in ws]
    for a, b in zip(ranges, ranges[1:]):
        if a is None or b is None or not a[1] < b[0]:
            raise OrderingError("ws must be nonzero block vectors with increasing BD ranges")
    # every w_d must be expressed at its own top rank so new nodes above it extend it
    ws = [lift(model, w, r[1]) for w, r in zip(ws, ranges)]
    norms = [norm_Y(model, w) for w in ws]
    handles = [norming_handle(model, w, eps)[0] for w in ws]
    slots = []
    skipped = []
    d = 0
    nxt = lambda k: ranges[k + 1][0] if k + 1 < len(ws) else P.level_cap + 1  # noqa: E731
    # leading vectors whose slot would fall below 2j are absorbed into a zero-handle slot
    while d < len(ws):
        r = max(ranges[d][1] + 1, model.handle_level(handles[d]) + 1, 2 * j, model.top_rank)
        if r < nxt(d):
            break
        skipped.append(d)
        d += 1
    if skipped:
        r0 = max(ranges[skipped[-1]][1] + 1, 2 * j, model.top_rank)
        if r0 >= nxt(skipped[-1]):
            raise OrderingError("no room for the leading zero slot; use a more staggered subsequence")
        slots.append((r0, FunctionalHandle.zero()))
    last = slots[-1][0] if slots else 0
    for k in range(d, len(ws)):
        r = max(ranges[k][1] + 1, model.handle_level(handles[k]) + 1, 2 * j, last + 1, model.top_rank)
        if r >= nxt(k):
            raise OrderingError(f"no slot between w_{k + 1} and w_{k + 2}; use a more staggered subsequence")
        slots.append((r, handles[k]))
        last = r
    if len(slots) > n2j:
        raise SpecError(f"chain length {len(slots)} exceeds n_{{2j}} = {n2j}")
    gamma = _chain(model, 2 * j, slots)
    total = add_vectors(model, ws)
    value = stage_values(model, total)[total.stage][gamma.id]
    mw = P.m_j(2 * j)
    bound = sum(norms) / (3 * mw)
    counted = [k for k in range(d, len(ws))]
    chain_estimate = (1 - eps) * sum(norms[k] for k in counted) / mw
    nt = norm_Y(model, total)
    report = _tag(model, {
        "value": value, "bound": bound, "chain_estimate": chain_estimate, "chain_estimate_ok": leq(chain_estimate, value),
        "norm_sum": nt, "consistent": leq(value, nt), "skipped": skipped, "slots": [r for r, _ in slots],
    })
    return gamma, value, bound, leq(bound, value), report


# Calkin sandwich


def _diag_norm_surrogate(X, mult: dict, tail, n_dims: int, seed: int = 0, budget: int = 200):
    """Lower estimate of ||D|| for D e_k = mult_k e_k (mult_k = tail beyond the listed k)."""
    best = abs(tail)
    for v in mult.values():
        best = max(best, abs(v))
    if X.unconditional and X.bimonotone_constant == 1 and X.normalized:
        return best, True
    rng = random.Random(seed)
    for _ in range(budget):
        c = Coeffs({k: Fraction(rng.randint(-4, 4), 4) for k in range(1, n_dims + 1)})
        if c.is_zero():
            continue
        Dc = Coeffs({k: mult.get(k, tail) * v for k, v in c.items()})
        best = max(best, X(Dc) / X(c))
    return best, False


def calkin_witness(model: BDModel, a: Sequence, i0: int, b: Coeffs, i: int | None = None, seed: int = 0) -> dict:
    """Finite-stage lower and upper estimates for ||a_0 [I] + Σ a_k [I_k]|| in the Calkin algebra."""
    P = model.params
    X = P.utc.outer
    a = list(a)
    n = len(a) - 1
    a0 = a[0]
    if i0 < n + 1:
        raise SpecError(f"need i0 >= n+1 (i0 = {i0}, n = {n})")
    if b.max_index() > i0:
        raise SpecError("b must be supported in [1, i0]")
    nb = X(b)
    if not leq(nb, 1):
        raise SpecError(f"need ||Σ b_k e_k||_X <= 1 (got {nb})")
    i = i0 if i is None else i
    if i < i0:
        raise SpecError("witness column i must be >= i0")
    mult = {k: a0 + a[k] for k in range(1, n + 1)}
    x = YVec(i0, BlockVec({k: Coeffs({i: v}, b.mode) for k, v in b.items()}, b.mode))
    Tx = YVec(i0, BlockVec({k: Coeffs({i: mult.get(k, a0) * v}, b.mode) for k, v in b.items()}, b.mode))
    norm_x = norm_Y(model, x)
    lower = norm_Y(model, Tx) / P.C0
    M, exact = _diag_norm_surrogate(X, mult, a0, max(i0, n + 1), seed)
    if not b.is_zero():
        Db = Coeffs({k: mult.get(k, a0) * v for k, v in b.items()}, b.mode)
        M = max(M, X(Db) / nb)
    upper = (2 * P.C0 ** 2 - P.C0) * M
    return _tag(model, {
        "lower": lower, "upper": upper, "M": M, "M_exact": exact, "norm_x": norm_x,
        "norm_x_within_C0": leq(norm_x, P.C0), "consistent": leq(lower, upper),
        "sandwich_constant": P.sandwich_constant(),
    })
