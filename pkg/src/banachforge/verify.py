"""Seeded verification suites.

Each suite draws its trials from ``random.Random(f"{seed}:{suite}:{t}")`` so
a failing trial can be replayed on its own, and returns a JSON-ready report:

    {"suite", "anchor", "trials", "seed", "mode", "pass", "checks",
     "max_ratio", "bound", "failures": [{"trial", "trial_seed", ...}]}

Toy-parameter suites also carry ``"toy": true`` and the falsification label.
"""
from __future__ import annotations

import itertools
import math
import random
from fractions import Fraction
from functools import lru_cache

from . import diagalg
from .bd import estimates as est
from .bd import model as bdm
from .bd import toys
from .core import (
    EQ_TOL, EXACT, FLOAT, Coeffs, default_mode, enumerate_interval_families, fmt_scalar, leq, lp,
)
from .families import is_admissible
from .james import (
    JamesSpec, check_complemented_projection, check_right_dominant, check_submultiplicative, double, jp_power,
)
from .tsirelson import MixedParams, TsirelsonSpec, check_aux_estimate, norm_tsirelson, tsirelson_oracle
from .utcsum import BlockVec, UtcConfig, check_disjoint_max, column, norm_utc

ANCHORS = {
    "jp-dp-vs-bruteforce": "J_p norm: interval-partition DP against exhaustive interval families",
    "tsirelson-recursion": "Tsirelson norm: memoized recursion against admissible-tree brute force",
    "submult-2": "variation norm: ||ab|| <= 2||a|| ||b||",
    "dominance-5C": "right dominance: Schreier-Tsirelson basis (C=1) and its doubling (5C)",
    "complemented-1p2C": "even-part projection on J(X): ||Qa|| <= (1+2C)||a||",
    "utc-column": "utc sum: column vectors are isometric copies of X",
    "c0-maxrule": "utc sum: disjointly staggered vectors satisfy the max rule",
    "C0-extension": "BD extensions: ||i_{l,m}|| <= C_0, composition law, projection algebra",
    "eval-analysis": "BD evaluation analysis reconstructs e_gamma*",
    "aux-estimates": "mixed-Tsirelson averages: weight-h norm <= 2/(m_h m_j0) or 1/m_h",
    "ris-average": "RIS averages: A_0 C_0 C (3/n_j + 4/m_j) and 11 A_0 C_0 C / m~",
    "exact-pair-7C": "RIS to exact pair with constant 7C",
    "dependent-33": "zero-dependent sequences: 33 A_0 C_0 C / m^2",
    "lowerbound-3m2j": "lower bound witness: e_gamma*(sum w) >= sum ||w|| / (3 m_2j)",
    "calkin-sandwich": "Calkin sandwich: finite-stage lower bound <= upper bound",
    "ideal-lattice": "ideals A_L of the diagonal algebra: closure and antitone order",
}

DEFAULT_TRIALS = {
    "jp-dp-vs-bruteforce": 200, "tsirelson-recursion": 100, "submult-2": 1000, "dominance-5C": 1000,
    "complemented-1p2C": 500, "utc-column": 500, "c0-maxrule": 200, "C0-extension": 50, "eval-analysis": 50,
    "aux-estimates": 1, "ris-average": 1, "exact-pair-7C": 1, "dependent-33": 1, "lowerbound-3m2j": 4,
    "calkin-sandwich": 100, "ideal-lattice": 1,
}


def jsonable(v):
    """Fractions and floats to strings, containers recursively, handles via to_json."""
    if isinstance(v, (bool, int, str)) or v is None:
        return v
    if isinstance(v, (Fraction, float)):
        return fmt_scalar(v)
    if isinstance(v, dict):
        return {str(k): jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple, set, frozenset)):
        return [jsonable(x) for x in (sorted(v) if isinstance(v, (set, frozenset)) else v)]
    if hasattr(v, "to_json"):
        return jsonable(v.to_json())
    return repr(v)


class _Run:
    def __init__(self, suite: str, trials: int, seed: int):
        self.suite, self.trials, self.seed = suite, trials, seed
        self.checks = 0
        self.failures: list = []
        self.max_ratio = None
        self.bound = None
        self.extra: dict = {}

    def rng(self, t: int) -> random.Random:
        return random.Random(f"{self.seed}:{self.suite}:{t}")

    def check(self, ok: bool, t: int | None = None, **payload):
        self.checks += 1
        if not ok:
            entry = {"trial": t, "trial_seed": None if t is None else f"{self.seed}:{self.suite}:{t}"}
            entry.update(payload)
            self.failures.append(entry)

    def ratio(self, value, bound=None):
        if value is not None and (self.max_ratio is None or value > self.max_ratio):
            self.max_ratio = value
        if bound is not None:
            self.bound = bound

    def report(self, **flags) -> dict:
        out = {
            "suite": self.suite, "anchor": ANCHORS[self.suite], "trials": self.trials, "seed": self.seed,
            "mode": default_mode(), "checks": self.checks, "pass": not self.failures,
            "max_ratio": self.max_ratio, "bound": self.bound, "failures": self.failures[:25],
            "failure_count": len(self.failures),
        }
        out.update(self.extra)
        out.update(flags)
        return jsonable(out)


def _grid(rng: random.Random, lo=-4, hi=4, dens=(1, 2, 3, 4)) -> Fraction:
    return Fraction(rng.randint(lo, hi), rng.choice(dens))


def _random_coeffs(rng, max_index: int, max_support: int, nonzero=True, mode: str | None = None) -> Coeffs:
    k = rng.randint(1, max_support)
    idx = rng.sample(range(1, max_index + 1), min(k, max_index))
    vals = {}
    for i in idx:
        v = _grid(rng)
        while nonzero and v == 0:
            v = _grid(rng)
        vals[i] = v
    return Coeffs(vals, mode)


# brute-force references


def jp_brute_power(p, a: Coeffs):
    """max over every disjoint interval family in [1, N] of Σ |interval sum|^p."""
    N = a.max_index()
    den = math.lcm(*[v.denominator for _, v in a.items()]) if a.items() else 1
    ints = [int(a[i] * den) for i in range(1, N + 1)]
    pre = [0]
    for v in ints:
        pre.append(pre[-1] + v)
    sums = {(k, m): abs(pre[m] - pre[k - 1]) for k in range(1, N + 1) for m in range(k, N + 1)}
    exact = isinstance(p, int)
    best = 0
    for fam in enumerate_interval_families(N):
        if exact:
            s = sum(sums[I] ** p for I in fam)
        else:
            s = math.fsum(float(sums[I]) ** p for I in fam)
        if s > best:
            best = s
    if exact:
        return Fraction(best, den ** p)
    return best / float(den) ** p


def tsirelson_brute(spec: TsirelsonSpec, a: Coeffs):
    """Recursion over every subset of the support and every split into successive pieces."""
    items = {i: abs(v) for i, v in a.items()}
    theta = spec.theta

    @lru_cache(maxsize=None)
    def N(S: tuple):
        if not S:
            return Fraction(0)
        best = max(items[i] for i in S)
        n = len(S)
        for cuts in range(1, n):
            for pos in itertools.combinations(range(1, n), cuts):
                bounds = (0,) + pos + (n,)
                Es = [S[bounds[r]:bounds[r + 1]] for r in range(len(bounds) - 1)]
                if is_admissible(spec.family, Es):
                    v = theta * sum(N(E) for E in Es)
                    if v > best:
                        best = v
        return best

    # norms of sub-vectors: restricting to a subset S only loses mass, so N over all subsets is covered
    supp = tuple(sorted(items))
    best = Fraction(0)
    for r in range(1, len(supp) + 1):
        for S in itertools.combinations(supp, r):
            best = max(best, N(S))
    return best


# suites


def suite_jp(trials: int, seed: int) -> dict:
    run = _Run("jp-dp-vs-bruteforce", trials, seed)
    ps = (1, Fraction(3, 2), 2, 3)
    for t in range(trials):
        rng = run.rng(t)
        p = ps[t % len(ps)]
        a = _random_coeffs(rng, 10, 10, mode=EXACT)
        if isinstance(p, Fraction):
            fast = float(jp_power(1.5, a))
            ref = jp_brute_power(1.5, a)
            ok = abs(fast - ref) <= EQ_TOL * max(1.0, ref)
        else:
            fast = jp_power(p, a)
            ref = jp_brute_power(p, a)
            ok = fast == ref
        run.check(ok, t, p=p, a=a, dp=fast, brute=ref)
    # the comparison is an exactness check, so it always runs on rationals
    return run.report(mode=EXACT)


TSIRELSON_PINS = (({2: 1, 3: 1}, Fraction(1)), ({2: 1, 3: 1, 4: 1, 5: 1}, Fraction(3, 2)))


def suite_tsirelson(trials: int, seed: int) -> dict:
    run = _Run("tsirelson-recursion", trials, seed)
    spec = TsirelsonSpec("schreier", Fraction(1, 2))
    for a, want in TSIRELSON_PINS:
        a = Coeffs(a, EXACT)
        got = norm_tsirelson(spec, a)
        run.check(got == want, None, a=a, value=got, pinned=want)
    for t in range(trials):
        rng = run.rng(t)
        a = _random_coeffs(rng, 12, 7, mode=EXACT)
        fast = norm_tsirelson(spec, a)
        ref = tsirelson_brute(spec, a)
        run.check(fast == ref, t, a=a, recursion=fast, brute=ref)
    return run.report(mode=EXACT)


def suite_submult(trials: int, seed: int) -> dict:
    run = _Run("submult-2", trials, seed)
    spaces = (JamesSpec(lp(1), "variation"), JamesSpec(lp(2), "variation"))
    run.bound = 2
    for t in range(trials):
        rng = run.rng(t)
        space = spaces[t % 2]
        a = _random_coeffs(rng, 8, 8)
        b = _random_coeffs(rng, 8, 8)
        lhs, rhs, ok = check_submultiplicative(space, a, b)
        na_nb = rhs / 2
        if na_nb:
            run.ratio(lhs / na_nb)
        run.check(ok, t, space=space.base.name, a=a, b=b, lhs=lhs, rhs=rhs)
    return run.report()


def _interleaving(rng, length: int, top: int):
    """k_1 <= m_1 < k_2 <= m_2 < ... inside [1, top]."""
    pts = sorted(rng.sample(range(1, top + 1), 2 * length))
    ks, ms = pts[0::2], pts[1::2]
    # allow k_i = m_i now and then
    ms = [k if rng.random() < 0.2 else m for k, m in zip(ks, ms)]
    return ks, ms


def suite_dominance(trials: int, seed: int) -> dict:
    run = _Run("dominance-5C", trials, seed)
    T = tsirelson_oracle(TsirelsonSpec("schreier", Fraction(1, 2)))
    W = double(T)
    worst = {"schreier-tsirelson": Fraction(0), "double": Fraction(0)}
    for t in range(trials):
        rng = run.rng(t)
        X, C, name = (T, 1, "schreier-tsirelson") if t % 2 == 0 else (W, 5, "double")
        length = rng.randint(1, 4)
        ks, ms = _interleaving(rng, length, 14)
        a = Coeffs({m: _grid(rng, 1, 4) * rng.choice((-1, 1)) for m in ms})
        lhs, rhs, ok = check_right_dominant(X, ks, ms, a, C)
        base = rhs / C
        if base:
            worst[name] = max(worst[name], lhs / base)
        run.check(ok, t, space=name, ks=ks, ms=ms, a=a, lhs=lhs, rhs=rhs)
    run.extra["max_ratio_by_space"] = worst
    run.extra["constants"] = {"schreier-tsirelson": 1, "double": 5}
    run.max_ratio = max(worst["schreier-tsirelson"], worst["double"] / 5)
    run.bound = 1
    return run.report()


def suite_complemented(trials: int, seed: int) -> dict:
    run = _Run("complemented-1p2C", trials, seed)
    X = lp(2)
    for t in range(trials):
        rng = run.rng(t)
        a = _random_coeffs(rng, 10, 8)
        ratio, bound, ok = check_complemented_projection(X, a, 1)
        run.ratio(ratio, bound)
        run.check(ok, t, a=a, ratio=ratio, bound=bound)
    return run.report()


UTC_OUTERS = ("james(lp:2)", "bv1", "tsirelson(schreier,1/2)")


def suite_utc_column(trials: int, seed: int) -> dict:
    run = _Run("utc-column", trials, seed)
    cfgs = [UtcConfig(o) for o in UTC_OUTERS]
    for t in range(trials):
        rng = run.rng(t)
        cfg = cfgs[t % len(cfgs)]
        i0 = rng.randint(1, 12)
        a = _random_coeffs(rng, i0, min(i0, 6))
        lhs = norm_utc(cfg, column(a, i0))
        rhs = cfg.outer(a)
        run.check(lhs == rhs, t, outer=cfg.outer.name, i0=i0, a=a, utc=lhs, outer_norm=rhs)
    return run.report()


def suite_c0_maxrule(trials: int, seed: int) -> dict:
    run = _Run("c0-maxrule", trials, seed)
    cfgs = [UtcConfig(o) for o in ("lp:2", "james(lp:2)", "bv1")]
    for t in range(trials):
        rng = run.rng(t)
        cfg = cfgs[t % len(cfgs)]
        split = rng.randint(2, 6)
        y = BlockVec({k: _random_coeffs(rng, split - 1, 2) for k in range(1, split) if rng.random() < 0.7})
        w_parts = {}
        for k in range(split, split + rng.randint(1, 3)):
            w_parts[k] = Coeffs({i: _grid(rng) or Fraction(1) for i in rng.sample(range(split, split + 6), 2)})
        w = BlockVec(w_parts)
        if y.is_zero():
            y = BlockVec({1: Coeffs({1: 1})})
        lhs, rhs, ok = check_disjoint_max(cfg, y, w)
        run.check(ok, t, outer=cfg.outer.name, y=y, w=w, lhs=lhs, rhs=rhs)
    return run.report()


def suite_C0_extension(trials: int, seed: int) -> dict:
    run = _Run("C0-extension", trials, seed)
    model = toys.random_model(seed=seed)
    C0 = model.params.C0
    run.bound = C0
    top = model.params.level_cap
    for t in range(trials):
        rng = run.rng(t)
        mode = EXACT if t % 2 == 0 else FLOAT
        u = toys.random_vector(model, rng, mode=mode)
        l = u.stage
        nz = bdm.norm_Z(model, u)
        for m in sorted({l, rng.randint(l, top), top}):
            v = bdm.extend(model, l, m, u)
            if nz:
                r = bdm.norm_Z(model, v) / nz
                run.ratio(r)
                run.check(leq(r, C0, EQ_TOL) and leq(1, r, EQ_TOL), t, check="C0", u=u, m=m, ratio=r)
        if mode == EXACT:
            mid = rng.randint(l, top)
            direct = bdm.extend(model, l, top, u, "literal")
            composed = bdm.extend(model, mid, top, bdm.extend(model, l, mid, u, "literal"), "literal")
            fast = bdm.extend(model, l, top, u)
            run.check(direct == composed == fast, t, check="composition", u=u, mid=mid)
            v = fast
            a, b = sorted((rng.randint(1, top), rng.randint(1, top)))
            lhs = bdm.projection(model, a, bdm.projection(model, b, v, "literal"), "literal")
            lhs2 = bdm.projection(model, b, bdm.projection(model, a, v, "literal"), "literal")
            rhs = bdm.projection(model, a, v)
            run.check(lhs == rhs == lhs2, t, check="projection algebra", u=u, a=a, b=b)
            for g in model.nodes[1:]:
                d_fast = bdm.eval_d(model, g, v)
                d_lit = bdm.literal_d(model, g, v)
                run.check(d_fast == d_lit, t, check="d = e o P_rank", u=u, gamma=g.id)
    return run.report(nodes=len(model.nodes))


def suite_eval_analysis(trials: int, seed: int) -> dict:
    run = _Run("eval-analysis", trials, seed)
    model = toys.random_model(seed=seed)
    dmodel, _, _ = toys.dependent_toy()
    worst = 0
    for mdl, name in ((model, "random"), (dmodel, "dependent")):
        for t in range(trials):
            rng = run.rng(t)
            u = toys.random_vector(mdl, rng, stage=rng.randint(1, min(mdl.params.level_cap, 14)))
            for g in mdl.nodes[1:]:
                e, rec = est.reconstruct(mdl, g, u)
                diff = abs(e - rec)
                worst = max(worst, diff)
                lit = bdm.literal_coordinate(mdl, g, u)
                ok = diff <= 1e-10 and e == lit and bdm.eval_e(mdl, g, u) == bdm.eval_d(mdl, g, u) + bdm.eval_c(
                    mdl, g, u)
                run.check(ok, t, model=name, gamma=g.id, u=u, e=e, reconstructed=rec, literal=lit)
    run.extra["max_abs_error"] = worst
    return run.report(nodes=len(model.nodes) - 1 + len(dmodel.nodes) - 1)


def suite_aux(trials: int, seed: int) -> dict:
    run = _Run("aux-estimates", trials, seed)
    params = MixedParams((4, 16), (16, 64))
    rows = []
    for j0 in (1,):
        for h in (1, 2, 3):
            for omit in (False, True):
                if omit and h == j0:
                    continue
                value, bound, ok = check_aux_estimate(params, j0, h, omit)
                rows.append({"j0": j0, "h": h, "omit_j0": omit, "value": value, "bound": bound})
                if bound:
                    run.ratio(value / bound, 1)
                run.check(ok, None, j0=j0, h=h, omit_j0=omit, value=value, bound=bound)
    run.extra["rows"] = rows
    return run.report(toy=True, label=est.TOY_LABEL)


def suite_ris(trials: int, seed: int) -> dict:
    run = _Run("ris-average", trials, seed)
    model = bdm.build_model(toys.toy_params(level_cap=140))
    zs = toys.staggered_ris(model, 64)
    rep = est.check_ris(model, zs, 1, [z.stage for z in zs])
    run.check(rep["pass"], None, check="ris clauses", failures=rep["failures"])
    for j, sub in ((1, zs[:16]), (2, zs)):
        value, bound, ok = est.ris_average_bound(model, sub, j, 1)
        run.ratio(value / bound, 1)
        run.check(ok, None, check=f"average j={j}", value=value, bound=bound)
    for mt, nt in ((4, 16), (8, 64)):
        value, bound, ok = est.ris_foreign_weight_bound(model, zs[:nt], mt, nt, 1)
        run.ratio(value / bound)
        run.check(ok, None, check=f"foreign weight m~={mt} n~={nt}", value=value, bound=bound)
    zero = [bdm.YVec(1)] * 16
    value, bound, ok = est.ris_average_bound(model, zero, 1, 1)
    run.check(ok and value == 0, None, check="zero vectors")
    return run.report(toy=True, label=est.TOY_LABEL)


def suite_exact_pair(trials: int, seed: int) -> dict:
    run = _Run("exact-pair-7C", trials, seed)
    model, zs, bs, qs = toys.exact_pair_toy(1)
    z, gamma, rep = est.build_exact_pair(model, zs, 1, bs, qs)
    run.check(rep["pass"], None, check="(7C, 2j, M, 0) clauses", failures=rep["failures"])
    run.check(rep["norm_within_5A0C0C"], None, check="||z|| <= 5 A0 C0 C", norm=rep["norm"])
    e, rec = est.reconstruct(model, gamma, z)
    run.check(e == rec == 0, None, check="e_gamma*(z) = 0 via the analysis", e=e, reconstructed=rec)
    run.ratio(rep["norm"] / rep["norm_bound_5A0C0C"], 1)
    # an over-weighted vector must fail clause (iv) at a lighter weight
    model2 = bdm.build_model(toys.toy_params(level_cap=8))
    heavy = model2.add("Even0", 2, 1, b=bdm.FunctionalHandle.K(1, {1: 1}))
    target = model2.add("Even0", 4, 2, b=bdm.FunctionalHandle.zero())
    zbad = bdm.YVec(heavy.rank, {}, {heavy.id: 1})
    bad = est.check_exact_pair(model2, zbad, target, 1, 4, 1, 0)
    run.check(any(f["clause"] == "iv" and f["xi"] == heavy.id for f in bad["failures"]), None,
              check="over-weighted z is rejected", report=bad)
    return run.report(toy=True, label=est.TOY_LABEL, e_gamma=rep["e_gamma"], norm=rep["norm"])


def suite_dependent(trials: int, seed: int) -> dict:
    run = _Run("dependent-33", trials, seed)
    model, zs, comps = toys.dependent_toy(1)
    rep = est.check_dependent(model, zs, comps, 1, 1, 0)
    run.check(rep["pass"], None, check="dependent clauses", failures=rep["failures"])
    run.check(rep["per_vector_ok"], None, check="e_gamma*(z_k) = eps/m")
    run.check(rep["same_weight_ok"], None, check="same-weight bound 3C", value=rep["same_weight_max"])
    run.check(rep["average_ok"], None, check="average bound", value=rep["average"], bound=rep["average_bound"])
    run.ratio(rep["average"] / rep["average_bound"], 1)
    return run.report(toy=True, label=est.TOY_LABEL, average=rep["average"], average_bound=rep["average_bound"],
                      n=len(zs))


def suite_lowerbound(trials: int, seed: int) -> dict:
    run = _Run("lowerbound-3m2j", trials, seed)
    run.bound = 1
    for t in range(trials):
        rng = run.rng(t)
        model = bdm.build_model(toys.toy_params(level_cap=80))
        count = 1 if t == 0 else 16
        ws = []
        pos = 2
        for _ in range(count):
            width = rng.randint(1, 2)
            comps = {pos + d: _grid(rng, 1, 4) * rng.choice((-1, 1)) for d in range(width)}
            col = pos + width - 1
            ws.append(bdm.column_vector(model, comps, col))
            pos += width + 2
        gamma, value, bound, ok, rep = est.lower_bound_witness(model, ws, 1)
        if value:
            run.ratio(bound / value)
        run.check(ok and rep["consistent"] and rep["chain_estimate_ok"], t, blocks=count, value=value, bound=bound,
                  report=rep)
    return run.report(toy=True, label=est.TOY_LABEL)


def suite_calkin(trials: int, seed: int) -> dict:
    run = _Run("calkin-sandwich", trials, seed)
    models = [bdm.build_model(toys.toy_params(level_cap=16)),
              bdm.build_model(bdm.BDParams((4, 16), (16, 64), UtcConfig("bv1", inner={"default": "linf"}),
                                           level_cap=16))]
    run.bound = 1
    for t in range(trials):
        rng = run.rng(t)
        model = models[t % 2]
        X = model.params.utc.outer
        n = rng.randint(0, 4)
        a = [_grid(rng)] + [_grid(rng) for _ in range(n)]
        i0 = rng.randint(n + 1, 8)
        b = _random_coeffs(rng, i0, 3)
        nb = X(b)
        b = b.scale(Fraction(1) / est._rational_ceiling(nb))
        rep = est.calkin_witness(model, a, i0, b, seed=t)
        if rep["upper"]:
            run.ratio(rep["lower"] / rep["upper"])
        run.check(rep["consistent"] and rep["norm_x_within_C0"], t, outer=X.name, a=a, i0=i0, b=b, report=rep)
    return run.report(toy=True, label=est.TOY_LABEL)


def suite_ideal(trials: int, seed: int) -> dict:
    run = _Run("ideal-lattice", trials, seed)
    rep = diagalg.check_ideal_lattice(seed=seed)
    run.checks += rep["pairs"]
    for f in rep["failures"]:
        run.check(False, None, **f)
    return run.report(mode=EXACT, specs=rep["specs"], grid=rep["grid"], pairs=rep["pairs"])


SUITES = {
    "jp-dp-vs-bruteforce": suite_jp, "tsirelson-recursion": suite_tsirelson, "submult-2": suite_submult,
    "dominance-5C": suite_dominance, "complemented-1p2C": suite_complemented, "utc-column": suite_utc_column,
    "c0-maxrule": suite_c0_maxrule, "C0-extension": suite_C0_extension, "eval-analysis": suite_eval_analysis,
    "aux-estimates": suite_aux, "ris-average": suite_ris, "exact-pair-7C": suite_exact_pair,
    "dependent-33": suite_dependent, "lowerbound-3m2j": suite_lowerbound, "calkin-sandwich": suite_calkin,
    "ideal-lattice": suite_ideal,
}

TOY_SUITES = ("aux-estimates", "ris-average", "exact-pair-7C", "dependent-33", "lowerbound-3m2j", "calkin-sandwich")


def run_suite(name: str, trials: int | None = None, seed: int = 0) -> dict:
    if name not in SUITES:
        raise KeyError(name)
    return SUITES[name](DEFAULT_TRIALS[name] if trials is None else int(trials), int(seed))
