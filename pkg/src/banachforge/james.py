"""James-type norms: J_p, the jamesification J(X), the variation form, and
the dominance / submultiplicativity / complementation checks built on them.

All of these norms are suprema over disjoint segmentations.  Only runs of
consecutive support entries matter for the interval sums, so the searches
below run over the support list rather than over literal index intervals;
literal-interval brute force lives in the tests as an independent oracle.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .core import (
    EXACT,
    CapError,
    Coeffs,
    NormOracle,
    OrderingError,
    SpecError,
    is_exact,
    leq,
    lp,
    normalize_p,
    root,
)

EXHAUSTIVE_CAP = 14


def _zero(a: Coeffs):
    return Fraction(0) if a.mode == EXACT else 0.0


def _pow(v, p):
    """|v|^p, exact when v is rational and p an integer."""
    v = abs(v)
    if isinstance(p, int) and is_exact(v):
        return v**p
    return float(v) ** float(p)


def _check_p(p):
    p = normalize_p(p)
    if p == math.inf or p < 1:
        raise SpecError(f"James-type p must satisfy 1 <= p < inf, got {p}")
    return p


def jp_power(p, a: Coeffs):
    """max over disjoint interval families of sum |interval sum|^p.

    best[i] is the optimum using support entries 1..i; the last interval
    either ends before i or is exactly (k..i) for some k.
    """
    p = _check_p(p)
    vals = [v for _, v in a.items()]
    n = len(vals)
    zero = _zero(a)
    pref = [zero]
    for v in vals:
        pref.append(pref[-1] + v)
    best = [zero] * (n + 1)
    for i in range(1, n + 1):
        b = best[i - 1]
        for k in range(1, i + 1):
            c = best[k - 1] + _pow(pref[i] - pref[k - 1], p)
            if c > b:
                b = c
        best[i] = b
    return best[n]


def norm_jp(p, a: Coeffs):
    p = _check_p(p)
    return root(jp_power(p, a), p)


def _symmetric_p(X: NormOracle):
    """p if X is a (non-truncated) ℓ_p oracle, else None."""
    p = X.meta.get("p")
    if p is None or X.meta.get("dim") is not None or p == math.inf:
        return None
    return p


def _require_unconditional(X: NormOracle):
    if not X.unconditional:
        raise SpecError(f"{X.name} is not unconditional; James constructions need an unconditional base")


def norm_jamesification(X: NormOracle, a: Coeffs, method: str = "auto"):
    """sup over k_1<=m_1<k_2<=m_2<... of ||sum_n (sum_{i=k_n}^{m_n} a_i) x_{k_n}||_X.

    ``method='auto'`` uses the J_p program for ℓ_p bases and the exhaustive
    branch-and-bound search otherwise; ``'exhaustive'`` forces the search.
    """
    _require_unconditional(X)
    p = _symmetric_p(X)
    if method == "auto" and p is not None:
        return norm_jp(p, a)
    if method not in ("auto", "exhaustive"):
        raise ValueError(f"unknown method {method!r}")
    items = a.items()
    if len(items) > EXHAUSTIVE_CAP:
        raise CapError(f"exhaustive jamesification capped at support {EXHAUSTIVE_CAP}")
    pos = [i for i, _ in items]
    vals = [v for _, v in items]
    n = len(vals)
    zero = _zero(a)
    tail = [zero] * (n + 1)
    for i in range(n - 1, -1, -1):
        tail[i] = tail[i + 1] + abs(vals[i])
    best = [zero]

    def value(acc):
        return X(Coeffs(dict(acc), a.mode)) if acc else zero

    def dfs(i: int, lo: int, acc: tuple):
        cur = value(acc)
        if cur > best[0]:
            best[0] = cur
        if i == n or cur + tail[i] <= best[0]:
            return
        # leave pos[i] outside every interval
        dfs(i + 1, pos[i], acc)
        s = zero
        for j in range(i, n):
            s += vals[j]
            if s == 0:
                # a zero block adds nothing; the skip branch already covers it
                continue
            for k in range(pos[i], lo, -1):
                dfs(j + 1, pos[j], acc + ((k, s),))

    dfs(0, 0, ())
    return best[0]


def variation_power(p, a: Coeffs):
    """max over chains k_1<m_1<=k_2<m_2<=... of sum |a_k - a_m|^p (ℓ_p base).

    Positions run over 1..N+1 so that the drop to the trailing zero counts.
    best[j] is the optimum over chains whose last m is <= j.
    """
    p = _check_p(p)
    N = a.max_index() + 1
    v = [None] + [a[i] for i in range(1, N + 1)]
    zero = _zero(a)
    best = [zero] * (N + 1)
    for j in range(2, N + 1):
        b = best[j - 1]
        for k in range(1, j):
            c = best[k] + _pow(v[k] - v[j], p)
            if c > b:
                b = c
        best[j] = b
    return best[N]


def norm_variation(X: NormOracle, a: Coeffs, method: str = "auto"):
    """sup over 1<=k_1<m_1<=k_2<m_2<=... of ||sum_n (a_{k_n} - a_{m_n}) x_{k_n}||_X."""
    _require_unconditional(X)
    p = _symmetric_p(X)
    if method == "auto" and p is not None:
        return root(variation_power(p, a), p)
    N = a.max_index() + 1
    if N - 1 > EXHAUSTIVE_CAP:
        raise CapError(f"exhaustive variation search capped at max index {EXHAUSTIVE_CAP}")
    v = [None] + [a[i] for i in range(1, N + 1)]
    zero = _zero(a)
    # tv[k] bounds what any chain starting at k or later can add
    tv = [zero] * (N + 2)
    for k in range(N - 1, 0, -1):
        tv[k] = tv[k + 1] + abs(v[k] - v[k + 1])
    best = [zero]

    def value(acc):
        return X(Coeffs(dict(acc), a.mode)) if acc else zero

    def dfs(lo: int, acc: tuple):
        cur = value(acc)
        if cur > best[0]:
            best[0] = cur
        if lo >= N or cur + tv[lo] <= best[0]:
            return
        for k in range(lo, N):
            for m in range(k + 1, N + 1):
                d = v[k] - v[m]
                if d != 0:
                    dfs(m, acc + ((k, d),))

    dfs(1, ())
    return best[0]


def summing_functional(a: Coeffs):
    return a.sum()


# built-in bases with conditional structure


def bv1() -> NormOracle:
    """sum_i |a_i - a_{i+1}| + lim |a_i| on finitely supported sequences."""

    def fn(a: Coeffs):
        N = a.max_index()
        return sum((abs(a[i] - a[i + 1]) for i in range(1, N + 1)), _zero(a))

    return NormOracle("bv1", fn, bimonotone_constant=2, unconditional=False, normalized=False)


def summing_c() -> NormOracle:
    """The summing basis of c: sup_n |a_1 + ... + a_n|."""

    def fn(a: Coeffs):
        s, best = _zero(a), _zero(a)
        for _, v in a.items():
            s += v
            best = max(best, abs(s))
        return best

    return NormOracle("summing-c", fn, bimonotone_constant=2, unconditional=False, normalized=True)


def jp_oracle(p) -> NormOracle:
    p = _check_p(p)
    return NormOracle(f"jp:{p}", lambda a: norm_jp(p, a), 1, False, True, james_p=p)


def james(X: NormOracle) -> NormOracle:
    _require_unconditional(X)
    return NormOracle(f"james({X.name})", lambda a: norm_jamesification(X, a), 1, False, True,
                      base=X, flavor="jamesification")


def variation(X: NormOracle) -> NormOracle:
    _require_unconditional(X)
    # ||e_i|| = 2^{1/p} for i >= 2 over ℓ_p, so the basis is not normalized
    return NormOracle(f"variation({X.name})", lambda a: norm_variation(X, a), None, False, False,
                      base=X, flavor="variation")


def double(X: NormOracle) -> NormOracle:
    """(X ⊕ X)_∞ with w_{2i-1} = (x_i, 0) and w_{2i} = (0, x_i)."""
    _require_unconditional(X)

    def fn(a: Coeffs):
        odd = Coeffs({(i + 1) // 2: v for i, v in a.items() if i % 2 == 1}, a.mode)
        even = Coeffs({i // 2: v for i, v in a.items() if i % 2 == 0}, a.mode)
        return max(X(odd), X(even))

    return NormOracle(f"double({X.name})", fn, 1, True, X.normalized, base=X, doubled=True)


@dataclass(frozen=True)
class JamesSpec:
    base: NormOracle | None
    flavor: str
    p: object = None

    def __post_init__(self):
        if self.flavor == "jp":
            _check_p(self.p)
        elif self.flavor in ("jamesification", "variation"):
            _require_unconditional(self.base)
        else:
            raise SpecError(f"unknown James flavor {self.flavor!r}")

    def norm(self, a: Coeffs):
        if self.flavor == "jp":
            return norm_jp(self.p, a)
        if self.flavor == "jamesification":
            return norm_jamesification(self.base, a)
        return norm_variation(self.base, a)

    def power_p(self):
        """Integer p for which exact p-th power norms are available, else None."""
        if self.flavor == "jp":
            p = normalize_p(self.p)
        else:
            p = _symmetric_p(self.base)
        return p if isinstance(p, int) else None

    def norm_power(self, a: Coeffs):
        p = self.power_p()
        if self.flavor == "jp":
            return jp_power(p, a)
        if self.flavor == "jamesification":
            return jp_power(p, a)
        return variation_power(p, a)


SUBMULT_CONSTANT = 2


def check_submultiplicative(space: JamesSpec, a: Coeffs, b: Coeffs):
    """lhs = ||a·b||, rhs = 2||a|| ||b||.

    With an integer-p ℓ_p base and exact inputs the comparison is made on
    p-th powers, so the pass flag carries no rounding at all.
    """
    ab = a * b
    p = space.power_p()
    if p is not None and a.mode == EXACT:
        la, pa, pb = space.norm_power(ab), space.norm_power(a), space.norm_power(b)
        ok = la <= SUBMULT_CONSTANT**p * pa * pb
        return root(la, p), SUBMULT_CONSTANT * root(pa, p) * root(pb, p), ok
    lhs = space.norm(ab)
    rhs = SUBMULT_CONSTANT * space.norm(a) * space.norm(b)
    return lhs, rhs, leq(lhs, rhs)


def check_interleaving(ks, ms, relaxed: bool = False):
    """Strict: k_1<=m_1<k_2<=m_2<...; relaxed: k_1<m_1<=k_2<m_2<=..."""
    if len(ks) != len(ms):
        raise OrderingError("ks and ms must have equal length")
    prev = 0
    for k, m in zip(ks, ms):
        if relaxed:
            ok = prev <= k < m if prev else 1 <= k < m
        else:
            ok = prev < k <= m
        if not ok:
            raise OrderingError(f"interleaving violated at (k,m)=({k},{m})")
        prev = m


def check_right_dominant(X: NormOracle, ks, ms, a: Coeffs, C, relaxed: bool = False):
    """lhs = ||sum a_{m_i} x_{k_i}||, rhs = C' ||sum a_{m_i} x_{m_i}|| with C' = C
    for strict interleaving and 2C for the relaxed one."""
    check_interleaving(ks, ms, relaxed)
    left = Coeffs({k: a[m] for k, m in zip(ks, ms)}, a.mode)
    right = Coeffs({m: a[m] for m in ms}, a.mode)
    const = 2 * C if relaxed else C
    lhs, rhs = X(left), const * X(right)
    return lhs, rhs, leq(lhs, rhs)


def even_projection(a: Coeffs) -> Coeffs:
    """Q a = sum_i a_{2i} (e_{2i} - e_{2i-1})."""
    out = {}
    for i, v in a.items():
        if i % 2 == 0:
            out[i] = v
            out[i - 1] = -v
    return Coeffs(out, a.mode)


def check_complemented_projection(X: NormOracle, a: Coeffs, C):
    """ratio = ||Qa||_{J(X)} / ||a||_{J(X)} against 1 + 2C."""
    bound = 1 + 2 * C
    na = norm_jamesification(X, a)
    if na == 0:
        return _zero(a), bound, True
    ratio = norm_jamesification(X, even_projection(a)) / na
    return ratio, bound, leq(ratio, bound)


def doubled_difference_ratio(X: NormOracle, a: Coeffs, C_W):
    """||sum a_i (e_{2i} - e_{2i-1})||_{J(W)} / ||sum a_i x_i||_X for W = double(X).

    Returns (ratio, lower, upper) with lower = 1 and upper = 1 + 2 C_W where
    C_W is the right-dominance constant of the doubled basis.
    """
    W = double(X)
    v = Coeffs({j: c for i, val in a.items() for j, c in ((2 * i, val), (2 * i - 1, -val))}, a.mode)
    nx = X(a)
    upper = 1 + 2 * C_W
    if nx == 0:
        return _zero(a), 1, upper
    return norm_jamesification(W, v) / nx, 1, upper


__all__ = [
    "JamesSpec", "bv1", "summing_c", "check_complemented_projection", "check_interleaving",
    "check_right_dominant", "check_submultiplicative", "double", "doubled_difference_ratio",
    "even_projection", "james", "jp_oracle", "jp_power", "lp", "norm_jamesification", "norm_jp",
    "norm_variation", "summing_functional", "variation", "variation_power",
]
