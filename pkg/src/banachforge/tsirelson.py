"""Exact norms of Tsirelson spaces T_M^θ and mixed-Tsirelson spaces W[(A_{l_j}, θ_j)].

Both norms are 1-unconditional, so everything is computed on |a|.  The
search runs over runs of consecutive support entries:

* gaps between support entries can be absorbed into the neighbouring set
  without changing its minimum, and the tail after the last set can be
  absorbed into the last set, so each E_k may be taken to be a run;
* by spreading, the minimum of each E_k may be moved up to its first
  support entry, so admissibility is tested on run minima;
* splits into a single set are useless because θ < 1.
"""
from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache

from .core import EXACT, CapError, Coeffs, NormOracle, OrderingError, SpecError, leq, to_scalar
from .families import FamilySpec, is_regular, member, parse_family

SUPPORT_CAP = 16
AUX_GUARD = 64


class TsirelsonSpec:
    def __init__(self, family: FamilySpec | str, theta):
        if isinstance(family, str):
            family = parse_family(family)
        self.family = family
        if not isinstance(theta, float):
            theta = to_scalar(theta, EXACT)
        if not 0 < theta < 1:
            raise SpecError(f"theta must lie in (0,1), got {theta}")
        self.theta = theta
        if family.kind in ("explicit", "osz"):
            cap = family.cap or max((s[-1] for s in family.sets if s), default=1)
            if not is_regular(family, min(cap, 14)):
                raise SpecError(f"{family.describe()} is not regular")

    def describe(self) -> str:
        return f"tsirelson({self.family.describe()},{self.theta})"

    def __repr__(self):
        return f"TsirelsonSpec({self.describe()})"


def _abs_items(a: Coeffs, cap: int = SUPPORT_CAP):
    items = [(i, abs(v)) for i, v in a.items()]
    if len(items) > cap:
        raise CapError(f"support {len(items)} exceeds the cap {cap}")
    return [i for i, _ in items], [v for _, v in items]


def _zero(a: Coeffs):
    return Fraction(0) if a.mode == EXACT else 0.0


def norm_tsirelson(spec: TsirelsonSpec, a: Coeffs):
    """max(||a||_∞, θ · max over admissible E_1 < ... < E_n (n >= 2) of Σ ||E_k a||)."""
    pos, val = _abs_items(a)
    n = len(val)
    zero = _zero(a)
    if n == 0:
        return zero
    theta = spec.theta if a.mode == EXACT else float(spec.theta)
    fam = spec.family

    @lru_cache(maxsize=None)
    def N(i: int, j: int):
        # norm of the entries i..j (inclusive, 0-based into the support list)
        best = max(val[i:j + 1])
        if i == j:
            return best
        for s in range(i, j):
            v = theta * split(s, j)
            if v > best:
                best = v
        return best

    if fam.is_size_bounded():
        @lru_cache(maxsize=None)
        def Q(s: int, e: int, c: int):
            # best Σ N(run) over partitions of s..e into at most c runs
            best = N(s, e)
            if c >= 2:
                for t in range(s, e):
                    v = N(s, t) + Q(t + 1, e, c - 1)
                    if v > best:
                        best = v
            return best

        def split(s: int, e: int):
            c = fam.size_bound(pos[s])
            if c < 2:
                return zero
            best = zero
            for t in range(s, e):
                v = N(s, t) + Q(t + 1, e, c - 1)
                if v > best:
                    best = v
            return best
    else:
        def split(s: int, e: int):
            best = [zero]

            def dfs(start: int, mins: tuple, acc):
                for t in range(start, e + 1):
                    # run start..t, then either stop (if t == e) or continue
                    m = mins + (pos[start],)
                    if t == e:
                        if len(m) >= 2 and acc + N(start, t) > best[0]:
                            best[0] = acc + N(start, t)
                    elif member(fam, m + (pos[t + 1],)):
                        dfs(t + 1, m, acc + N(start, t))

            if member(fam, (pos[s],)):
                dfs(s, (), zero)
            return best[0]

    return N(0, n - 1)


def tsirelson_oracle(spec: TsirelsonSpec) -> NormOracle:
    return NormOracle(spec.describe(), lambda a: norm_tsirelson(spec, a), 1, True, True, tsirelson=spec)


# mixed Tsirelson


class MixedParams:
    """Weights θ_j = 1/m_j and lengths l_j (j = 1, 2, ...).

    The given ladder is extended past its end by doubling m and n, so
    θ_{j+1} = θ_j / 2 and l_{j+1} = 2 l_j there.
    """

    def __init__(self, m, n, l_factor: int = 4, omit=()):
        self.m = tuple(int(v) for v in m)
        self.n = tuple(int(v) for v in n)
        if len(self.m) != len(self.n) or not self.m:
            raise SpecError("m and n must be nonempty and of equal length")
        if any(b <= a for a, b in zip(self.m, self.m[1:])) or any(b <= a for a, b in zip(self.n, self.n[1:])):
            raise SpecError("m and n must be strictly increasing")
        if self.m[0] < 2:
            raise SpecError("m_1 must be at least 2 so that θ_1 < 1")
        self.l_factor = int(l_factor)
        self.omit = frozenset(omit)
        self.compliant = is_compliant(self.m, self.n)

    def m_j(self, j: int) -> int:
        if j <= len(self.m):
            return self.m[j - 1]
        return self.m[-1] * 2 ** (j - len(self.m))

    def n_j(self, j: int) -> int:
        if j <= len(self.n):
            return self.n[j - 1]
        return self.n[-1] * 2 ** (j - len(self.n))

    def theta(self, j: int) -> Fraction:
        return Fraction(1, self.m_j(j))

    def l(self, j: int) -> int:
        return self.l_factor * self.n_j(j)

    def without(self, j0: int) -> "MixedParams":
        return MixedParams(self.m, self.n, self.l_factor, self.omit | {j0})

    def describe(self) -> str:
        s = f"mixed(m={','.join(map(str, self.m))};n={','.join(map(str, self.n))};l={self.l_factor}n)"
        return s + (f"[omit {sorted(self.omit)}]" if self.omit else "")


def is_compliant(m, n) -> bool:
    """m_1 >= 4, m_{j+1} >= m_j^2, n_1 >= m_1^2, n_{j+1} >= (16 n_j)^{log2 m_{j+1}}."""
    if m[0] < 4 or n[0] < m[0] ** 2:
        return False
    for j in range(len(m) - 1):
        if m[j + 1] < m[j] ** 2:
            return False
        if n[j + 1] < (16 * n[j]) ** math.log2(m[j + 1]):
            return False
    return True


def ladder_cap(params: MixedParams, vals) -> int:
    """J* = max{j : θ_j ||y||_1 >= ||y||_∞}; heavier weights cannot beat ||y||_∞."""
    l1, sup = sum(vals), max(vals)
    j = 0
    while params.theta(j + 1) * l1 >= sup:
        j += 1
    return j


def norm_mixed(params: MixedParams, a: Coeffs, weight_filter: int | None = None, cap_offset: int = 0,
               support_cap: int = SUPPORT_CAP):
    """sup over f in W of f(|a|); with ``weight_filter=h`` only type-1 f of weight θ_h.

    Each recursive evaluation scans weights j <= J*(y) + cap_offset for its
    own restriction y; ``cap_offset`` exists to check that the cut is exact.
    """
    _, val = _abs_items(a, support_cap)
    zero = _zero(a)
    if not val:
        return zero
    exact = a.mode == EXACT
    th = (lambda j: params.theta(j)) if exact else (lambda j: float(params.theta(j)))

    @lru_cache(maxsize=None)
    def N(seg: tuple):
        best = max(seg)
        if len(seg) == 1:
            return best
        top = ladder_cap(params, seg) + cap_offset
        for j in range(1, top + 1):
            if j in params.omit:
                continue
            v = th(j) * Q2(seg, min(params.l(j), len(seg)))
            if v > best:
                best = v
        return best

    @lru_cache(maxsize=None)
    def Q(seg: tuple, c: int):
        # at most c runs
        best = N(seg)
        if c >= 2:
            v = Q2(seg, c)
            if v > best:
                best = v
        return best

    @lru_cache(maxsize=None)
    def Q2(seg: tuple, c: int):
        # at least two and at most c runs
        if c < 2 or len(seg) < 2:
            return zero
        best = zero
        for t in range(1, len(seg)):
            v = N(seg[:t]) + Q(seg[t:], c - 1)
            if v > best:
                best = v
        return best

    seg = tuple(val)
    if weight_filter is None:
        return N(seg)
    h = weight_filter
    if h in params.omit:
        return zero
    return th(h) * Q(seg, min(params.l(h), len(seg)))


def mixed_oracle(params: MixedParams) -> NormOracle:
    return NormOracle(params.describe(), lambda a: norm_mixed(params, a), 1, True, True, mixed=params)


def aux_bound(params: MixedParams, j0: int, h: int, omit_j0: bool = False):
    mh, mj0 = params.m_j(h), params.m_j(j0)
    if h < j0:
        return Fraction(2, mh * mj0 * (mj0 if omit_j0 else 1))
    return Fraction(1, mh)


def check_aux_estimate(params: MixedParams, j0: int, h: int, omit_j0: bool = False):
    """Weight-θ_h norm of the average of t_1..t_{n_{j0}} against its bound.

    With ``omit_j0`` the ladder loses weight j0 and the sharper bound
    2/(m_h m_{j0}^2) applies for h < j0 (the case h = j0 is then empty).
    """
    nj0 = params.n_j(j0)
    if nj0 > AUX_GUARD:
        raise CapError(f"n_{j0} = {nj0} exceeds the desk guard {AUX_GUARD}")
    if omit_j0 and h == j0:
        raise SpecError("with weight j0 omitted there are no functionals of weight θ_{j0}")
    p = params.without(j0) if omit_j0 else params
    avg = Coeffs({i: Fraction(1, nj0) for i in range(1, nj0 + 1)}, EXACT)
    # a constant vector has few distinct segments, so the desk guard suffices here
    value = norm_mixed(p, avg, weight_filter=h, support_cap=AUX_GUARD)
    bound = aux_bound(params, j0, h, omit_j0)
    return value, bound, value <= bound


def check_subsequential_domination(X: NormOracle, blocks, spec: TsirelsonSpec, C):
    """lhs = ||Σ y_i||_X, rhs = C ||Σ ||y_i||_X t_{k_i}||_T with k_i = min supp y_i."""
    blocks = [b for b in blocks]
    for y in blocks:
        if y.is_zero():
            raise OrderingError("blocks must be nonzero")
    for y, z in zip(blocks, blocks[1:]):
        if not y.max_index() < z.support()[0]:
            raise OrderingError("blocks must be successive")
    if not blocks:
        return 0, 0, True
    mode = blocks[0].mode
    total = blocks[0]
    for y in blocks[1:]:
        total = total + y
    lhs = X(total)
    coeffs = {y.support()[0]: X(y) for y in blocks}
    if mode == EXACT and not all(isinstance(v, Fraction) for v in coeffs.values()):
        mode = "float"
        coeffs = {k: float(v) for k, v in coeffs.items()}
    rhs = C * norm_tsirelson(spec, Coeffs(coeffs, mode))
    return lhs, rhs, leq(lhs, rhs)
